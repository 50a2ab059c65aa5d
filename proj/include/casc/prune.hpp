#ifndef CASC_PRUNE_HPP
#define CASC_PRUNE_HPP

#include <cassert>
#include <cmath>
#include <limits>
#include <vector>

#include "casc/error.hpp"
#include "casc/eval.hpp"
#include "casc/graph.hpp"
#include "casc/hypothesis.hpp"

namespace casc {

// gamma(e) = alpha(tail) + w(e) + beta(head): the best score of an
// accepting path through e; neg_inf for edges on no accepting path.
inline std::vector<double> max_marginals(decoding_graph const& g)
{
    check_scored(g);
    std::vector<double> alpha = forward_scores(g);
    std::vector<double> beta = backward_scores(g);

    std::vector<double> gamma(g.edges.size(), neg_inf);
    bool any = false;
    for (auto& e : g.edges) {
        if (alpha[e.tail] == neg_inf || beta[e.head] == neg_inf) {
            continue;
        }
        gamma[e.id] = alpha[e.tail] + e.weight + beta[e.head];
        any = true;
    }
    if (!any) {
        throw no_path("no accepting path");
    }
    return gamma;
}

// tau = (1 - lambda) * mean + lambda * best, the mean taken over
// finite max-marginals only (edges on no accepting path are pruned
// unconditionally).
inline double threshold(std::vector<double> const& gammas, double best_score,
    double lambda)
{
    assert(lambda >= 0 && lambda <= 1);
    double sum = 0;
    long count = 0;
    for (double g : gammas) {
        if (g != neg_inf) {
            sum += g;
            ++count;
        }
    }
    if (count == 0) {
        throw all_pruned("no finite max-marginals");
    }
    return (1 - lambda) * (sum / count) + lambda * best_score;
}

struct prune_report {
    double lambda = 0;
    double threshold = 0;
    long kept_edges = 0;
    long total_edges = 0;
    double density = std::numeric_limits<double>::quiet_NaN();
    double oracle_error = std::numeric_limits<double>::quiet_NaN();
};

struct prune_result {
    decoding_graph lattice;
    std::vector<int> vertex_map;   // lattice vertex id -> original
    std::vector<int> edge_map;     // lattice edge id -> original
    prune_report report;
};

// Edges of one accepting path compute gamma with different summation
// orders (forward prefix vs backward suffix), so two edges of the best
// path can disagree in the last few ulps.  The keep rule absorbs that
// rounding so exact ties and whole best paths survive intact.
constexpr double prune_slack = 1e-12;

// Keeps edges with gamma(e) >= tau (ties kept, up to summation
// rounding), so any path scoring strictly above tau survives intact
// and the best path always survives.  The kept edge set is closed
// under accepting paths, so trimming only re-densifies ids.
inline prune_result prune_to_lattice(decoding_graph const& g, double lambda)
{
    std::vector<double> gamma = max_marginals(g);
    double best = neg_inf;
    for (double x : gamma) {
        best = std::max(best, x);
    }
    double tau = threshold(gamma, best, lambda);
    double cut = tau - prune_slack * (1 + std::fabs(tau));

    decoding_graph kept;
    for (auto& v : g.vertices) {
        kept.add_vertex(v.time);
    }
    std::vector<int> kept_orig;
    for (auto& e : g.edges) {
        if (gamma[e.id] >= cut) {
            kept.add_edge(e.tail, e.head, e.input, e.output, e.weight);
            kept_orig.push_back(e.id);
        }
    }
    for (int v : g.initials) {
        kept.set_initial(v);
    }
    for (int v : g.finals) {
        kept.set_final(v);
    }

    trim_result t = trim(kept);

    prune_result result;
    result.lattice = std::move(t.graph);
    result.vertex_map = std::move(t.vertex_map);
    for (int e : t.edge_map) {
        result.edge_map.push_back(kept_orig[e]);
    }
    result.report.lambda = lambda;
    result.report.threshold = tau;
    result.report.kept_edges = long(result.lattice.edges.size());
    result.report.total_edges = long(g.edges.size());
    return result;
}

// Exact oracle error: the minimum edit distance between any accepting
// path's label sequence and the reference, by dynamic programming over
// (vertex, reference position, consumed-an-edge); enumeration would be
// infeasible on real lattices.
inline double lattice_oracle_error(decoding_graph const& g,
    std::vector<int> const& ref_in, collapse_map const* map)
{
    assert(g.sealed());
    std::vector<int> ref = map ? collapse(ref_in, *map) : ref_in;
    if (ref.empty()) {
        throw empty_reference("empty reference");
    }

    int n = int(ref.size());
    long inf = std::numeric_limits<long>::max() / 2;
    // d[v][j][used]: cheapest way to reach v matching the first j
    // reference symbols, used = whether any edge was consumed
    std::vector<std::vector<std::array<long, 2>>> d(g.vertices.size(),
        std::vector<std::array<long, 2>>(n + 1, { inf, inf }));

    for (int v : g.initials) {
        d[v][0][0] = 0;
    }
    for (int v : g.topo) {
        for (int j = 1; j <= n; ++j) {   // deletions: skip reference symbols
            for (int u = 0; u < 2; ++u) {
                d[v][j][u] = std::min(d[v][j][u], d[v][j - 1][u] + 1);
            }
        }
        for (int ei : g.out_edges[v]) {
            auto& e = g.edges[ei];
            if (e.input == eps_label) {
                for (int j = 0; j <= n; ++j) {
                    for (int u = 0; u < 2; ++u) {
                        d[e.head][j][1] = std::min(d[e.head][j][1], d[v][j][u]);
                    }
                }
                continue;
            }
            int sym = map ? collapse_one(e.input, *map) : e.input;
            for (int j = 0; j <= n; ++j) {
                for (int u = 0; u < 2; ++u) {
                    if (d[v][j][u] == inf) {
                        continue;
                    }
                    // insertion: hypothesis symbol with no counterpart
                    d[e.head][j][1] = std::min(d[e.head][j][1], d[v][j][u] + 1);
                    if (j < n) {
                        d[e.head][j + 1][1] = std::min(d[e.head][j + 1][1],
                            d[v][j][u] + (sym != ref[j]));
                    }
                }
            }
        }
    }

    long best = inf;
    for (int v : g.finals) {
        best = std::min(best, d[v][n][1]);
    }
    if (best >= inf) {
        throw no_path("no accepting path");
    }
    return double(best) / n;
}

// density = lattice edges / gold segments; oracle_error = minimum
// error rate over lattice paths.
inline void lattice_metrics(decoding_graph const& lattice,
    gold_segmentation const& gold, collapse_map const* map, prune_report& report)
{
    assert(!gold.empty());
    report.density = double(lattice.edges.size()) / double(gold.size());
    report.oracle_error = lattice_oracle_error(lattice, gold_labels(gold), map);
}

}

#endif
