#ifndef CASC_BEAM_HPP
#define CASC_BEAM_HPP

#include <algorithm>
#include <cassert>
#include <map>
#include <unordered_map>
#include <vector>

#include "casc/compose.hpp"
#include "casc/error.hpp"
#include "casc/features.hpp"
#include "casc/graph.hpp"

namespace casc {

// Time-synchronous beam over a sealed graph.  Hypotheses are merged
// per vertex (max-plus, ascending edge scan with strict improvement,
// exactly as exact search), the frontier at each time stamp is cut to
// the top `width` by partial score with ties to the lower vertex id,
// and survivors then expand; eps edges stay within the time bucket and
// expand after the cut, so the width counts states entering the time
// stamp.
template <class weight_fn>
best_path_result beam_decode(decoding_graph const& g, weight_fn&& w, int width)
{
    assert(g.sealed());
    assert(width >= 1);
    for (int v : g.initials) {
        assert(!g.is_final(v));
        (void)v;
    }

    std::vector<double> score(g.vertices.size(), neg_inf);
    std::vector<int> back(g.vertices.size(), -1);
    std::vector<char> dead(g.vertices.size(), 0);

    // buckets in ascending time, each in topological order so that
    // in-bucket eps edges expand tail before head
    std::map<int, std::vector<int>> buckets;
    for (int v : g.topo) {
        buckets[g.vertices[v].time].push_back(v);
    }

    for (int v : g.initials) {
        score[v] = 0;
    }

    for (auto& bucket : buckets) {
        std::vector<int> frontier;
        for (int v : bucket.second) {
            if (score[v] != neg_inf) {
                frontier.push_back(v);
            }
        }
        if (int(frontier.size()) > width) {
            std::sort(frontier.begin(), frontier.end(), [&](int u, int v) {
                return score[u] > score[v] || (score[u] == score[v] && u < v);
            });
            for (std::size_t i = width; i < frontier.size(); ++i) {
                dead[frontier[i]] = 1;
            }
        }
        for (int v : bucket.second) {
            if (score[v] == neg_inf || dead[v]) {
                continue;
            }
            for (int ei : g.out_edges[v]) {
                auto& e = g.edges[ei];
                double s = score[v] + w(e);
                // on exact ties keep the lowest edge id, as exact search does
                if (s > score[e.head] || (s == score[e.head] && back[e.head] != -1
                        && ei < back[e.head])) {
                    score[e.head] = s;
                    back[e.head] = ei;
                }
            }
        }
    }

    int best_final = -1;
    for (int v : g.finals) {
        if (score[v] == neg_inf || back[v] == -1) {
            continue;
        }
        if (best_final == -1 || score[v] > score[best_final]) {
            best_final = v;
        }
    }
    if (best_final == -1) {
        throw no_complete_path("beam search reached no final vertex");
    }

    path p;
    int e = back[best_final];
    while (e != -1) {
        p.edges.push_back(e);
        e = back[g.edges[e].tail];
    }
    std::reverse(p.edges.begin(), p.edges.end());
    return best_path_result { p, score[best_final] };
}

inline best_path_result beam_decode(decoding_graph const& g, int width)
{
    check_scored(g);
    return beam_decode(g, [](edge const& e) { return e.weight; }, width);
}

// Fraction of utterances where the beam path equals the exact best
// path, compared as edge sequences.
inline double hit_rate(std::vector<decoding_graph const*> const& graphs, int width)
{
    assert(!graphs.empty());
    long hits = 0;
    for (auto* g : graphs) {
        if (beam_decode(*g, width).p == best_path(*g).p) {
            ++hits;
        }
    }
    return double(hits) / double(graphs.size());
}

struct lazy_step {
    int a_edge;   // -1 for a label-model-only eps move
    int b_edge;

    friend bool operator==(lazy_step const& x, lazy_step const& y)
    {
        return x.a_edge == y.a_edge && x.b_edge == y.b_edge;
    }
};

struct lazy_beam_result {
    std::vector<lazy_step> steps;
    double score;
};

inline edge_context lazy_context(decoding_graph const& a, decoding_graph const& b,
    pair_state const& from, lazy_move const& m, int label_count)
{
    edge_context c;
    c.start = a.vertices[from.va].time;
    c.end = a.vertices[m.to.va].time;
    c.label = m.a_edge == -1 ? eps_label : a.edges[m.a_edge].input;
    int out = b.edges[m.b_edge].output;
    if (is_pair_label(out, label_count)) {
        c.hist = pair_first(out, label_count);
    }
    c.has_lm = true;
    c.lm = b.edges[m.b_edge].weight;
    c.has_lattice = true;
    double wa = m.a_edge == -1 ? 0 : a.edges[m.a_edge].weight;
    c.lattice = is_scored(wa) ? wa : 0;
    return c;
}

// Beam search over the on-the-fly composition of a with b, expanding
// pair states through lazy_neighbors; scorer maps an edge context to
// its weight.  Nothing is trimmed here, so hypotheses may run into
// dead ends and searches can fail even on inputs whose eager
// composition accepts.
template <class scorer_fn>
lazy_beam_result beam_decode_lazy(decoding_graph const& a,
    decoding_graph const& b, int label_count, scorer_fn&& scorer, int width)
{
    assert(a.sealed() && b.sealed());
    assert(width >= 1);

    struct hyp {
        pair_state state;
        double score;
        int back;      // index into the step arena, -1 at the start
        bool dead;
    };
    struct arena_step {
        int a_edge;
        int b_edge;
        int prev;
    };

    std::vector<hyp> hyps;
    std::vector<arena_step> arena;
    std::unordered_map<std::uint64_t, int> index;
    auto key = [&](pair_state const& s) {
        return (std::uint64_t(s.va) * b.vertices.size() + s.vb) * 2 + s.eps;
    };
    std::map<int, std::vector<int>> buckets;

    auto relax = [&](pair_state const& s, double sc, int bk) {
        auto it = index.find(key(s));
        if (it == index.end()) {
            int id = int(hyps.size());
            index[key(s)] = id;
            hyps.push_back(hyp { s, sc, bk, false });
            buckets[a.vertices[s.va].time].push_back(id);
        } else if (sc > hyps[it->second].score) {
            hyps[it->second].score = sc;
            hyps[it->second].back = bk;
        }
    };

    for (int va : a.initials) {
        for (int vb : b.initials) {
            relax(pair_state { va, vb, false }, 0, -1);
        }
    }

    for (auto it = buckets.begin(); it != buckets.end(); ++it) {
        std::vector<int>& bucket = it->second;
        // in-bucket eps moves may still append to this bucket below
        std::size_t entering = bucket.size();
        if (int(entering) > width) {
            std::vector<int> order = bucket;
            std::sort(order.begin(), order.end(), [&](int x, int y) {
                auto& hx = hyps[x];
                auto& hy = hyps[y];
                if (hx.score != hy.score) {
                    return hx.score > hy.score;
                }
                if (hx.state.va != hy.state.va) {
                    return hx.state.va < hy.state.va;
                }
                if (hx.state.vb != hy.state.vb) {
                    return hx.state.vb < hy.state.vb;
                }
                return hx.state.eps < hy.state.eps;
            });
            for (std::size_t i = width; i < order.size(); ++i) {
                hyps[order[i]].dead = true;
            }
        }
        for (std::size_t i = 0; i < bucket.size(); ++i) {
            hyp h = hyps[bucket[i]];
            if (h.dead) {
                continue;
            }
            for (auto& m : lazy_neighbors(a, b, h.state)) {
                double w = scorer(lazy_context(a, b, h.state, m, label_count));
                arena.push_back(arena_step { m.a_edge, m.b_edge, h.back });
                relax(m.to, h.score + w, int(arena.size()) - 1);
            }
        }
    }

    int best = -1;
    for (std::size_t i = 0; i < hyps.size(); ++i) {
        auto& h = hyps[i];
        if (h.back == -1 || !a.is_final(h.state.va) || !b.is_final(h.state.vb)) {
            continue;
        }
        if (best == -1 || h.score > hyps[best].score) {
            best = int(i);
        }
    }
    if (best == -1) {
        throw no_complete_path("lazy beam search reached no final pair state");
    }

    lazy_beam_result result;
    result.score = hyps[best].score;
    int s = hyps[best].back;
    while (s != -1) {
        result.steps.push_back(lazy_step { arena[s].a_edge, arena[s].b_edge });
        s = arena[s].prev;
    }
    std::reverse(result.steps.begin(), result.steps.end());
    return result;
}

}

#endif
