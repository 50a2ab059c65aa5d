#ifndef CASC_LEARN_HPP
#define CASC_LEARN_HPP

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "casc/compose.hpp"
#include "casc/error.hpp"
#include "casc/eval.hpp"
#include "casc/features.hpp"
#include "casc/graph.hpp"
#include "casc/hypothesis.hpp"
#include "casc/prune.hpp"
#include "casc/rng.hpp"

namespace casc {

// Cost of hypothesizing segment (label, [start, end)): the segment
// length minus its largest overlap with a gold segment of the same
// label.  Zero exactly on gold segments, so the cost of a path
// decomposes over its edges and vanishes on the gold path.
inline double overlap_cost(int label, int start, int end,
    gold_segmentation const& gold)
{
    int best = 0;
    for (auto& s : gold) {
        if (s.label != label) {
            continue;
        }
        int lo = std::max(start, s.start);
        int hi = std::min(end, s.end);
        best = std::max(best, hi - lo);
    }
    return double(end - start - best);
}

// Per-edge costs; eps edges hypothesize no segment and are free.
inline std::vector<double> edge_costs(decoding_graph const& g,
    gold_segmentation const& gold)
{
    std::vector<double> costs(g.edges.size(), 0);
    for (auto& e : g.edges) {
        if (e.input == eps_label) {
            continue;
        }
        costs[e.id] = overlap_cost(e.input, g.vertices[e.tail].time,
            g.vertices[e.head].time, gold);
    }
    return costs;
}

template <class weight_fn>
best_path_result cost_augmented_path(decoding_graph const& g,
    std::vector<double> const& costs, weight_fn&& w)
{
    assert(costs.size() == g.edges.size());
    return best_path(g, [&](edge const& e) { return w(e) + costs[e.id]; });
}

// Highest-scoring path whose segment sequence (input label plus time
// span) equals the gold tiling; eps edges may appear anywhere on the
// path.  The search runs over states (vertex, segments consumed).
template <class weight_fn>
best_path_result gold_path(decoding_graph const& g,
    gold_segmentation const& gold, weight_fn&& w)
{
    assert(g.sealed());
    int n = int(gold.size());
    int nv = int(g.vertices.size());
    std::vector<double> score(std::size_t(nv) * (n + 1), neg_inf);
    std::vector<int> back(std::size_t(nv) * (n + 1), -1);
    auto at = [&](int v, int j) { return std::size_t(v) * (n + 1) + j; };

    for (int v : g.initials) {
        score[at(v, 0)] = 0;
    }
    for (int v : g.topo) {
        for (int j = 0; j <= n; ++j) {
            double s = score[at(v, j)];
            if (s == neg_inf) {
                continue;
            }
            for (int ei : g.out_edges[v]) {
                auto& e = g.edges[ei];
                int j2 = j;
                if (e.input != eps_label) {
                    if (j == n || e.input != gold[j].label
                            || g.vertices[e.tail].time != gold[j].start
                            || g.vertices[e.head].time != gold[j].end) {
                        continue;
                    }
                    j2 = j + 1;
                }
                double s2 = s + w(e);
                if (s2 > score[at(e.head, j2)]) {
                    score[at(e.head, j2)] = s2;
                    back[at(e.head, j2)] = ei;
                }
            }
        }
    }

    int best_final = -1;
    double best = neg_inf;
    for (int v : g.finals) {
        if (back[at(v, n)] != -1 && score[at(v, n)] > best) {
            best = score[at(v, n)];
            best_final = v;
        }
    }
    if (best_final == -1) {
        throw gold_unreachable("no path realizes the gold segmentation");
    }

    best_path_result result;
    result.score = best;
    int v = best_final;
    int j = n;
    while (back[at(v, j)] != -1) {
        int ei = back[at(v, j)];
        result.p.edges.push_back(ei);
        if (g.edges[ei].input != eps_label) {
            --j;
        }
        v = g.edges[ei].tail;
    }
    std::reverse(result.p.edges.begin(), result.p.edges.end());
    return result;
}

inline sparse_vec path_features(feature_cache const& feats, path const& p, int dim)
{
    std::map<int, double> acc;
    for (int ei : p.edges) {
        for (auto& q : feats.by_edge[ei].entries) {
            acc[q.first] += q.second;
        }
    }
    sparse_vec result;
    result.dim = dim;
    for (auto& q : acc) {
        result.add(q.first, q.second);
    }
    return result;
}

struct adagrad_state {
    std::vector<double> acc;
    double eta = 0.1;
    double delta = 1e-8;
};

inline void adagrad_update(std::vector<double>& theta, adagrad_state& st,
    sparse_vec const& grad)
{
    if (int(theta.size()) != grad.dim || theta.size() != st.acc.size()) {
        throw dimension_mismatch("adagrad update on theta of dimension "
            + std::to_string(theta.size()) + ", gradient "
            + std::to_string(grad.dim));
    }
    for (auto& p : grad.entries) {
        st.acc[p.first] += p.second * p.second;
        theta[p.first] -= st.eta * p.second
            / (st.delta + std::sqrt(st.acc[p.first]));
    }
}

struct train_instance {
    decoding_graph graph;
    feature_cache feats;
    std::vector<double> costs;
    gold_segmentation gold;
};

struct eval_instance {
    decoding_graph graph;
    feature_cache feats;
    std::vector<int> ref;
};

// One subgradient step on one utterance: decode cost-augmented, take
// the subgradient phi(augmented) - phi(gold), and return the hinge
// loss.  Throws gold_unreachable when the graph admits no gold path.
inline double hinge_step(model& m, train_instance const& inst, adagrad_state& st)
{
    auto wf = [&](edge const& e) { return dot(m.theta, inst.feats.by_edge[e.id]); };
    best_path_result gold = gold_path(inst.graph, inst.gold, wf);
    best_path_result aug = cost_augmented_path(inst.graph, inst.costs, wf);

    sparse_vec grad = sparse_diff(path_features(inst.feats, aug.p, m.dim),
        path_features(inst.feats, gold.p, m.dim));
    adagrad_update(m.theta, st, grad);

    return std::max(aug.score - gold.score, 0.0);
}

inline double dev_error(model const& m, std::vector<eval_instance> const& dev)
{
    std::vector<std::pair<std::vector<int>, std::vector<int>>> pairs;
    for (auto& inst : dev) {
        auto wf = [&](edge const& e) {
            return dot(m.theta, inst.feats.by_edge[e.id]);
        };
        best_path_result r = best_path(inst.graph, wf);
        pairs.emplace_back(path_labels(inst.graph, r.p), inst.ref);
    }
    return corpus_per(pairs).rate;
}

struct train_config {
    std::vector<double> step_sizes { 0.01, 0.1, 1.0 };
    int max_epochs = 20;
    int patience = 0;       // 0: never stop early
    std::uint64_t seed = 1;
};

struct epoch_record {
    int level = 0;
    double step_size = 0;
    int epoch = 0;
    double train_loss_mean = 0;
    double dev_per = 0;
    long skipped = 0;
};

// Hinge training with a step size sweep: for each step size, run up
// to max_epochs shuffled passes over the training set, score the dev
// set after each epoch, and keep the theta snapshot with the lowest
// dev error seen anywhere in the sweep.  With zero epochs the model
// keeps theta = 0.
inline std::vector<epoch_record> train_level(int level,
    std::vector<train_instance> const& train,
    std::vector<eval_instance> const& dev,
    model& m, train_config const& cfg)
{
    std::vector<epoch_record> records;
    std::vector<double> best_theta(m.dim, 0);
    double best_per = std::numeric_limits<double>::infinity();

    for (std::size_t si = 0; si < cfg.step_sizes.size(); ++si) {
        m.theta.assign(m.dim, 0);
        adagrad_state st;
        st.acc.assign(m.dim, 0);
        st.eta = cfg.step_sizes[si];
        rng r(cfg.seed + 104729 * (si + 1) + level);
        int stall = 0;

        std::vector<int> order;
        for (int i = 0; i < int(train.size()); ++i) {
            order.push_back(i);
        }

        for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
            r.shuffle(order);
            double loss_sum = 0;
            long counted = 0;
            long skipped = 0;
            for (int idx : order) {
                try {
                    loss_sum += hinge_step(m, train[idx], st);
                    ++counted;
                } catch (gold_unreachable const&) {
                    ++skipped;
                }
            }

            epoch_record rec;
            rec.level = level;
            rec.step_size = st.eta;
            rec.epoch = epoch;
            rec.train_loss_mean = counted ? loss_sum / counted : 0;
            rec.dev_per = dev_error(m, dev);
            rec.skipped = skipped;
            records.push_back(rec);

            if (rec.dev_per < best_per) {
                best_per = rec.dev_per;
                best_theta = m.theta;
                stall = 0;
            } else if (++stall >= cfg.patience && cfg.patience > 0) {
                break;
            }
        }
    }

    m.theta = best_theta;
    return records;
}

struct utterance_data {
    std::string id;
    frame_scores frames;
    gold_segmentation gold;
};

inline train_instance make_span_instance(utterance_data const& utt,
    model const& m, segmentation_config const& cfg)
{
    train_instance inst;
    inst.graph = build_full_space(utt.frames.frames, m.label_count, cfg);
    inst.feats = extract_all(m, utt.frames, inst.graph,
        [&](edge const& e) { return h1_context(inst.graph, e); });
    inst.costs = edge_costs(inst.graph, utt.gold);
    inst.gold = utt.gold;
    return inst;
}

inline eval_instance make_span_eval(utterance_data const& utt,
    model const& m, segmentation_config const& cfg)
{
    eval_instance inst;
    inst.graph = build_full_space(utt.frames.frames, m.label_count, cfg);
    inst.feats = extract_all(m, utt.frames, inst.graph,
        [&](edge const& e) { return h1_context(inst.graph, e); });
    inst.ref = gold_labels(utt.gold);
    return inst;
}

inline train_instance make_composed_instance(composed_graph const& cg,
    frame_scores const& fs, model const& m, gold_segmentation const& gold)
{
    train_instance inst;
    inst.graph = cg.g;
    inst.feats = extract_all(m, fs, inst.graph,
        [&](edge const& e) { return composed_context(cg, e, m.label_count); });
    inst.costs = edge_costs(inst.graph, gold);
    inst.gold = gold;
    return inst;
}

inline eval_instance make_composed_eval(composed_graph const& cg,
    frame_scores const& fs, model const& m, std::vector<int> const& ref)
{
    eval_instance inst;
    inst.graph = cg.g;
    inst.feats = extract_all(m, fs, inst.graph,
        [&](edge const& e) { return composed_context(cg, e, m.label_count); });
    inst.ref = ref;
    return inst;
}

struct cascade_config {
    segmentation_config seg;
    std::vector<std::string> templates1 {
        "avg", "samples", "boundary", "length", "bias", "bias0" };
    std::vector<std::string> templates2 {
        "lattice_score", "lm_score", "boundary2", "length", "bias" };
    train_config train1;
    train_config train2;
    double lambda = 0.7;
    double lm_k = 1;
};

struct cascade_result {
    model level1;
    model level2;
    bigram_lm lm;
    std::vector<epoch_record> log1;
    std::vector<epoch_record> log2;
    double dev_per1 = 0;
    double dev_per2 = 0;
    prune_report train_prune;   // sums of edge counts, means otherwise
    prune_report dev_prune;
};

namespace detail {

inline void fold_report(prune_report& acc, prune_report const& one, long n)
{
    acc.lambda = one.lambda;
    acc.threshold += one.threshold / n;
    acc.kept_edges += one.kept_edges;
    acc.total_edges += one.total_edges;
    if (std::isnan(acc.density)) {
        acc.density = 0;
        acc.oracle_error = 0;
    }
    acc.density += one.density / n;
    acc.oracle_error += one.oracle_error / n;
}

}

// The full two-level pipeline: train the segment model on the
// complete hypothesis spaces, prune each space to a lattice under the
// trained scores, estimate a bigram label model on the training
// transcripts, compose every lattice with the label model graph, and
// train the second-level model over the composed spaces.
inline cascade_result run_cascade(std::vector<utterance_data> const& train,
    std::vector<utterance_data> const& dev, int label_count,
    cascade_config const& cfg)
{
    assert(!train.empty() && !dev.empty());
    cascade_result result;

    result.level1 = make_model(cfg.templates1, label_count, cfg.seg.max_len);

    std::vector<train_instance> train1;
    for (auto& utt : train) {
        validate_gold(utt.gold, utt.frames.frames, cfg.seg, label_count);
        train1.push_back(make_span_instance(utt, result.level1, cfg.seg));
    }
    std::vector<eval_instance> dev1;
    for (auto& utt : dev) {
        validate_gold(utt.gold, utt.frames.frames, cfg.seg, label_count);
        dev1.push_back(make_span_eval(utt, result.level1, cfg.seg));
    }

    result.log1 = train_level(1, train1, dev1, result.level1, cfg.train1);
    result.dev_per1 = dev_error(result.level1, dev1);

    std::vector<prune_result> train_lat;
    for (std::size_t i = 0; i < train1.size(); ++i) {
        score_with_model(train1[i].graph, result.level1, train1[i].feats);
        prune_result pr = prune_to_lattice(train1[i].graph, cfg.lambda);
        lattice_metrics(pr.lattice, train[i].gold, nullptr, pr.report);
        detail::fold_report(result.train_prune, pr.report, long(train1.size()));
        train_lat.push_back(std::move(pr));
    }
    train1.clear();

    std::vector<prune_result> dev_lat;
    for (std::size_t i = 0; i < dev1.size(); ++i) {
        score_with_model(dev1[i].graph, result.level1, dev1[i].feats);
        prune_result pr = prune_to_lattice(dev1[i].graph, cfg.lambda);
        lattice_metrics(pr.lattice, dev[i].gold, nullptr, pr.report);
        detail::fold_report(result.dev_prune, pr.report, long(dev1.size()));
        dev_lat.push_back(std::move(pr));
    }
    dev1.clear();

    std::vector<std::vector<int>> transcripts;
    for (auto& utt : train) {
        transcripts.push_back(gold_labels(utt.gold));
    }
    result.lm = estimate_bigram_lm(transcripts, label_count, cfg.lm_k);
    decoding_graph lm_graph = build_bigram_lm_graph(result.lm, label_count);

    result.level2 = make_model(cfg.templates2, label_count, cfg.seg.max_len);

    std::vector<train_instance> train2;
    for (std::size_t i = 0; i < train_lat.size(); ++i) {
        composed_graph cg = sigma_compose(train_lat[i].lattice, lm_graph);
        train2.push_back(make_composed_instance(cg, train[i].frames,
            result.level2, train[i].gold));
    }
    train_lat.clear();

    std::vector<eval_instance> dev2;
    for (std::size_t i = 0; i < dev_lat.size(); ++i) {
        composed_graph cg = sigma_compose(dev_lat[i].lattice, lm_graph);
        dev2.push_back(make_composed_eval(cg, dev[i].frames, result.level2,
            gold_labels(dev[i].gold)));
    }
    dev_lat.clear();

    result.log2 = train_level(2, train2, dev2, result.level2, cfg.train2);
    result.dev_per2 = dev_error(result.level2, dev2);

    return result;
}

}

#endif
