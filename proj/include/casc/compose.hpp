#ifndef CASC_COMPOSE_HPP
#define CASC_COMPOSE_HPP

#include <cassert>
#include <cstdint>
#include <istream>
#include <ostream>
#include <unordered_map>
#include <vector>

#include "casc/error.hpp"
#include "casc/features.hpp"
#include "casc/graph.hpp"
#include "casc/hypothesis.hpp"
#include "casc/labels.hpp"

namespace casc {

// A pair state carries a one-bit flag recording whether it was entered
// by a label-model-only eps move; at most one consecutive eps move is
// allowed, which keeps the composition acyclic and bounded.
struct pair_state {
    int va;
    int vb;
    bool eps;

    friend bool operator==(pair_state const& a, pair_state const& b)
    {
        return a.va == b.va && a.vb == b.vb && a.eps == b.eps;
    }
};

// One out-move from a pair state: a_edge and b_edge consumed together
// for a label match, or a_edge == -1 for a B-only eps move.
struct lazy_move {
    int a_edge;
    int b_edge;
    pair_state to;
};

// B arcs with eps input traversable without consuming an A edge;
// empty once the state was itself entered by an eps move.
inline std::vector<lazy_move> epsilon_step(decoding_graph const& b,
    pair_state const& state)
{
    std::vector<lazy_move> moves;
    if (state.eps) {
        return moves;
    }
    for (int eb : b.out_edges[state.vb]) {
        if (b.edges[eb].input == eps_label) {
            moves.push_back(lazy_move { -1, eb,
                pair_state { state.va, b.edges[eb].head, true } });
        }
    }
    return moves;
}

// Exactly the out-edges eager composition produces at this pair state,
// in the same order: label matches A-edge-id major, B-edge-id minor,
// then eps moves in B-edge-id order.
inline std::vector<lazy_move> lazy_neighbors(decoding_graph const& a,
    decoding_graph const& b, pair_state const& state)
{
    assert(a.sealed() && b.sealed());
    std::vector<lazy_move> moves;
    for (int ea : a.out_edges[state.va]) {
        int out = a.edges[ea].output;
        if (out == eps_label) {
            continue;
        }
        for (int eb : b.out_edges[state.vb]) {
            if (b.edges[eb].input == out) {
                moves.push_back(lazy_move { ea, eb,
                    pair_state { a.edges[ea].head, b.edges[eb].head, false } });
            }
        }
    }
    for (auto& m : epsilon_step(b, state)) {
        moves.push_back(m);
    }
    return moves;
}

// The composed graph together with per-edge provenance and the two
// attribute channels the second-level features consume: the left
// (hypothesis-side) edge weight and the right (label-model-side)
// weight.  The composed weights themselves are free and start
// unscored unless a scorer is given.
struct composed_graph {
    decoding_graph g;
    std::vector<int> a_vertex;       // per composed vertex
    std::vector<int> b_vertex;
    std::vector<int> left_edge;      // per composed edge; -1 for eps moves
    std::vector<int> right_edge;
    std::vector<double> lm_attr;     // weight of the consumed B arc
    std::vector<double> lattice_attr;   // weight of the consumed A edge, 0 for eps
};

inline edge_context composed_context(composed_graph const& cg, edge const& e,
    int label_count)
{
    edge_context c;
    c.start = cg.g.vertices[e.tail].time;
    c.end = cg.g.vertices[e.head].time;
    c.label = e.input;
    if (is_pair_label(e.output, label_count)) {
        c.hist = pair_first(e.output, label_count);
    }
    c.has_lm = true;
    c.lm = cg.lm_attr[e.id];
    c.has_lattice = true;
    c.lattice = cg.lattice_attr[e.id];
    return c;
}

// Eager sigma-composition: breadth-first closure over pair states,
// trimmed immediately.  Vertices keep the time stamp of their A
// component; edge inputs come from A, outputs from B.  scorer maps an
// edge id of the finished graph to its weight.
template <class scorer_fn>
composed_graph sigma_compose(decoding_graph const& a, decoding_graph const& b,
    scorer_fn&& scorer)
{
    assert(a.sealed() && b.sealed());

    std::unordered_map<std::uint64_t, int> index;
    std::vector<pair_state> states;
    auto key = [&](pair_state const& s) {
        return (std::uint64_t(s.va) * b.vertices.size() + s.vb) * 2 + s.eps;
    };
    auto intern = [&](pair_state const& s) {
        auto it = index.find(key(s));
        if (it != index.end()) {
            return it->second;
        }
        int id = int(states.size());
        index[key(s)] = id;
        states.push_back(s);
        return id;
    };

    for (int va : a.initials) {
        for (int vb : b.initials) {
            intern(pair_state { va, vb, false });
        }
    }

    struct pending_edge {
        int from;
        int to;
        int a_edge;
        int b_edge;
    };
    std::vector<pending_edge> pending;
    for (std::size_t i = 0; i < states.size(); ++i) {
        for (auto& m : lazy_neighbors(a, b, states[i])) {
            pending.push_back(pending_edge { int(i), intern(m.to),
                m.a_edge, m.b_edge });
        }
    }

    decoding_graph full;
    std::vector<int> left, right;
    for (auto& s : states) {
        full.add_vertex(a.vertices[s.va].time);
    }
    for (auto& p : pending) {
        full.add_edge(p.from, p.to,
            p.a_edge == -1 ? eps_label : a.edges[p.a_edge].input,
            b.edges[p.b_edge].output);
        left.push_back(p.a_edge);
        right.push_back(p.b_edge);
    }
    for (std::size_t i = 0; i < states.size(); ++i) {
        if (a.is_initial(states[i].va) && b.is_initial(states[i].vb)
                && !states[i].eps) {
            full.set_initial(int(i));
        }
        if (a.is_final(states[i].va) && b.is_final(states[i].vb)) {
            full.set_final(int(i));
        }
    }

    trim_result t = trim(full);
    if (t.graph.edges.empty()) {
        throw empty_result("composition has no accepting path");
    }

    composed_graph cg;
    cg.g = std::move(t.graph);
    for (int v : t.vertex_map) {
        cg.a_vertex.push_back(states[v].va);
        cg.b_vertex.push_back(states[v].vb);
    }
    for (int e : t.edge_map) {
        cg.left_edge.push_back(left[e]);
        cg.right_edge.push_back(right[e]);
        cg.lm_attr.push_back(b.edges[right[e]].weight);
        double wa = left[e] == -1 ? 0 : a.edges[left[e]].weight;
        cg.lattice_attr.push_back(is_scored(wa) ? wa : 0);
    }
    cg.g.rescore([&](edge const& e) { return scorer(cg, e); });
    return cg;
}

inline composed_graph sigma_compose(decoding_graph const& a,
    decoding_graph const& b)
{
    return sigma_compose(a, b,
        [](composed_graph const&, edge const&) { return unscored_weight(); });
}

// Composed lattices serialize with the label-model weight in the
// weight column (the only channel that is not recomputable); the
// hypothesis-side score channel is recovered at load time from the
// frame scores and the first-level model.
inline void write_composed_lattice(std::ostream& os, composed_graph const& cg,
    label_set const& labels)
{
    write_lattice(os, cg.g, labels, &cg.lm_attr);
}

inline composed_graph load_composed_lattice(std::istream& is,
    label_set const& labels, frame_scores const& fs, model const& level1)
{
    composed_graph cg;
    cg.g = read_lattice(is, labels);
    for (auto& v : cg.g.vertices) {
        (void)v;
        cg.a_vertex.push_back(-1);
        cg.b_vertex.push_back(-1);
    }
    for (auto& e : cg.g.edges) {
        cg.left_edge.push_back(-1);
        cg.right_edge.push_back(-1);
        cg.lm_attr.push_back(e.weight);
        if (e.input == eps_label) {
            cg.lattice_attr.push_back(0);
        } else {
            edge_context c;
            c.start = cg.g.vertices[e.tail].time;
            c.end = cg.g.vertices[e.head].time;
            c.label = e.input;
            cg.lattice_attr.push_back(dot(level1.theta, extract(level1, fs, c)));
        }
    }
    cg.g.rescore([](edge const&) { return unscored_weight(); });
    return cg;
}

}

#endif
