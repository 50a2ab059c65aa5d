#ifndef CASC_GRAPH_HPP
#define CASC_GRAPH_HPP

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <queue>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "casc/error.hpp"
#include "casc/labels.hpp"

namespace casc {

constexpr double neg_inf = -std::numeric_limits<double>::infinity();

inline double unscored_weight()
{
    return std::numeric_limits<double>::quiet_NaN();
}

inline bool is_scored(double w)
{
    return !std::isnan(w);
}

struct vertex {
    int id;
    int time;
};

struct edge {
    int id;
    int tail;
    int head;
    int input;
    int output;
    double weight;
};

struct path {
    std::vector<int> edges;

    friend bool operator==(path const& a, path const& b)
    {
        return a.edges == b.edges;
    }
};

// Append-only during construction; seal() freezes the structure
// (adjacency and topological order).  Weights stay assignable through
// rescore() so one graph can be re-scored every epoch.
struct decoding_graph {

    std::vector<vertex> vertices;
    std::vector<edge> edges;
    std::vector<int> initials;
    std::vector<int> finals;
    std::vector<char> initial_mask;
    std::vector<char> final_mask;
    std::vector<std::vector<int>> in_edges;
    std::vector<std::vector<int>> out_edges;
    std::vector<int> topo;
    std::vector<int> topo_pos;

    bool sealed_flag = false;

    bool sealed() const
    {
        return sealed_flag;
    }

    int add_vertex(int time)
    {
        assert(!sealed_flag);
        int id = int(vertices.size());
        vertices.push_back(vertex { id, time });
        initial_mask.push_back(0);
        final_mask.push_back(0);
        return id;
    }

    int add_edge(int tail, int head, int input, int output,
        double weight = unscored_weight())
    {
        assert(!sealed_flag);
        assert(tail >= 0 && tail < int(vertices.size()));
        assert(head >= 0 && head < int(vertices.size()));
        int id = int(edges.size());
        edges.push_back(edge { id, tail, head, input, output, weight });
        return id;
    }

    void set_initial(int v)
    {
        assert(v >= 0 && v < int(vertices.size()));
        if (!initial_mask[v]) {
            initial_mask[v] = 1;
            initials.push_back(v);
        }
    }

    void set_final(int v)
    {
        assert(v >= 0 && v < int(vertices.size()));
        if (!final_mask[v]) {
            final_mask[v] = 1;
            finals.push_back(v);
        }
    }

    bool is_initial(int v) const
    {
        return initial_mask[v];
    }

    bool is_final(int v) const
    {
        return final_mask[v];
    }

    // Builds adjacency, and with acyclic = true the topological order
    // (ties broken by ascending vertex id).  Label-model graphs may
    // have cycles and seal with acyclic = false; they support
    // composition but not the dynamic-programming passes.
    void seal(bool acyclic = true)
    {
        assert(!sealed_flag);

        std::sort(initials.begin(), initials.end());
        std::sort(finals.begin(), finals.end());

        int nv = int(vertices.size());
        in_edges.assign(nv, {});
        out_edges.assign(nv, {});
        for (auto& e : edges) {
            out_edges[e.tail].push_back(e.id);
            in_edges[e.head].push_back(e.id);
        }

        if (acyclic) {
            std::vector<int> degree(nv, 0);
            for (auto& e : edges) {
                ++degree[e.head];
            }
            std::priority_queue<int, std::vector<int>, std::greater<int>> q;
            for (int v = 0; v < nv; ++v) {
                if (degree[v] == 0) {
                    q.push(v);
                }
            }
            topo.clear();
            while (!q.empty()) {
                int v = q.top();
                q.pop();
                topo.push_back(v);
                for (int e : out_edges[v]) {
                    if (--degree[edges[e].head] == 0) {
                        q.push(edges[e].head);
                    }
                }
            }
            if (int(topo.size()) != nv) {
                throw cycle_detected("graph has a cycle");
            }
            topo_pos.assign(nv, -1);
            for (int i = 0; i < nv; ++i) {
                topo_pos[topo[i]] = i;
            }
        }

        sealed_flag = true;
    }

    template <class F>
    void rescore(F&& f)
    {
        for (auto& e : edges) {
            e.weight = f(e);
        }
    }

};

inline std::vector<int> topological_order(decoding_graph const& g)
{
    assert(g.sealed());
    if (g.topo.empty() && !g.vertices.empty()) {
        throw cycle_detected("graph sealed without a topological order");
    }
    return g.topo;
}

inline void check_scored(decoding_graph const& g)
{
    for (auto& e : g.edges) {
        if (!is_scored(e.weight)) {
            throw unscored_edge("edge " + std::to_string(e.id) + " is unscored");
        }
    }
}

// alpha(v): best summed weight over partial paths from any initial
// vertex to v; 0 contribution for starting fresh at an initial vertex;
// neg_inf for unreachable vertices.
template <class weight_fn>
std::vector<double> forward_scores(decoding_graph const& g, weight_fn&& w)
{
    assert(g.sealed());
    std::vector<double> alpha(g.vertices.size(), neg_inf);
    for (int v : g.topo) {
        double a = g.is_initial(v) ? 0 : neg_inf;
        for (int ei : g.in_edges[v]) {
            auto& e = g.edges[ei];
            if (alpha[e.tail] == neg_inf) {
                continue;
            }
            a = std::max(a, alpha[e.tail] + w(e));
        }
        alpha[v] = a;
    }
    return alpha;
}

inline std::vector<double> forward_scores(decoding_graph const& g)
{
    check_scored(g);
    return forward_scores(g, [](edge const& e) { return e.weight; });
}

template <class weight_fn>
std::vector<double> backward_scores(decoding_graph const& g, weight_fn&& w)
{
    assert(g.sealed());
    std::vector<double> beta(g.vertices.size(), neg_inf);
    for (auto it = g.topo.rbegin(); it != g.topo.rend(); ++it) {
        int v = *it;
        double b = g.is_final(v) ? 0 : neg_inf;
        for (int ei : g.out_edges[v]) {
            auto& e = g.edges[ei];
            if (beta[e.head] == neg_inf) {
                continue;
            }
            b = std::max(b, beta[e.head] + w(e));
        }
        beta[v] = b;
    }
    return beta;
}

inline std::vector<double> backward_scores(decoding_graph const& g)
{
    check_scored(g);
    return backward_scores(g, [](edge const& e) { return e.weight; });
}

struct best_path_result {
    path p;
    double score;
};

// Maximum-score path with at least one edge.  In-edges are scanned in
// ascending edge id with strict improvement only, so the recorded
// back pointer is the lowest-id argmax at every backtrace step; ties
// between final vertices go to the lower vertex id.
template <class weight_fn>
best_path_result best_path(decoding_graph const& g, weight_fn&& w)
{
    assert(g.sealed());

    std::vector<double> alpha(g.vertices.size(), neg_inf);
    std::vector<int> back(g.vertices.size(), -1);
    // best score over non-empty paths ending at a final vertex
    int best_final = -1;
    int best_last = -1;
    double best = neg_inf;

    for (int v : g.topo) {
        double a = g.is_initial(v) ? 0 : neg_inf;
        int b = -1;
        double nonempty = neg_inf;
        int last = -1;
        for (int ei : g.in_edges[v]) {
            auto& e = g.edges[ei];
            if (alpha[e.tail] == neg_inf) {
                continue;
            }
            double s = alpha[e.tail] + w(e);
            if (s > a) {
                a = s;
                b = ei;
            }
            if (s > nonempty) {
                nonempty = s;
                last = ei;
            }
        }
        alpha[v] = a;
        back[v] = b;
        if (g.is_final(v) && nonempty != neg_inf
                && (nonempty > best || (nonempty == best && v < best_final))) {
            best = nonempty;
            best_final = v;
            best_last = last;
        }
    }

    if (best_final == -1) {
        throw no_path("no accepting path");
    }

    path p;
    int e = best_last;
    while (e != -1) {
        p.edges.push_back(e);
        e = back[g.edges[e].tail];
    }
    std::reverse(p.edges.begin(), p.edges.end());
    return best_path_result { p, best };
}

inline best_path_result best_path(decoding_graph const& g)
{
    check_scored(g);
    return best_path(g, [](edge const& e) { return e.weight; });
}

template <class weight_fn>
double path_score(decoding_graph const& g, path const& p, weight_fn&& w)
{
    double s = 0;
    for (int ei : p.edges) {
        s += w(g.edges[ei]);
    }
    return s;
}

inline double path_score(decoding_graph const& g, path const& p)
{
    return path_score(g, p, [](edge const& e) { return e.weight; });
}

// Exhaustive initial-to-final path enumeration; the testing oracle.
// Paths come out in lexicographic edge-id order.
template <class weight_fn>
std::vector<std::pair<path, double>> enumerate_paths(decoding_graph const& g,
    long cap, weight_fn&& w)
{
    assert(g.sealed());

    std::vector<std::pair<path, double>> result;
    std::vector<int> stack;
    std::vector<double> scores;

    auto visit = [&](auto&& self, int v) -> void {
        if (g.is_final(v) && !stack.empty()) {
            if (long(result.size()) >= cap) {
                throw too_many_paths("more than " + std::to_string(cap) + " paths");
            }
            result.push_back(std::make_pair(path { stack }, scores.back()));
        }
        for (int ei : g.out_edges[v]) {
            auto& e = g.edges[ei];
            stack.push_back(ei);
            scores.push_back((scores.empty() ? 0 : scores.back()) + w(e));
            self(self, e.head);
            stack.pop_back();
            scores.pop_back();
        }
    };

    for (int v : g.initials) {
        visit(visit, v);
    }
    return result;
}

inline std::vector<std::pair<path, double>> enumerate_paths(
    decoding_graph const& g, long cap)
{
    return enumerate_paths(g, cap, [](edge const& e) { return e.weight; });
}

struct trim_result {
    decoding_graph graph;
    std::vector<int> vertex_map;   // new vertex id -> original vertex id
    std::vector<int> edge_map;     // new edge id -> original edge id
};

// Keeps only vertices and edges that are both reachable from an
// initial vertex and co-reachable to a final one; ids re-densified in
// ascending original order.  Works on unsealed graphs; the result is
// sealed acyclic.
inline trim_result trim(decoding_graph const& g)
{
    int nv = int(g.vertices.size());
    std::vector<std::vector<int>> out(nv), in(nv);
    for (auto& e : g.edges) {
        out[e.tail].push_back(e.id);
        in[e.head].push_back(e.id);
    }

    auto bfs = [&](std::vector<int> const& seeds,
        std::vector<std::vector<int>> const& adj, bool forward) {
        std::vector<char> seen(nv, 0);
        std::vector<int> queue = seeds;
        for (int v : queue) {
            seen[v] = 1;
        }
        for (std::size_t i = 0; i < queue.size(); ++i) {
            int v = queue[i];
            for (int ei : adj[v]) {
                int u = forward ? g.edges[ei].head : g.edges[ei].tail;
                if (!seen[u]) {
                    seen[u] = 1;
                    queue.push_back(u);
                }
            }
        }
        return seen;
    };

    std::vector<char> reach = bfs(g.initials, out, true);
    std::vector<char> coreach = bfs(g.finals, in, false);

    trim_result result;
    std::vector<int> new_id(nv, -1);
    for (int v = 0; v < nv; ++v) {
        if (reach[v] && coreach[v]) {
            new_id[v] = result.graph.add_vertex(g.vertices[v].time);
            result.vertex_map.push_back(v);
        }
    }
    for (auto& e : g.edges) {
        if (reach[e.tail] && coreach[e.head] && reach[e.head] && coreach[e.tail]) {
            result.graph.add_edge(new_id[e.tail], new_id[e.head],
                e.input, e.output, e.weight);
            result.edge_map.push_back(e.id);
        }
    }
    for (int v : g.initials) {
        if (new_id[v] != -1) {
            result.graph.set_initial(new_id[v]);
        }
    }
    for (int v : g.finals) {
        if (new_id[v] != -1) {
            result.graph.set_final(new_id[v]);
        }
    }
    result.graph.seal();
    return result;
}

inline std::string format_weight(double w)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.9g", w);
    return buf;
}

inline std::string format_weight_exact(double w)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", w);
    return buf;
}

// Lattice text format:
//   vertices N edges M
//   <vertex_id> <time>                               (N lines)
//   <edge_id> <tail> <head> <input> <output> <weight> (M lines)
// Labels are names; eps is "<eps>"; composed output labels "s1|s2".
// Initial vertices are those with no in-edges, finals those with no
// out-edges (all graphs this toolkit writes are trim, where the two
// notions coincide with I and F).
inline void write_lattice(std::ostream& os, decoding_graph const& g,
    label_set const& labels, std::vector<double> const* weights = nullptr)
{
    os << "vertices " << g.vertices.size() << " edges " << g.edges.size() << "\n";
    for (auto& v : g.vertices) {
        os << v.id << " " << v.time << "\n";
    }
    for (auto& e : g.edges) {
        double w = weights ? (*weights)[e.id] : e.weight;
        os << e.id << " " << e.tail << " " << e.head
           << " " << format_label(e.input, labels)
           << " " << format_label(e.output, labels)
           << " " << format_weight(w) << "\n";
    }
}

inline decoding_graph read_lattice(std::istream& is, label_set const& labels)
{
    std::string tok;
    long nv, ne;
    if (!(is >> tok) || tok != "vertices" || !(is >> nv)
            || !(is >> tok) || tok != "edges" || !(is >> ne)) {
        throw parse_error("bad lattice header");
    }

    decoding_graph g;
    for (long i = 0; i < nv; ++i) {
        long id, time;
        if (!(is >> id >> time) || id != i) {
            throw parse_error("bad lattice vertex line");
        }
        g.add_vertex(int(time));
    }
    for (long i = 0; i < ne; ++i) {
        long id, tail, head;
        std::string in, out;
        double w;
        if (!(is >> id >> tail >> head >> in >> out >> w) || id != i
                || tail < 0 || tail >= nv || head < 0 || head >= nv) {
            throw parse_error("bad lattice edge line");
        }
        g.add_edge(int(tail), int(head), parse_label(in, labels),
            parse_label(out, labels), w);
    }

    std::vector<char> has_in(nv, 0), has_out(nv, 0);
    for (auto& e : g.edges) {
        has_in[e.head] = 1;
        has_out[e.tail] = 1;
    }
    for (long v = 0; v < nv; ++v) {
        if (!has_in[v]) {
            g.set_initial(int(v));
        }
        if (!has_out[v]) {
            g.set_final(int(v));
        }
    }
    g.seal();
    return g;
}

}

#endif
