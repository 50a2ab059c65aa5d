#ifndef TESTS_HELPERS_HPP
#define TESTS_HELPERS_HPP

#include <sstream>
#include <string>
#include <vector>

#include "casc/casc.hpp"

// v0 --a:1--> v1 --c:3--> v2, plus v0 --b:2--> v1; times 0, 1, 2.
// alpha = {0, 2, 5}, beta = {5, 3, 0}, gamma = {4, 5, 5}, best = 5 {b, c}.
inline casc::decoding_graph three_edge_graph()
{
    casc::decoding_graph g;
    int v0 = g.add_vertex(0);
    int v1 = g.add_vertex(1);
    int v2 = g.add_vertex(2);
    g.add_edge(v0, v1, 0, 0, 1);
    g.add_edge(v0, v1, 1, 1, 2);
    g.add_edge(v1, v2, 2, 2, 3);
    g.set_initial(v0);
    g.set_final(v2);
    g.seal();
    return g;
}

inline casc::label_set abc_labels()
{
    casc::label_set labels;
    labels.add("a");
    labels.add("b");
    labels.add("c");
    return labels;
}

// Random sealed DAG in segmental shape: layered by time, every edge
// advances time, trimmed so all vertices lie on accepting paths.
inline casc::decoding_graph random_segmental_graph(casc::rng& r,
    int max_frames = 8, int max_labels = 3)
{
    for (;;) {
        int frames = r.uniform_int(2, max_frames);
        int labels = r.uniform_int(1, max_labels);
        casc::decoding_graph g;
        for (int t = 0; t <= frames; ++t) {
            g.add_vertex(t);
        }
        for (int s = 0; s < frames; ++s) {
            for (int e = s + 1; e <= frames; ++e) {
                for (int k = 0; k < labels; ++k) {
                    if (r.uniform() < 0.4) {
                        g.add_edge(s, e, k, k, r.uniform(-2, 2));
                    }
                }
            }
        }
        g.set_initial(0);
        g.set_final(frames);
        g.seal();
        casc::trim_result t = casc::trim(g);
        if (!t.graph.edges.empty()) {
            return t.graph;
        }
    }
}

inline std::string graph_text(casc::decoding_graph const& g,
    casc::label_set const& labels)
{
    std::ostringstream os;
    casc::write_lattice(os, g, labels);
    return os.str();
}

// at(t, k) = t + 1 + k / 10: distinct, never zero, not log-normalized
inline casc::frame_scores ramp_frames(int frames, int labels)
{
    casc::frame_scores fs;
    fs.frames = frames;
    fs.labels = labels;
    for (int t = 0; t < frames; ++t) {
        for (int k = 0; k < labels; ++k) {
            fs.rows.push_back(t + 1 + 0.1 * k);
        }
    }
    return fs;
}

#endif
