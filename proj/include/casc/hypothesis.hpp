#ifndef CASC_HYPOTHESIS_HPP
#define CASC_HYPOTHESIS_HPP

#include <cassert>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "casc/error.hpp"
#include "casc/features.hpp"
#include "casc/graph.hpp"
#include "casc/labels.hpp"

namespace casc {

struct segmentation_config {
    int min_len = 1;
    int max_len = 30;
};

struct segment {
    int label;
    int start;
    int end;

    friend bool operator==(segment const& a, segment const& b)
    {
        return a.label == b.label && a.start == b.start && a.end == b.end;
    }
};

using gold_segmentation = std::vector<segment>;

// Gold segments must abut exactly, cover [0, frames), and fit under
// the maximum segment length, otherwise the gold path cannot be
// realized in the hypothesis space.
inline void validate_gold(gold_segmentation const& gold, int frames,
    segmentation_config const& cfg, int label_count)
{
    int t = 0;
    for (auto& s : gold) {
        if (s.label < 0 || s.label >= label_count) {
            throw parse_error("gold label out of range: " + std::to_string(s.label));
        }
        if (s.start != t || s.end <= s.start) {
            throw parse_error("gold segments do not tile the utterance at frame "
                + std::to_string(s.start));
        }
        if (s.end - s.start > cfg.max_len || s.end - s.start < cfg.min_len) {
            throw parse_error("gold segment of length "
                + std::to_string(s.end - s.start)
                + " outside the configured segment length bounds");
        }
        t = s.end;
    }
    if (t != frames) {
        throw parse_error("gold segmentation covers " + std::to_string(t)
            + " of " + std::to_string(frames) + " frames");
    }
}

inline std::vector<int> gold_labels(gold_segmentation const& gold)
{
    std::vector<int> result;
    for (auto& s : gold) {
        result.push_back(s.label);
    }
    return result;
}

// The full first-level hypothesis space: vertices 0..T at their frame
// times, one edge per (start, end, label) with the length bounds,
// input and output labels both the segment label, weights unscored.
inline decoding_graph build_full_space(int frames, int label_count,
    segmentation_config const& cfg)
{
    assert(frames >= 1 && label_count >= 1);
    assert(cfg.min_len >= 1 && cfg.min_len <= cfg.max_len);

    decoding_graph g;
    for (int t = 0; t <= frames; ++t) {
        g.add_vertex(t);
    }
    for (int start = 0; start < frames; ++start) {
        for (int len = cfg.min_len; len <= cfg.max_len && start + len <= frames; ++len) {
            for (int s = 0; s < label_count; ++s) {
                g.add_edge(start, start + len, s, s);
            }
        }
    }
    g.set_initial(0);
    g.set_final(frames);
    g.seal();
    return g;
}

inline edge_context h1_context(decoding_graph const& g, edge const& e)
{
    edge_context c;
    c.start = g.vertices[e.tail].time;
    c.end = g.vertices[e.head].time;
    c.label = e.input;
    return c;
}

struct bigram_lm {
    int label_count = 0;
    std::map<std::pair<int, int>, double> log_probs;   // (s1, s2) -> log p(s2|s1)
    std::map<int, double> backoff;                     // s1 -> log backoff weight
    std::map<int, double> unigrams;                    // s -> log p(s)
};

// Add-k estimation.  Conditional probabilities are stored for observed
// bigrams only, p(s2|s1) = (c + k) / (n1 + k K); the leftover mass
// k * #unseen / (n1 + k K) becomes the backoff weight (weight 1 for a
// history never observed).  Unigrams are add-k smoothed the same way.
inline bigram_lm estimate_bigram_lm(std::vector<std::vector<int>> const& transcripts,
    int label_count, double add_k)
{
    assert(add_k >= 0);

    bigram_lm lm;
    lm.label_count = label_count;

    std::map<int, long> uni;
    std::map<std::pair<int, int>, long> bi;
    long total = 0;
    for (auto& t : transcripts) {
        for (std::size_t i = 0; i < t.size(); ++i) {
            assert(t[i] >= 0 && t[i] < label_count);
            ++uni[t[i]];
            ++total;
            if (i + 1 < t.size()) {
                ++bi[std::make_pair(t[i], t[i + 1])];
            }
        }
    }
    if (total == 0) {
        throw empty_corpus("no tokens to estimate a language model from");
    }

    for (int s = 0; s < label_count; ++s) {
        long c = uni.count(s) ? uni[s] : 0;
        double p = (c + add_k) / (total + add_k * label_count);
        if (p > 0) {
            lm.unigrams[s] = std::log(p);
        }
    }

    std::map<int, long> hist;
    std::map<int, long> seen;
    for (auto& p : bi) {
        hist[p.first.first] += p.second;
        ++seen[p.first.first];
    }
    for (int s1 = 0; s1 < label_count; ++s1) {
        long n1 = hist.count(s1) ? hist[s1] : 0;
        long unseen = label_count - (seen.count(s1) ? seen[s1] : 0);
        if (n1 == 0 && add_k == 0) {
            lm.backoff[s1] = 0;   // log 1: everything through backoff
            continue;
        }
        double denom = n1 + add_k * label_count;
        double mass = add_k * unseen / denom;
        if (mass > 0) {
            lm.backoff[s1] = std::log(mass);
        }
    }
    for (auto& p : bi) {
        long n1 = hist[p.first.first];
        lm.log_probs[p.first] =
            std::log((p.second + add_k) / (n1 + add_k * label_count));
    }

    return lm;
}

// The label-model graph: vertex 0 accepts the first label with output
// pair (eps, s2) and unigram weight; one history state per label with
// bigram arcs carrying output (s1, s2); a single backoff state entered
// by eps arcs weighted with the backoff mass and left by unigram arcs
// with output (eps, s2).  The graph may have cycles; it seals without
// a topological order.
inline decoding_graph build_bigram_lm_graph(bigram_lm const& lm, int label_count)
{
    for (int s = 0; s < label_count; ++s) {
        if (!lm.unigrams.count(s)) {
            throw missing_unigram("no unigram probability for label "
                + std::to_string(s));
        }
    }

    decoding_graph g;
    int start = g.add_vertex(0);
    for (int s = 0; s < label_count; ++s) {
        g.add_vertex(0);   // history state 1 + s
    }
    int bk = -1;
    if (!lm.backoff.empty()) {
        bk = g.add_vertex(0);
    }

    for (int s2 = 0; s2 < label_count; ++s2) {
        g.add_edge(start, 1 + s2, s2, pair_label(eps_label, s2, label_count),
            lm.unigrams.at(s2));
    }
    for (auto& p : lm.log_probs) {
        int s1 = p.first.first;
        int s2 = p.first.second;
        g.add_edge(1 + s1, 1 + s2, s2, pair_label(s1, s2, label_count), p.second);
    }
    for (auto& p : lm.backoff) {
        g.add_edge(1 + p.first, bk, eps_label, eps_label, p.second);
    }
    if (bk != -1) {
        for (int s2 = 0; s2 < label_count; ++s2) {
            g.add_edge(bk, 1 + s2, s2, pair_label(eps_label, s2, label_count),
                lm.unigrams.at(s2));
        }
    }

    g.set_initial(start);
    for (int s = 0; s < label_count; ++s) {
        g.set_final(1 + s);
    }
    g.seal(false);
    return g;
}

// LM text format: "2 <s1> <s2> <logprob>", "1 <s> <logprob>",
// "B <s1> <logweight>" lines.
inline void write_bigram_lm(std::ostream& os, bigram_lm const& lm,
    label_set const& labels)
{
    for (auto& p : lm.log_probs) {
        os << "2 " << labels.name(p.first.first) << " "
           << labels.name(p.first.second) << " "
           << format_weight_exact(p.second) << "\n";
    }
    for (auto& p : lm.unigrams) {
        os << "1 " << labels.name(p.first) << " "
           << format_weight_exact(p.second) << "\n";
    }
    for (auto& p : lm.backoff) {
        os << "B " << labels.name(p.first) << " "
           << format_weight_exact(p.second) << "\n";
    }
}

inline bigram_lm read_bigram_lm(std::istream& is, label_set const& labels)
{
    bigram_lm lm;
    lm.label_count = labels.size();
    std::string kind;
    while (is >> kind) {
        if (kind == "2") {
            std::string s1, s2;
            double lp;
            if (!(is >> s1 >> s2 >> lp)) {
                throw parse_error("bad bigram line");
            }
            lm.log_probs[std::make_pair(labels.id(s1), labels.id(s2))] = lp;
        } else if (kind == "1") {
            std::string s;
            double lp;
            if (!(is >> s >> lp)) {
                throw parse_error("bad unigram line");
            }
            lm.unigrams[labels.id(s)] = lp;
        } else if (kind == "B") {
            std::string s;
            double lw;
            if (!(is >> s >> lw)) {
                throw parse_error("bad backoff line");
            }
            lm.backoff[labels.id(s)] = lw;
        } else {
            throw parse_error("bad lm line kind: " + kind);
        }
    }
    return lm;
}

}

#endif
