#ifndef CASC_EVAL_HPP
#define CASC_EVAL_HPP

#include <istream>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "casc/error.hpp"
#include "casc/graph.hpp"
#include "casc/labels.hpp"

namespace casc {

using collapse_map = std::map<int, int>;

inline int collapse_one(int label, collapse_map const& map)
{
    auto it = map.find(label);
    if (it == map.end()) {
        throw unmapped_label("label " + std::to_string(label)
            + " missing from the collapse map");
    }
    return it->second;
}

inline std::vector<int> collapse(std::vector<int> const& seq, collapse_map const& map)
{
    std::vector<int> result;
    result.reserve(seq.size());
    for (int s : seq) {
        result.push_back(collapse_one(s, map));
    }
    return result;
}

// Collapse map file: lines "<from> <to>".
inline collapse_map read_collapse_map(std::istream& is, label_set const& labels)
{
    collapse_map map;
    std::string from, to;
    while (is >> from >> to) {
        map[labels.id(from)] = labels.id(to);
    }
    return map;
}

struct per_result {
    long subs = 0;
    long ins = 0;
    long dels = 0;
    double rate = 0;
};

// Levenshtein alignment with unit costs; on ties the backtrace prefers
// substitution over insertion over deletion.  An insertion is a
// hypothesis symbol with no reference counterpart.
inline per_result per(std::vector<int> const& hyp, std::vector<int> const& ref)
{
    if (ref.empty()) {
        throw empty_reference("empty reference");
    }

    int m = int(hyp.size());
    int n = int(ref.size());
    std::vector<std::vector<int>> d(m + 1, std::vector<int>(n + 1, 0));
    for (int i = 0; i <= m; ++i) {
        d[i][0] = i;
    }
    for (int j = 0; j <= n; ++j) {
        d[0][j] = j;
    }
    for (int i = 1; i <= m; ++i) {
        for (int j = 1; j <= n; ++j) {
            int sub = d[i - 1][j - 1] + (hyp[i - 1] != ref[j - 1]);
            int ins = d[i - 1][j] + 1;
            int del = d[i][j - 1] + 1;
            d[i][j] = std::min(sub, std::min(ins, del));
        }
    }

    per_result result;
    int i = m, j = n;
    while (i > 0 || j > 0) {
        if (i > 0 && j > 0 && d[i][j] == d[i - 1][j - 1] + (hyp[i - 1] != ref[j - 1])) {
            result.subs += hyp[i - 1] != ref[j - 1];
            --i;
            --j;
        } else if (i > 0 && d[i][j] == d[i - 1][j] + 1) {
            ++result.ins;
            --i;
        } else {
            ++result.dels;
            --j;
        }
    }
    result.rate = double(result.subs + result.ins + result.dels) / n;
    return result;
}

// Pooled rate: total errors over total reference length, not the mean
// of per-utterance rates.
inline per_result corpus_per(
    std::vector<std::pair<std::vector<int>, std::vector<int>>> const& pairs)
{
    if (pairs.empty()) {
        throw empty_corpus("no utterance pairs to score");
    }
    per_result total;
    long ref_len = 0;
    for (auto& p : pairs) {
        per_result r = per(p.first, p.second);
        total.subs += r.subs;
        total.ins += r.ins;
        total.dels += r.dels;
        ref_len += long(p.second.size());
    }
    total.rate = double(total.subs + total.ins + total.dels) / ref_len;
    return total;
}

// One symbol per consumed segment; label-model-only eps edges
// contribute nothing.
inline std::vector<int> path_labels(decoding_graph const& g, path const& p)
{
    std::vector<int> result;
    for (int ei : p.edges) {
        if (g.edges[ei].input != eps_label) {
            result.push_back(g.edges[ei].input);
        }
    }
    return result;
}

}

#endif
