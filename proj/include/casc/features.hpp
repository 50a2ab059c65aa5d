#ifndef CASC_FEATURES_HPP
#define CASC_FEATURES_HPP

#include <algorithm>
#include <array>
#include <cassert>
#include <cmath>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "casc/error.hpp"
#include "casc/graph.hpp"
#include "casc/labels.hpp"

namespace casc {

struct sparse_vec {

    int dim = 0;
    std::vector<std::pair<int, double>> entries;   // ascending index, no zeros

    void add(int i, double v)
    {
        assert(i >= 0 && i < dim);
        assert(entries.empty() || entries.back().first < i);
        if (v != 0) {
            entries.push_back(std::make_pair(i, v));
        }
    }

};

inline double dot(std::vector<double> const& theta, sparse_vec const& phi)
{
    if (int(theta.size()) != phi.dim) {
        throw dimension_mismatch("theta has dimension "
            + std::to_string(theta.size()) + ", feature vector "
            + std::to_string(phi.dim));
    }
    double s = 0;
    for (auto& p : phi.entries) {
        s += theta[p.first] * p.second;
    }
    return s;
}

// a - b, merged by index
inline sparse_vec sparse_diff(sparse_vec const& a, sparse_vec const& b)
{
    if (a.dim != b.dim) {
        throw dimension_mismatch("sparse_diff on dimensions "
            + std::to_string(a.dim) + " and " + std::to_string(b.dim));
    }
    sparse_vec result;
    result.dim = a.dim;
    std::size_t i = 0, j = 0;
    while (i < a.entries.size() || j < b.entries.size()) {
        if (j == b.entries.size() || (i < a.entries.size()
                && a.entries[i].first < b.entries[j].first)) {
            result.add(a.entries[i].first, a.entries[i].second);
            ++i;
        } else if (i == a.entries.size()
                || b.entries[j].first < a.entries[i].first) {
            result.add(b.entries[j].first, -b.entries[j].second);
            ++j;
        } else {
            result.add(a.entries[i].first, a.entries[i].second - b.entries[j].second);
            ++i;
            ++j;
        }
    }
    return result;
}

// Raises phi to higher order: the one-hot outer product moves entry i
// to block (lex index) * d + i, where the lex index is the mixed-radix
// encoding of the labels (s1 * k + s2 for a pair).
inline sparse_vec lexicalize(sparse_vec const& phi,
    std::vector<int> const& labels, int k)
{
    long lex = 0;
    for (int s : labels) {
        if (s < 0 || s >= k) {
            throw label_out_of_range("lexicalization label out of range: "
                + std::to_string(s));
        }
        lex = lex * k + s;
    }
    long blocks = 1;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        blocks *= k;
    }
    sparse_vec result;
    result.dim = int(phi.dim * blocks);
    for (auto& p : phi.entries) {
        result.add(int(lex * phi.dim + p.first), p.second);
    }
    return result;
}

struct frame_scores {

    int frames = 0;
    int labels = 0;
    std::vector<double> rows;   // frames x labels, row-major

    double at(int t, int k) const
    {
        assert(t >= 0 && t < frames && k >= 0 && k < labels);
        return rows[std::size_t(t) * labels + k];
    }

};

inline bool log_normalized(frame_scores const& fs, double tol)
{
    for (int t = 0; t < fs.frames; ++t) {
        double m = neg_inf;
        for (int k = 0; k < fs.labels; ++k) {
            m = std::max(m, fs.at(t, k));
        }
        double z = 0;
        for (int k = 0; k < fs.labels; ++k) {
            z += std::exp(fs.at(t, k) - m);
        }
        if (std::fabs(m + std::log(z)) > tol) {
            return false;
        }
    }
    return true;
}

// Frame-scores file: "frames T labels K" then T rows of K reals.
// Rows are expected to be log-normalized; inputs that are not (e.g.
// unnormalized bottleneck scores) only trigger a warning.
inline frame_scores read_frame_scores(std::istream& is, std::ostream* warn = nullptr)
{
    std::string tok;
    frame_scores fs;
    if (!(is >> tok) || tok != "frames" || !(is >> fs.frames)
            || !(is >> tok) || tok != "labels" || !(is >> fs.labels)
            || fs.frames < 1 || fs.labels < 1) {
        throw parse_error("bad frame-scores header");
    }
    fs.rows.resize(std::size_t(fs.frames) * fs.labels);
    for (auto& v : fs.rows) {
        if (!(is >> v) || !std::isfinite(v)) {
            throw parse_error("bad frame-scores entry");
        }
    }
    if (warn && !log_normalized(fs, 1e-3)) {
        *warn << "warning: frame scores are not log-normalized\n";
    }
    return fs;
}

inline void write_frame_scores(std::ostream& os, frame_scores const& fs)
{
    os << "frames " << fs.frames << " labels " << fs.labels << "\n";
    for (int t = 0; t < fs.frames; ++t) {
        for (int k = 0; k < fs.labels; ++k) {
            os << (k ? " " : "") << format_weight_exact(fs.at(t, k));
        }
        os << "\n";
    }
}

// component k = (1/L) sum of rows over the span
inline sparse_vec avg_frame_scores(frame_scores const& fs, int start, int end)
{
    if (start >= end) {
        throw empty_span("empty span [" + std::to_string(start) + ", "
            + std::to_string(end) + ")");
    }
    assert(start >= 0 && end <= fs.frames);
    sparse_vec result;
    result.dim = fs.labels;
    int len = end - start;
    for (int k = 0; k < fs.labels; ++k) {
        double s = 0;
        for (int t = start; t < end; ++t) {
            s += fs.at(t, k);
        }
        result.add(k, s / len);
    }
    return result;
}

// rows at start + floor((2k+1) L / 6), the middle frames of three
// equal sub-segments
inline sparse_vec sample_frame_scores(frame_scores const& fs, int start, int end)
{
    if (start >= end) {
        throw empty_span("empty span [" + std::to_string(start) + ", "
            + std::to_string(end) + ")");
    }
    assert(start >= 0 && end <= fs.frames);
    sparse_vec result;
    result.dim = 3 * fs.labels;
    int len = end - start;
    for (int i = 0; i < 3; ++i) {
        int t = start + (2 * i + 1) * len / 6;
        for (int k = 0; k < fs.labels; ++k) {
            result.add(i * fs.labels + k, fs.at(t, k));
        }
    }
    return result;
}

// rows at start - i for i = 1..3, then rows at end + i, out-of-range
// frames clamped to the first/last row
inline sparse_vec boundary_scores(frame_scores const& fs, int start, int end)
{
    sparse_vec result;
    result.dim = 6 * fs.labels;
    auto clamp = [&](int t) { return std::min(std::max(t, 0), fs.frames - 1); };
    for (int i = 1; i <= 3; ++i) {
        int t = clamp(start - i);
        for (int k = 0; k < fs.labels; ++k) {
            result.add((i - 1) * fs.labels + k, fs.at(t, k));
        }
    }
    for (int i = 1; i <= 3; ++i) {
        int t = clamp(end + i);
        for (int k = 0; k < fs.labels; ++k) {
            result.add((2 + i) * fs.labels + k, fs.at(t, k));
        }
    }
    return result;
}

// one-hot at min(L, max_len) over 0..max_len
inline sparse_vec length_indicator(int start, int end, int max_len)
{
    sparse_vec result;
    result.dim = max_len + 1;
    result.add(std::min(end - start, max_len), 1);
    return result;
}

enum class feat_kind {
    frame_avg,
    frame_samples,
    boundary,
    length,
    bias,
    lm_score,
    lattice_score,
};

struct feature_template {
    std::string name;
    feat_kind kind;
    int order;
    int base_dim;
    int offset;
};

struct model {
    std::vector<feature_template> templates;
    int dim = 0;
    int label_count = 0;
    int max_len = 0;
    std::vector<double> theta;
};

// Template names:
//   avg, samples, boundary, length, bias   first-order segment features
//   bias0                                  zeroth-order bias
//   lm_score, lattice_score                attribute pass-throughs, never
//                                          lexicalized
//   boundary2                              boundary lexicalized with the
//                                          label pair; silent when the
//                                          history label is eps
inline feature_template make_template(std::string const& name, int k, int max_len)
{
    feature_template t;
    t.name = name;
    t.offset = 0;
    if (name == "avg") {
        t.kind = feat_kind::frame_avg; t.order = 1; t.base_dim = k;
    } else if (name == "samples") {
        t.kind = feat_kind::frame_samples; t.order = 1; t.base_dim = 3 * k;
    } else if (name == "boundary") {
        t.kind = feat_kind::boundary; t.order = 1; t.base_dim = 6 * k;
    } else if (name == "boundary2") {
        t.kind = feat_kind::boundary; t.order = 2; t.base_dim = 6 * k;
    } else if (name == "length") {
        t.kind = feat_kind::length; t.order = 1; t.base_dim = max_len + 1;
    } else if (name == "bias") {
        t.kind = feat_kind::bias; t.order = 1; t.base_dim = 1;
    } else if (name == "bias0") {
        t.kind = feat_kind::bias; t.order = 0; t.base_dim = 1;
    } else if (name == "lm_score") {
        t.kind = feat_kind::lm_score; t.order = 0; t.base_dim = 1;
    } else if (name == "lattice_score") {
        t.kind = feat_kind::lattice_score; t.order = 0; t.base_dim = 1;
    } else {
        throw config_error("unknown feature template: " + name);
    }
    return t;
}

inline model make_model(std::vector<std::string> const& names, int k, int max_len)
{
    model m;
    m.label_count = k;
    m.max_len = max_len;
    int offset = 0;
    for (auto& name : names) {
        feature_template t = make_template(name, k, max_len);
        t.offset = offset;
        long span = t.base_dim;
        for (int i = 0; i < t.order; ++i) {
            span *= k;
        }
        offset += int(span);
        m.templates.push_back(t);
    }
    m.dim = offset;
    m.theta.assign(m.dim, 0);
    return m;
}

// Everything extraction needs to know about one edge: the time span,
// the segment label s2 (eps for pure label-model moves), the history
// label s1 from a composed output pair (eps when absent), and the
// attribute channels.
struct edge_context {
    int start = 0;
    int end = 0;
    int label = eps_label;
    int hist = eps_label;
    bool has_lm = false;
    double lm = 0;
    bool has_lattice = false;
    double lattice = 0;
};

inline sparse_vec extract(model const& m, frame_scores const& fs,
    edge_context const& c)
{
    sparse_vec result;
    result.dim = m.dim;
    int k = m.label_count;

    for (auto& t : m.templates) {
        sparse_vec base;
        switch (t.kind) {
        case feat_kind::bias:
            // an order-zero bias is label-free and fires on every
            // edge, eps moves included
            if (t.order >= 1 && c.label == eps_label) {
                continue;
            }
            base.dim = 1;
            base.add(0, 1);
            break;
        case feat_kind::frame_avg:
        case feat_kind::frame_samples:
        case feat_kind::boundary:
        case feat_kind::length:
            if (c.label == eps_label) {
                continue;   // no segment under this edge
            }
            if (t.order == 2 && c.hist == eps_label) {
                continue;   // pair features fall silent without a history
            }
            switch (t.kind) {
            case feat_kind::frame_avg:
                base = avg_frame_scores(fs, c.start, c.end);
                break;
            case feat_kind::frame_samples:
                base = sample_frame_scores(fs, c.start, c.end);
                break;
            case feat_kind::boundary:
                base = boundary_scores(fs, c.start, c.end);
                break;
            default:
                base = length_indicator(c.start, c.end, m.max_len);
                break;
            }
            break;
        case feat_kind::lm_score:
            if (!c.has_lm) {
                throw missing_attribute("edge context carries no lm score");
            }
            base.dim = 1;
            base.add(0, c.lm);
            break;
        case feat_kind::lattice_score:
            if (!c.has_lattice) {
                throw missing_attribute("edge context carries no lattice score");
            }
            base.dim = 1;
            base.add(0, c.lattice);
            break;
        }

        if (t.order == 1) {
            base = lexicalize(base, { c.label }, k);
        } else if (t.order == 2) {
            base = lexicalize(base, { c.hist, c.label }, k);
        }

        for (auto& p : base.entries) {
            result.add(t.offset + p.first, p.second);
        }
    }

    return result;
}

inline double score_edge(model const& m, sparse_vec const& phi)
{
    return dot(m.theta, phi);
}

// Feature cache for one sealed graph, populated once and indexed by
// edge id; training revisits every edge each epoch.
struct feature_cache {
    std::vector<sparse_vec> by_edge;
};

template <class context_fn>
feature_cache extract_all(model const& m, frame_scores const& fs,
    decoding_graph const& g, context_fn&& ctx)
{
    assert(g.sealed());
    feature_cache cache;
    cache.by_edge.reserve(g.edges.size());
    for (auto& e : g.edges) {
        cache.by_edge.push_back(extract(m, fs, ctx(e)));
    }
    return cache;
}

inline void score_with_model(decoding_graph& g, model const& m,
    feature_cache const& cache)
{
    assert(cache.by_edge.size() == g.edges.size());
    g.rescore([&](edge const& e) { return dot(m.theta, cache.by_edge[e.id]); });
}

// Model file: a template manifest, then sparse theta lines.
//   model templates <n> dim <d> labels <k> max_len <L>
//   <name> <order> <base_dim> <offset>   (n lines)
//   theta <nnz>
//   <index> <value>                      (nnz lines)
inline void write_model(std::ostream& os, model const& m)
{
    os << "model templates " << m.templates.size() << " dim " << m.dim
       << " labels " << m.label_count << " max_len " << m.max_len << "\n";
    for (auto& t : m.templates) {
        os << t.name << " " << t.order << " " << t.base_dim
           << " " << t.offset << "\n";
    }
    long nnz = 0;
    for (double v : m.theta) {
        if (v != 0) {
            ++nnz;
        }
    }
    os << "theta " << nnz << "\n";
    for (int i = 0; i < m.dim; ++i) {
        if (m.theta[i] != 0) {
            os << i << " " << format_weight_exact(m.theta[i]) << "\n";
        }
    }
}

inline model read_model(std::istream& is)
{
    std::string tok;
    long n, dim, k, max_len;
    if (!(is >> tok) || tok != "model"
            || !(is >> tok) || tok != "templates" || !(is >> n)
            || !(is >> tok) || tok != "dim" || !(is >> dim)
            || !(is >> tok) || tok != "labels" || !(is >> k)
            || !(is >> tok) || tok != "max_len" || !(is >> max_len)) {
        throw parse_error("bad model header");
    }
    std::vector<std::string> names;
    std::vector<std::array<long, 3>> manifest;
    for (long i = 0; i < n; ++i) {
        std::string name;
        long order, base, offset;
        if (!(is >> name >> order >> base >> offset)) {
            throw parse_error("bad model template line");
        }
        names.push_back(name);
        manifest.push_back({ order, base, offset });
    }
    model m = make_model(names, int(k), int(max_len));
    if (m.dim != dim) {
        throw parse_error("model dimension mismatch");
    }
    for (long i = 0; i < n; ++i) {
        auto& t = m.templates[i];
        if (t.order != manifest[i][0] || t.base_dim != manifest[i][1]
                || t.offset != manifest[i][2]) {
            throw parse_error("model template manifest mismatch: " + t.name);
        }
    }
    long nnz;
    if (!(is >> tok) || tok != "theta" || !(is >> nnz)) {
        throw parse_error("bad model theta header");
    }
    for (long i = 0; i < nnz; ++i) {
        long idx;
        double v;
        if (!(is >> idx >> v) || idx < 0 || idx >= dim) {
            throw parse_error("bad model theta line");
        }
        m.theta[idx] = v;
    }
    return m;
}

}

#endif
