#ifndef CASC_SYNTH_HPP
#define CASC_SYNTH_HPP

#include <cassert>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "casc/error.hpp"
#include "casc/features.hpp"
#include "casc/hypothesis.hpp"
#include "casc/labels.hpp"
#include "casc/learn.hpp"
#include "casc/rng.hpp"

namespace casc {

struct synth_config {
    std::uint64_t seed = 1;
    int utterances = 10;
    int frames_min = 20;
    int frames_max = 40;
    int label_count = 5;
    double mean_segment = 5;
    int max_segment = 10;
    double sharpness = 1;           // frame evidence strength
    double transition_strength = 0; // bigram structure strength
};

inline void validate_synth(synth_config const& cfg)
{
    if (cfg.utterances < 1 || cfg.frames_min < 1
            || cfg.frames_max < cfg.frames_min || cfg.label_count < 1
            || cfg.mean_segment < 1 || cfg.max_segment < 1
            || cfg.sharpness < 0 || cfg.transition_strength < 0) {
        throw config_error("bad synthesis configuration");
    }
}

struct synth_corpus {
    label_set labels;
    std::vector<utterance_data> utts;
};

// Draws segment labels from a Markov chain where each label prefers a
// fixed successor,
//
//     p(s' | s) = (1 + strength * [s' = succ(s)]) / (K + strength),
//
// with succ a seeded permutation.  Segment lengths are geometric with
// the given mean, clipped to [1, max_segment] and the frames left.
// Frame rows are sharpness * onehot(label) plus unit Gaussian noise,
// log-softmaxed so each row is a log-distribution.
inline synth_corpus make_synth_corpus(synth_config const& cfg)
{
    validate_synth(cfg);
    int k = cfg.label_count;
    rng r(cfg.seed);

    synth_corpus corpus;
    for (int s = 0; s < k; ++s) {
        if (k <= 26) {
            corpus.labels.add(std::string(1, char('a' + s)));
        } else {
            corpus.labels.add("l" + std::to_string(s));
        }
    }

    std::vector<int> succ = r.permutation(k);

    for (int u = 0; u < cfg.utterances; ++u) {
        utterance_data utt;
        char buf[32];
        std::snprintf(buf, sizeof buf, "u%04d", u);
        utt.id = buf;

        int frames = r.uniform_int(cfg.frames_min, cfg.frames_max);
        int label = r.uniform_int(0, k - 1);
        int t = 0;
        while (t < frames) {
            int len = r.geometric(cfg.mean_segment);
            len = std::min(len, std::min(cfg.max_segment, frames - t));
            utt.gold.push_back({ label, t, t + len });
            t += len;

            double x = r.uniform() * (k + cfg.transition_strength);
            if (x < 1 + cfg.transition_strength) {
                label = succ[label];
            } else {
                int other = std::min(int(x - (1 + cfg.transition_strength)), k - 2);
                label = other + (other >= succ[label] ? 1 : 0);
            }
        }

        utt.frames.frames = frames;
        utt.frames.labels = k;
        utt.frames.rows.resize(std::size_t(frames) * k);
        std::size_t seg = 0;
        for (int i = 0; i < frames; ++i) {
            while (i >= utt.gold[seg].end) {
                ++seg;
            }
            double* row = &utt.frames.rows[std::size_t(i) * k];
            double m = neg_inf;
            for (int s = 0; s < k; ++s) {
                row[s] = (s == utt.gold[seg].label ? cfg.sharpness : 0)
                    + r.normal();
                m = std::max(m, row[s]);
            }
            double z = 0;
            for (int s = 0; s < k; ++s) {
                z += std::exp(row[s] - m);
            }
            z = m + std::log(z);
            for (int s = 0; s < k; ++s) {
                row[s] -= z;
            }
        }

        corpus.utts.push_back(std::move(utt));
    }

    return corpus;
}

}

#endif
