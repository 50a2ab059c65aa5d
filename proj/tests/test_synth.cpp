#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <map>

#include "helpers.hpp"

using namespace casc;
using Catch::Approx;

namespace {

synth_config base_config()
{
    synth_config cfg;
    cfg.seed = 3;
    cfg.utterances = 12;
    cfg.frames_min = 15;
    cfg.frames_max = 25;
    cfg.label_count = 3;
    cfg.mean_segment = 3;
    cfg.max_segment = 6;
    cfg.sharpness = 1;
    return cfg;
}

}

TEST_CASE("synthesis is a pure function of its configuration", "[synth]")
{
    synth_corpus a = make_synth_corpus(base_config());
    synth_corpus b = make_synth_corpus(base_config());
    REQUIRE(a.utts.size() == b.utts.size());
    for (std::size_t i = 0; i < a.utts.size(); ++i) {
        CHECK(a.utts[i].id == b.utts[i].id);
        CHECK(a.utts[i].gold == b.utts[i].gold);
        CHECK(a.utts[i].frames.rows == b.utts[i].frames.rows);
    }

    synth_config other = base_config();
    other.seed = 4;
    synth_corpus c = make_synth_corpus(other);
    CHECK(c.utts[0].frames.rows != a.utts[0].frames.rows);
}

TEST_CASE("labels and utterance ids follow the naming scheme", "[synth]")
{
    synth_corpus corpus = make_synth_corpus(base_config());
    CHECK(corpus.labels.size() == 3);
    CHECK(corpus.labels.name(0) == "a");
    CHECK(corpus.labels.name(2) == "c");
    CHECK(corpus.utts[0].id == "u0000");
    CHECK(corpus.utts[11].id == "u0011");

    synth_config wide = base_config();
    wide.utterances = 1;
    wide.label_count = 27;
    synth_corpus big = make_synth_corpus(wide);
    CHECK(big.labels.name(0) == "l0");
    CHECK(big.labels.name(26) == "l26");
}

TEST_CASE("gold segments tile every utterance within bounds", "[synth]")
{
    synth_config cfg = base_config();
    synth_corpus corpus = make_synth_corpus(cfg);
    REQUIRE(corpus.utts.size() == 12);
    for (auto& utt : corpus.utts) {
        int frames = utt.frames.frames;
        CHECK(frames >= cfg.frames_min);
        CHECK(frames <= cfg.frames_max);
        CHECK_NOTHROW(validate_gold(utt.gold, frames,
            segmentation_config { 1, cfg.max_segment }, cfg.label_count));
        CHECK(long(utt.frames.rows.size()) == long(frames) * cfg.label_count);
    }
}

TEST_CASE("frame rows are log-distributions", "[synth]")
{
    synth_corpus corpus = make_synth_corpus(base_config());
    for (auto& utt : corpus.utts) {
        for (int t = 0; t < utt.frames.frames; ++t) {
            double z = 0;
            for (int s = 0; s < utt.frames.labels; ++s) {
                z += std::exp(utt.frames.at(t, s));
            }
            CHECK(z == Approx(1.0).margin(1e-9));
        }
        CHECK(log_normalized(utt.frames, 1e-6));
    }
}

TEST_CASE("sharp evidence puts the frame argmax on the gold label",
    "[synth]")
{
    synth_config cfg = base_config();
    cfg.sharpness = 50;
    synth_corpus corpus = make_synth_corpus(cfg);
    for (auto& utt : corpus.utts) {
        std::size_t seg = 0;
        for (int t = 0; t < utt.frames.frames; ++t) {
            while (t >= utt.gold[seg].end) {
                ++seg;
            }
            int best = 0;
            for (int s = 1; s < utt.frames.labels; ++s) {
                if (utt.frames.at(t, s) > utt.frames.at(t, best)) {
                    best = s;
                }
            }
            CHECK(best == utt.gold[seg].label);
        }
    }
}

TEST_CASE("strong transitions concentrate on one successor per label",
    "[synth]")
{
    synth_config cfg = base_config();
    cfg.utterances = 40;
    cfg.mean_segment = 1;
    cfg.max_segment = 3;
    cfg.transition_strength = 20;
    synth_corpus corpus = make_synth_corpus(cfg);

    std::map<std::pair<int, int>, long> counts;
    std::map<int, long> totals;
    for (auto& utt : corpus.utts) {
        for (std::size_t i = 0; i + 1 < utt.gold.size(); ++i) {
            ++counts[{ utt.gold[i].label, utt.gold[i + 1].label }];
            ++totals[utt.gold[i].label];
        }
    }
    for (auto& t : totals) {
        REQUIRE(t.second >= 50);
        long modal = 0;
        for (int s2 = 0; s2 < cfg.label_count; ++s2) {
            long c = counts.count({ t.first, s2 }) ? counts[{ t.first, s2 }] : 0;
            modal = std::max(modal, c);
        }
        // succ carries (1 + 20) / (3 + 20) of the mass
        CHECK(double(modal) / t.second > 0.75);
    }
}

TEST_CASE("without transition structure successors are uniform", "[synth]")
{
    synth_config cfg = base_config();
    cfg.seed = 17;
    cfg.utterances = 40;
    cfg.frames_min = 40;
    cfg.frames_max = 50;
    cfg.mean_segment = 1;
    cfg.max_segment = 2;
    cfg.transition_strength = 0;
    synth_corpus corpus = make_synth_corpus(cfg);

    std::map<std::pair<int, int>, long> counts;
    std::map<int, long> totals;
    for (auto& utt : corpus.utts) {
        for (std::size_t i = 0; i + 1 < utt.gold.size(); ++i) {
            ++counts[{ utt.gold[i].label, utt.gold[i + 1].label }];
            ++totals[utt.gold[i].label];
        }
    }
    for (auto& t : totals) {
        REQUIRE(t.second >= 200);
        double expect = double(t.second) / cfg.label_count;
        double sigma = std::sqrt(expect * (1 - 1.0 / cfg.label_count));
        for (int s2 = 0; s2 < cfg.label_count; ++s2) {
            long c = counts.count({ t.first, s2 }) ? counts[{ t.first, s2 }] : 0;
            CHECK(std::abs(c - expect) < 4 * sigma);
        }
    }
}

TEST_CASE("degenerate configurations are rejected", "[synth]")
{
    synth_config cfg = base_config();
    cfg.utterances = 0;
    CHECK_THROWS_AS(make_synth_corpus(cfg), config_error);

    cfg = base_config();
    cfg.frames_min = 0;
    CHECK_THROWS_AS(make_synth_corpus(cfg), config_error);

    cfg = base_config();
    cfg.frames_max = cfg.frames_min - 1;
    CHECK_THROWS_AS(make_synth_corpus(cfg), config_error);

    cfg = base_config();
    cfg.label_count = 0;
    CHECK_THROWS_AS(make_synth_corpus(cfg), config_error);

    cfg = base_config();
    cfg.mean_segment = 0.5;
    CHECK_THROWS_AS(make_synth_corpus(cfg), config_error);

    cfg = base_config();
    cfg.max_segment = 0;
    CHECK_THROWS_AS(make_synth_corpus(cfg), config_error);

    cfg = base_config();
    cfg.sharpness = -1;
    CHECK_THROWS_AS(make_synth_corpus(cfg), config_error);

    cfg = base_config();
    cfg.transition_strength = -0.5;
    CHECK_THROWS_AS(make_synth_corpus(cfg), config_error);
}

TEST_CASE("a single label synthesizes constant transcripts", "[synth]")
{
    synth_config cfg = base_config();
    cfg.label_count = 1;
    cfg.utterances = 2;
    synth_corpus corpus = make_synth_corpus(cfg);
    for (auto& utt : corpus.utts) {
        for (auto& s : utt.gold) {
            CHECK(s.label == 0);
        }
    }
}
