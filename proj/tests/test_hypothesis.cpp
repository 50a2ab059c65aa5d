#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <sstream>

#include "helpers.hpp"

using namespace casc;
using Catch::Approx;

TEST_CASE("full hypothesis space enumerates bounded spans", "[hypothesis]")
{
    decoding_graph g = build_full_space(4, 3, segmentation_config { 1, 3 });
    REQUIRE(g.vertices.size() == 5);
    for (int t = 0; t <= 4; ++t) {
        CHECK(g.vertices[t].time == t);
    }
    // spans: 3 + 3 + 2 + 1, three labels each
    CHECK(g.edges.size() == 27);
    CHECK(g.initials == std::vector<int> { 0 });
    CHECK(g.finals == std::vector<int> { 4 });

    // start-major, then length, then label
    CHECK(g.edges[0].tail == 0);
    CHECK(g.edges[0].head == 1);
    CHECK(g.edges[0].input == 0);
    CHECK(g.edges[2].input == 2);
    CHECK(g.edges[3].head == 2);
    CHECK(g.edges[9].tail == 1);
    CHECK(g.edges[9].head == 2);
    for (auto& e : g.edges) {
        CHECK(e.input == e.output);
        CHECK(!is_scored(e.weight));
    }
    CHECK(g.sealed());

    CHECK(build_full_space(4, 3, segmentation_config { 2, 3 }).edges.size() == 15);
    CHECK(build_full_space(2, 1, segmentation_config { 1, 30 }).edges.size() == 3);
}

TEST_CASE("hypothesis edges carry span contexts", "[hypothesis]")
{
    decoding_graph g = build_full_space(3, 2, segmentation_config { 1, 3 });
    edge_context c = h1_context(g, g.edges[3]);
    CHECK(c.start == 0);
    CHECK(c.end == 2);
    CHECK(c.label == g.edges[3].input);
    CHECK(c.hist == eps_label);
    CHECK(!c.has_lm);
    CHECK(!c.has_lattice);
}

TEST_CASE("gold validation enforces tiling and length bounds", "[hypothesis]")
{
    segmentation_config cfg { 1, 3 };
    gold_segmentation good { { 0, 0, 2 }, { 1, 2, 5 } };
    CHECK_NOTHROW(validate_gold(good, 5, cfg, 2));
    CHECK(gold_labels(good) == std::vector<int> { 0, 1 });

    CHECK_THROWS_AS(validate_gold({ { 2, 0, 5 } }, 5, cfg, 2), parse_error);
    CHECK_THROWS_AS(
        validate_gold({ { 0, 0, 2 }, { 1, 3, 5 } }, 5, cfg, 2), parse_error);
    CHECK_THROWS_AS(validate_gold({ { 0, 0, 5 } }, 5, cfg, 2), parse_error);
    CHECK_THROWS_AS(
        validate_gold(good, 5, segmentation_config { 3, 4 }, 2), parse_error);
    CHECK_THROWS_AS(validate_gold({ { 0, 0, 2 } }, 5, cfg, 2), parse_error);
}

TEST_CASE("add-k bigram estimation leaves mass for backoff", "[hypothesis]")
{
    bigram_lm lm = estimate_bigram_lm({ { 0, 0 } }, 2, 1);
    CHECK(lm.label_count == 2);
    REQUIRE(lm.log_probs.size() == 1);
    CHECK(lm.log_probs.at({ 0, 0 }) == Approx(std::log(2.0 / 3)));
    REQUIRE(lm.backoff.size() == 2);
    CHECK(lm.backoff.at(0) == Approx(std::log(1.0 / 3)));
    CHECK(lm.backoff.at(1) == 0);
    CHECK(lm.unigrams.at(0) == Approx(std::log(0.75)));
    CHECK(lm.unigrams.at(1) == Approx(std::log(0.25)));

    CHECK_THROWS_AS(estimate_bigram_lm({}, 2, 1), empty_corpus);
    CHECK_THROWS_AS(estimate_bigram_lm({ {} }, 2, 1), empty_corpus);
}

TEST_CASE("unsmoothed estimation routes unseen histories through backoff",
    "[hypothesis]")
{
    bigram_lm lm = estimate_bigram_lm({ { 0, 0 } }, 2, 0);
    CHECK(lm.log_probs.at({ 0, 0 }) == 0);
    CHECK(!lm.backoff.count(0));
    CHECK(lm.backoff.at(1) == 0);
    CHECK(lm.unigrams.at(0) == 0);
    CHECK(!lm.unigrams.count(1));
    CHECK_THROWS_AS(build_bigram_lm_graph(lm, 2), missing_unigram);
}

TEST_CASE("label model graph wires histories through one backoff state",
    "[hypothesis]")
{
    bigram_lm lm = estimate_bigram_lm({ { 0, 0 } }, 2, 1);
    decoding_graph g = build_bigram_lm_graph(lm, 2);
    REQUIRE(g.vertices.size() == 4);
    REQUIRE(g.edges.size() == 7);
    CHECK(g.initials == std::vector<int> { 0 });
    CHECK(g.finals == std::vector<int> { 1, 2 });
    CHECK(g.sealed());

    auto& first = g.edges[0];
    CHECK(first.tail == 0);
    CHECK(first.head == 1);
    CHECK(first.input == 0);
    CHECK(first.output == pair_label(eps_label, 0, 2));
    CHECK(first.weight == Approx(std::log(0.75)));

    auto& self = g.edges[2];
    CHECK(self.tail == 1);
    CHECK(self.head == 1);
    CHECK(self.output == pair_label(0, 0, 2));
    CHECK(self.weight == Approx(std::log(2.0 / 3)));

    auto& bk0 = g.edges[3];
    CHECK(bk0.tail == 1);
    CHECK(bk0.head == 3);
    CHECK(bk0.input == eps_label);
    CHECK(bk0.output == eps_label);
    CHECK(bk0.weight == Approx(std::log(1.0 / 3)));
    CHECK(g.edges[4].tail == 2);
    CHECK(g.edges[4].weight == 0);

    // leaving backoff forgets the history
    auto& resume = g.edges[5];
    CHECK(resume.tail == 3);
    CHECK(resume.head == 1);
    CHECK(resume.output == pair_label(eps_label, 0, 2));
}

TEST_CASE("fully observed bigrams need no backoff state", "[hypothesis]")
{
    std::vector<int> t { 0, 0, 1, 1, 2, 2, 0, 2, 1, 0 };
    bigram_lm lm = estimate_bigram_lm({ t }, 3, 1);
    CHECK(lm.log_probs.size() == 9);
    CHECK(lm.backoff.empty());

    decoding_graph g = build_bigram_lm_graph(lm, 3);
    CHECK(g.vertices.size() == 4);
    CHECK(g.edges.size() == 12);
    CHECK(g.finals == std::vector<int> { 1, 2, 3 });
    for (auto& e : g.edges) {
        CHECK(e.input != eps_label);
    }
}

TEST_CASE("language model files round trip", "[hypothesis]")
{
    label_set labels = abc_labels();
    bigram_lm lm = estimate_bigram_lm({ { 0, 1, 2, 0 } }, 3, 1);

    std::ostringstream os;
    write_bigram_lm(os, lm, labels);
    std::istringstream is(os.str());
    bigram_lm back = read_bigram_lm(is, labels);
    CHECK(back.label_count == 3);
    CHECK(back.log_probs == lm.log_probs);
    CHECK(back.backoff == lm.backoff);
    CHECK(back.unigrams == lm.unigrams);

    std::istringstream bad("3 a b c 0.5\n");
    CHECK_THROWS_AS(read_bigram_lm(bad, labels), parse_error);
}
