#include <doctest.h>

#include <cmath>

#include "trilstm/graph.hpp"
#include "trilstm/rng.hpp"

using namespace trilstm;

namespace {

// delta distributions exactly matching the schema subordination
std::vector<Matrix> planted_truth(const BiomarkerSchema& schema) {
    std::vector<Matrix> dists;
    for (std::size_t b = 0; b < schema.size(); ++b) {
        Matrix d(1, BiomarkerSchema::kParentClasses);
        d(0, schema.parent_class(b)) = 1.0;
        dists.push_back(std::move(d));
    }
    return dists;
}

std::vector<double> plus_signs(const BiomarkerSchema& schema) {
    return std::vector<double>(schema.size(), 1.0);
}

std::size_t count_kind(const DecisionGraph& g, EdgeKind kind) {
    std::size_t n = 0;
    for (const auto& e : g.edges)
        if (e.kind == kind)
            ++n;
    return n;
}

} // namespace

TEST_SUITE("graph") {

TEST_CASE("planted truth reproduces the ground-truth graph exactly") {
    const auto& schema = BiomarkerSchema::standard();
    const DecisionGraph g = build_graph(planted_truth(schema), plus_signs(schema), schema, "yes");
    CHECK(count_kind(g, EdgeKind::Misassigned) == 0);
    CHECK(score_graph(g, schema) == doctest::Approx(1.0));

    // every biomarker appears exactly once as a child
    std::size_t biomarker_edges = 0;
    for (const auto& e : g.edges)
        if (schema.index_of(e.child))
            ++biomarker_edges;
    CHECK(biomarker_edges == 17);
}

TEST_CASE("one planted error yields exactly one blue edge") {
    // I-R assigned to A-R instead of RNFL
    const auto& schema = BiomarkerSchema::standard();
    auto dists = planted_truth(schema);
    const std::size_t ir = *schema.index_of("I-R");
    const std::size_t ar = *schema.index_of("A-R");
    dists[ir].set_zero();
    dists[ir](0, ar) = 0.9;
    dists[ir](0, schema.parent_class(ir)) = 0.1;

    const DecisionGraph g = build_graph(dists, plus_signs(schema), schema, "yes");
    CHECK(count_kind(g, EdgeKind::Misassigned) == 1);
    bool found = false;
    for (const auto& e : g.edges)
        if (e.kind == EdgeKind::Misassigned) {
            CHECK(e.child == "I-R");
            CHECK(e.parent == "A-R");
            CHECK(e.strength == doctest::Approx(0.9));
            found = true;
        }
    CHECK(found);
    CHECK(score_graph(g, schema) == doctest::Approx(16.0 / 17.0));
}

TEST_CASE("negative sensitivity turns correct edges red") {
    const auto& schema = BiomarkerSchema::standard();
    auto signs = plus_signs(schema);
    signs[*schema.index_of("A-R")] = -0.3;
    const DecisionGraph g = build_graph(planted_truth(schema), signs, schema, "no");
    std::size_t red = 0;
    for (const auto& e : g.edges)
        if (e.child == "A-R") {
            CHECK(e.kind == EdgeKind::CorrectNegative);
            CHECK(e.sign == -1);
            ++red;
        }
    CHECK(red == 1);
}

TEST_CASE("biomarker parents chain at most one deep") {
    // B -> A is kept when A -> category; a chain B -> A' -> B' collapses
    const auto& schema = BiomarkerSchema::standard();
    auto dists = planted_truth(schema);
    const std::size_t sr = *schema.index_of("S-R");
    const std::size_t ir = *schema.index_of("I-R");
    // S-R points at I-R, I-R points at S-R: a would-be cycle
    dists[sr].set_zero();
    dists[sr](0, ir) = 0.8;
    dists[sr](0, 17) = 0.2; // RNFL
    dists[ir].set_zero();
    dists[ir](0, sr) = 0.7;
    dists[ir](0, 19) = 0.3; // GCC (wrong on purpose)

    const DecisionGraph g = build_graph(dists, plus_signs(schema), schema, "yes");
    for (const auto& e : g.edges) {
        if (e.child == "S-R")
            CHECK(e.parent == "RNFL"); // fallback to best non-biomarker
        if (e.child == "I-R")
            CHECK(e.parent == "GCC");
    }
    // no cycles: walk up from every biomarker and reach the decision node
    for (const auto& d : schema.descriptors()) {
        std::string cur = d.code;
        int hops = 0;
        while (cur != "Yes" && hops < 5) {
            bool advanced = false;
            for (const auto& e : g.edges)
                if (e.child == cur) {
                    cur = e.parent;
                    advanced = true;
                    break;
                }
            if (!advanced)
                break;
            ++hops;
        }
        CHECK(cur == "Yes");
        CHECK(hops <= 3);
    }
}

TEST_CASE("dot export colors one red edge") {
    const auto& schema = BiomarkerSchema::standard();
    auto signs = plus_signs(schema);
    signs[*schema.index_of("GLV")] = -1.0;
    const DecisionGraph g = build_graph(planted_truth(schema), signs, schema, "yes");
    const std::string dot = export_dot(g);
    std::size_t red = 0;
    std::string::size_type pos = 0;
    while ((pos = dot.find("color=red", pos)) != std::string::npos) {
        ++red;
        pos += 9;
    }
    // GLV's own edge, plus possibly no category edge (category means stay positive)
    CHECK(red == 1);
    CHECK(dot.find("digraph") != std::string::npos);
    CHECK(dot.find("label=\"1.00\"") != std::string::npos);
}

TEST_CASE("dot export handles a graph with decision nodes only") {
    DecisionGraph g;
    g.condition = "no";
    g.nodes.push_back({NodeKind::Decision, "No"});
    const std::string dot = export_dot(g);
    CHECK(dot.find("digraph decision_no") != std::string::npos);
    CHECK(dot.find("\"No\"") != std::string::npos);
}

TEST_CASE("json round-trip reproduces the graph exactly") {
    const auto& schema = BiomarkerSchema::standard();
    auto signs = plus_signs(schema);
    signs[3] = -2.0;
    auto dists = planted_truth(schema);
    dists[5].set_zero();
    dists[5](0, 2) = 0.6;
    dists[5](0, 18) = 0.4;
    const DecisionGraph g = build_graph(dists, signs, schema, "no");
    const std::string text = export_json(g);
    const DecisionGraph back = graph_from_json(text);
    CHECK(back.condition == g.condition);
    REQUIRE(back.nodes.size() == g.nodes.size());
    REQUIRE(back.edges.size() == g.edges.size());
    for (std::size_t i = 0; i < g.edges.size(); ++i) {
        CHECK(back.edges[i].child == g.edges[i].child);
        CHECK(back.edges[i].parent == g.edges[i].parent);
        CHECK(back.edges[i].kind == g.edges[i].kind);
        CHECK(back.edges[i].strength == g.edges[i].strength);
        CHECK(back.edges[i].sign == g.edges[i].sign);
    }
    CHECK(export_json(back) == text);
}

TEST_CASE("score_graph arithmetic") {
    const auto& schema = BiomarkerSchema::standard();
    const DecisionGraph all = build_graph(planted_truth(schema), plus_signs(schema), schema, "yes");
    CHECK(score_graph(all, schema) == doctest::Approx(1.0));

    auto dists = planted_truth(schema);
    dists[0].set_zero();
    dists[0](0, 19) = 1.0; // A-R wrongly to GCC
    const DecisionGraph one_wrong = build_graph(dists, plus_signs(schema), schema, "yes");
    CHECK(score_graph(one_wrong, schema) == doctest::Approx(16.0 / 17.0));
}

TEST_CASE("uniform-random parents score near chance") {
    const auto& schema = BiomarkerSchema::standard();
    RngStream rng(1234);
    double total = 0.0;
    const int trials = 400;
    for (int trial = 0; trial < trials; ++trial) {
        RngStream t = rng.child(static_cast<std::uint64_t>(trial));
        std::vector<Matrix> dists;
        for (std::size_t b = 0; b < schema.size(); ++b) {
            Matrix d(1, BiomarkerSchema::kParentClasses);
            d(0, t.below(BiomarkerSchema::kParentClasses)) = 1.0;
            dists.push_back(std::move(d));
        }
        // score the raw argmax assignment, bypassing the acyclicity fallback
        std::size_t correct = 0;
        for (std::size_t b = 0; b < schema.size(); ++b) {
            std::size_t best = 0;
            for (std::size_t c = 1; c < BiomarkerSchema::kParentClasses; ++c)
                if (dists[b](0, c) > dists[b](0, best))
                    best = c;
            if (best == schema.parent_class(b))
                ++correct;
        }
        total += static_cast<double>(correct) / static_cast<double>(schema.size());
    }
    const double mean = total / trials;
    CHECK(mean == doctest::Approx(1.0 / 21.0).epsilon(0.35));
}

TEST_CASE("extraction is a pure function of its inputs") {
    const auto& schema = BiomarkerSchema::standard();
    const auto dists = planted_truth(schema);
    const auto signs = plus_signs(schema);
    const DecisionGraph a = build_graph(dists, signs, schema, "yes");
    const DecisionGraph b = build_graph(dists, signs, schema, "yes");
    CHECK(export_json(a) == export_json(b));
}

} // TEST_SUITE
