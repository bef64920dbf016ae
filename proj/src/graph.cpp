#include "trilstm/graph.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include <json.hpp>

namespace trilstm {

namespace {

using nlohmann::json;

constexpr double kSensitivityEps = 0.01;

std::string node_kind_name(NodeKind k) {
    switch (k) {
    case NodeKind::Decision: return "decision";
    case NodeKind::Category: return "category";
    case NodeKind::Root: return "root";
    case NodeKind::Biomarker: return "biomarker";
    }
    return "?";
}

NodeKind node_kind_from(const std::string& s) {
    if (s == "decision") return NodeKind::Decision;
    if (s == "category") return NodeKind::Category;
    if (s == "root") return NodeKind::Root;
    if (s == "biomarker") return NodeKind::Biomarker;
    throw ParseError("unknown node kind '" + s + "'");
}

EdgeKind edge_kind_from(const std::string& s) {
    if (s == "correct-positive") return EdgeKind::CorrectPositive;
    if (s == "correct-negative") return EdgeKind::CorrectNegative;
    if (s == "misassigned") return EdgeKind::Misassigned;
    throw ParseError("unknown edge kind '" + s + "'");
}

std::string strength_label(double v) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

} // namespace

std::string to_string(EdgeKind k) {
    switch (k) {
    case EdgeKind::CorrectPositive: return "correct-positive";
    case EdgeKind::CorrectNegative: return "correct-negative";
    case EdgeKind::Misassigned: return "misassigned";
    }
    return "?";
}

DecisionGraph build_graph(const std::vector<Matrix>& mean_parent_dists,
                          const std::vector<double>& sensitivities,
                          const BiomarkerSchema& schema, const std::string& condition) {
    const std::size_t n = schema.size();
    if (mean_parent_dists.size() != n || sensitivities.size() != n)
        throw ShapeError("build_graph expects one distribution and sensitivity per biomarker");

    const std::size_t K = BiomarkerSchema::kParentClasses;
    auto argmax_class = [&](const Matrix& dist) {
        if (dist.rows() != 1 || dist.cols() != K)
            throw ShapeError("parent distribution must be 1 x " + std::to_string(K));
        std::size_t best = 0;
        for (std::size_t c = 1; c < K; ++c)
            if (dist(0, c) > dist(0, best))
                best = c; // ties keep the lowest class index
        return best;
    };

    // first pass: raw argmax parents
    std::vector<std::size_t> parent(n);
    for (std::size_t b = 0; b < n; ++b)
        parent[b] = argmax_class(mean_parent_dists[b]);

    // a biomarker-valued parent is only admissible when that biomarker
    // itself parents to a category; anything else falls back to the most
    // probable category/root class
    auto best_non_biomarker = [&](const Matrix& dist) {
        std::size_t best = n;
        for (std::size_t c = n + 1; c < K; ++c)
            if (dist(0, c) > dist(0, best))
                best = c;
        return best;
    };
    std::vector<std::size_t> resolved = parent;
    for (std::size_t b = 0; b < n; ++b) {
        if (resolved[b] >= n)
            continue;
        const std::size_t via = resolved[b];
        const bool via_parents_category =
            via != b && parent[via] >= n && parent[via] != BiomarkerSchema::kRootClass;
        if (!via_parents_category)
            resolved[b] = best_non_biomarker(mean_parent_dists[b]);
    }

    DecisionGraph g;
    g.condition = condition;
    const std::string decision_name = condition == "yes" ? "Yes" : "No";
    g.nodes.push_back({NodeKind::Decision, decision_name});
    g.nodes.push_back({NodeKind::Root, "ROOT"});
    for (const char* cat : {"GCC", "ONH", "RNFL"})
        g.nodes.push_back({NodeKind::Category, cat});
    {
        std::vector<std::string> codes;
        for (const auto& d : schema.descriptors())
            codes.push_back(d.code);
        std::sort(codes.begin(), codes.end());
        for (const auto& c : codes)
            g.nodes.push_back({NodeKind::Biomarker, c});
    }

    // structural edges: root and categories answer to the decision node
    auto category_sign = [&](std::size_t cat_class) {
        double sum = 0.0;
        for (std::size_t b = 0; b < n; ++b)
            if (schema.parent_class(b) == cat_class)
                sum += sensitivities[b];
        return sum >= 0.0 ? +1 : -1;
    };
    std::size_t iop_index = *schema.index_of("IOP");
    g.edges.push_back({"ROOT", decision_name, EdgeKind::CorrectPositive, 1.0,
                       sensitivities[iop_index] >= 0.0 ? +1 : -1});
    for (std::size_t cls = n; cls < K - 1; ++cls) {
        const int sign = category_sign(cls);
        g.edges.push_back({schema.parent_class_name(cls), decision_name,
                           sign >= 0 ? EdgeKind::CorrectPositive : EdgeKind::CorrectNegative, 1.0,
                           sign});
    }

    // learned biomarker edges, sorted by child code for determinism
    std::vector<std::size_t> order(n);
    for (std::size_t b = 0; b < n; ++b)
        order[b] = b;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return schema.at(a).code < schema.at(b).code;
    });
    for (std::size_t b : order) {
        GraphEdge e;
        e.child = schema.at(b).code;
        e.parent = schema.parent_class_name(resolved[b]);
        e.strength = mean_parent_dists[b](0, resolved[b]);
        e.sign = sensitivities[b] >= 0.0 ? +1 : -1;
        if (resolved[b] != schema.parent_class(b))
            e.kind = EdgeKind::Misassigned;
        else
            e.kind = e.sign > 0 ? EdgeKind::CorrectPositive : EdgeKind::CorrectNegative;
        g.edges.push_back(std::move(e));
    }
    return g;
}

GraphExtraction extract_graph(const TriLstmParams& params, const Dataset& test,
                              const BiomarkerSchema& schema) {
    if (test.records.empty())
        throw ConfigError("extract_graph: empty test set");
    const std::size_t n = schema.size();
    const auto identity = identity_permutation(n);

    // influence: central difference of p(yes) w.r.t. each normalized od value
    std::vector<double> sensitivity(n, 0.0);
    for (const auto& rec : test.records) {
        for (std::size_t b = 0; b < n; ++b) {
            PatientRecord hi = rec, lo = rec;
            hi.od[b] += kSensitivityEps;
            lo.od[b] -= kSensitivityEps;
            const double up = trilstm_predict(params, hi, schema, identity).p_yes;
            const double dn = trilstm_predict(params, lo, schema, identity).p_yes;
            sensitivity[b] += (up - dn) / (2.0 * kSensitivityEps);
        }
    }
    for (double& s : sensitivity)
        s /= static_cast<double>(test.size());

    // condition on the model's own predicted label
    std::vector<std::vector<Matrix>> sums(2, std::vector<Matrix>(n, Matrix(1, BiomarkerSchema::kParentClasses)));
    std::vector<std::size_t> counts(2, 0);
    for (const auto& rec : test.records) {
        Prediction pred = trilstm_predict(params, rec, schema, identity);
        const std::size_t side = pred.yes ? 0 : 1;
        ++counts[side];
        for (std::size_t b = 0; b < n; ++b)
            add_in_place(sums[side][b], pred.parent_dists[b]);
    }

    GraphExtraction out;
    for (std::size_t b = 0; b < n; ++b)
        out.influences.push_back({schema.at(b).code, sensitivity[b]});

    const char* names[2] = {"yes", "no"};
    for (int side = 0; side < 2; ++side) {
        if (counts[side] == 0) {
            out.notices.push_back(std::string("no records predicted '") + names[side] +
                                  "'; that graph was omitted");
            continue;
        }
        std::vector<Matrix> means;
        means.reserve(n);
        for (std::size_t b = 0; b < n; ++b)
            means.push_back(scale(sums[side][b], 1.0 / static_cast<double>(counts[side])));
        DecisionGraph g = build_graph(means, sensitivity, schema, names[side]);
        if (side == 0)
            out.yes_graph = std::move(g);
        else
            out.no_graph = std::move(g);
    }
    return out;
}

std::string export_dot(const DecisionGraph& g) {
    std::string out = "digraph decision_" + g.condition + " {\n";
    out += "  rankdir=BT;\n";
    for (const auto& node : g.nodes) {
        out += "  \"" + node.name + "\" [kind=" + node_kind_name(node.kind);
        if (node.kind == NodeKind::Decision)
            out += ", shape=doubleoctagon";
        else if (node.kind != NodeKind::Biomarker)
            out += ", shape=box";
        out += "];\n";
    }
    for (const auto& e : g.edges) {
        const char* color = e.kind == EdgeKind::Misassigned
                                ? "blue"
                                : (e.kind == EdgeKind::CorrectNegative ? "red" : "black");
        out += "  \"" + e.child + "\" -> \"" + e.parent + "\" [color=" + color +
               ", label=\"" + strength_label(e.strength) + "\"];\n";
    }
    out += "}\n";
    return out;
}

std::string export_json(const DecisionGraph& g) {
    json j;
    j["condition"] = g.condition;
    j["nodes"] = json::array();
    for (const auto& node : g.nodes)
        j["nodes"].push_back({{"kind", node_kind_name(node.kind)}, {"name", node.name}});
    j["edges"] = json::array();
    for (const auto& e : g.edges)
        j["edges"].push_back({{"child", e.child},
                              {"parent", e.parent},
                              {"kind", to_string(e.kind)},
                              {"strength", e.strength},
                              {"sign", e.sign}});
    return j.dump(2) + "\n";
}

DecisionGraph graph_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ParseError(std::string("bad graph JSON: ") + e.what());
    }
    DecisionGraph g;
    try {
        g.condition = j.at("condition").get<std::string>();
        for (const auto& node : j.at("nodes"))
            g.nodes.push_back(
                {node_kind_from(node.at("kind").get<std::string>()), node.at("name").get<std::string>()});
        for (const auto& e : j.at("edges"))
            g.edges.push_back({e.at("child").get<std::string>(), e.at("parent").get<std::string>(),
                               edge_kind_from(e.at("kind").get<std::string>()),
                               e.at("strength").get<double>(), e.at("sign").get<int>()});
    } catch (const json::exception& e) {
        throw ParseError(std::string("bad graph JSON: ") + e.what());
    }
    return g;
}

double score_graph(const DecisionGraph& g, const BiomarkerSchema& schema) {
    std::size_t correct = 0, total = 0;
    for (const auto& e : g.edges) {
        const auto child = schema.index_of(e.child);
        if (!child)
            continue; // structural edge
        ++total;
        if (schema.parent_class_name(schema.parent_class(*child)) == e.parent)
            ++correct;
    }
    return total ? static_cast<double>(correct) / static_cast<double>(total) : 0.0;
}

} // namespace trilstm
