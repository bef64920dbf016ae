#pragma once

#include <optional>
#include <string>
#include <vector>

#include "trilstm/dataset.hpp"
#include "trilstm/matrix.hpp"
#include "trilstm/trilstm.hpp"

namespace trilstm {

enum class EdgeKind { CorrectPositive, CorrectNegative, Misassigned };

std::string to_string(EdgeKind k);

enum class NodeKind { Decision, Category, Root, Biomarker };

struct GraphNode {
    NodeKind kind;
    std::string name;
};

struct GraphEdge {
    std::string child;
    std::string parent;
    EdgeKind kind;
    double strength = 0.0; // averaged parent probability in [0, 1]
    int sign = +1;         // influence direction on the positive class
};

// One Fig.-2-style subordination map: every biomarker has exactly one
// parent edge; categories and the root connect structurally to the
// decision node.
struct DecisionGraph {
    std::string condition; // "yes" or "no"
    std::vector<GraphNode> nodes;
    std::vector<GraphEdge> edges;
};

struct InfluenceEstimate {
    std::string code;
    double mean_sensitivity = 0.0; // d p(yes) / d normalized od, averaged over records
};

struct GraphExtraction {
    std::optional<DecisionGraph> yes_graph;
    std::optional<DecisionGraph> no_graph;
    std::vector<InfluenceEstimate> influences;
    std::vector<std::string> notices; // e.g. an empty conditioned subset
};

// Pure construction from averaged head distributions (one 1 x 21 row per
// schema biomarker) and per-biomarker influence signs. Parent = argmax with
// ties to the lowest class index; a biomarker parent is kept only when that
// parent itself maps to a category, otherwise the best category/root class
// is used so depth stays <= 3 and no cycles form.
DecisionGraph build_graph(const std::vector<Matrix>& mean_parent_dists,
                          const std::vector<double>& sensitivities,
                          const BiomarkerSchema& schema, const std::string& condition);

// Runs the model over the normalized test set, conditions on the predicted
// label, and emits one graph per nonempty condition. Influence signs come
// from central finite differences (eps = 0.01 in normalized units) of the
// positive-class probability with respect to each biomarker's od value.
GraphExtraction extract_graph(const TriLstmParams& params, const Dataset& normalized_test,
                              const BiomarkerSchema& schema);

// Graphviz text; edge colors black / red / blue for correct-positive /
// correct-negative / misassigned, labels carry strength to two decimals.
std::string export_dot(const DecisionGraph& g);
std::string export_json(const DecisionGraph& g);
DecisionGraph graph_from_json(const std::string& text);

// Fraction of biomarker nodes whose parent matches the schema ground truth.
double score_graph(const DecisionGraph& g, const BiomarkerSchema& schema);

} // namespace trilstm
