#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <set>
#include <vector>

#include "riskagg/copulas.hpp"
#include "riskagg/marginals.hpp"

namespace riskagg::hierarchy {

// Node (level, index): levels run 0 (root) to m (leaves), indices are
// 1-based within a level.
struct NodeId {
    int level = 0;
    std::uint64_t index = 1;
    friend auto operator<=>(const NodeId&, const NodeId&) = default;
};

// Regular aggregation tree: depth m, every internal node has k children,
// i.i.d. leaf marginals, children joined by an exchangeable copula. The
// copula may differ by level; level_copulas[p] joins the children of a
// level-p node.
struct TreeSpec {
    int k = 2;
    int m = 1;
    marginals::MarginalSpec leaf;
    std::vector<copulas::CopulaSpec> level_copulas;

    TreeSpec(int k, int m, marginals::MarginalSpec leaf, copulas::CopulaSpec copula);
    TreeSpec(int k, int m, marginals::MarginalSpec leaf, std::vector<copulas::CopulaSpec> per_level);

    std::uint64_t n_leaves() const;
    std::uint64_t n_nodes() const;
    std::uint64_t nodes_at(int level) const;
    const copulas::CopulaSpec& copula_at(int level) const;
    NodeId parent(NodeId id) const;
    std::vector<NodeId> children(NodeId id) const;
};

struct AggregationOptions {
    std::set<int> keep_levels;  // extra levels stored besides the root
    int threads = 1;
    std::uint64_t memory_budget = std::uint64_t(3) << 30;
};

// Simulated node scenario vectors. Row j of any stored internal node equals
// the sum over its children's row j (children are stored after re-coupling),
// so kept levels are componentwise consistent with the root.
struct ScenarioSet {
    std::uint64_t seed = 0;
    std::size_t n_sims = 0;
    std::map<int, std::vector<std::vector<double>>> levels;

    bool has_level(int p) const { return levels.count(p) != 0; }
    const std::vector<double>& node(NodeId id) const;
    const std::vector<double>& root() const { return node(NodeId{0, 1}); }
};

// Bottom-up Monte Carlo aggregation: leaves are i.i.d. draws from the leaf
// marginal; at each internal node the children are re-coupled by rank
// reordering against a fresh copula block and summed row-wise. Marginals
// are preserved exactly (reordering only permutes). Output is bit-identical
// for any opts.threads >= 1 with the same seed.
ScenarioSet aggregate_mc(const TreeSpec& tree, std::size_t n_sims, std::uint64_t seed,
                         const AggregationOptions& opts = {});

// Same tree with the copula forced to Independence at every node; the root
// is then the plain row-wise sum of n_leaves() i.i.d. leaf draws.
ScenarioSet independent_baseline(const TreeSpec& tree, std::size_t n_sims, std::uint64_t seed,
                                 const AggregationOptions& opts = {});

// S^1: sum of standalone leaf xTVaRs, n_leaves() * xTVaR_alpha(leaf).
double standalone_sum_at_risk(const TreeSpec& tree, double alpha);

} // namespace riskagg::hierarchy
