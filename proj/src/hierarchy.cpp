#include "riskagg/hierarchy.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <future>
#include <optional>
#include <stdexcept>
#include <utility>

#include "riskagg/errors.hpp"
#include "riskagg/rng.hpp"

namespace riskagg::hierarchy {

namespace {

constexpr std::uint64_t kMaxLeaves = std::uint64_t(1) << 20;

std::uint64_t checked_pow(int k, int m) {
    std::uint64_t v = 1;
    for (int i = 0; i < m; ++i) {
        if (v > kMaxLeaves)
            break;
        v *= static_cast<std::uint64_t>(k);
    }
    return v;
}

void validate_tree(const TreeSpec& t) {
    if (t.k < 2)
        throw std::invalid_argument("tree branching k must be >= 2");
    if (t.m < 1)
        throw std::invalid_argument("tree depth m must be >= 1");
    if (checked_pow(t.k, t.m) > kMaxLeaves)
        throw ResourceError("tree exceeds the leaf cap (2^20 leaves)");
    if (t.level_copulas.size() != static_cast<std::size_t>(t.m))
        throw std::invalid_argument("level_copulas must have one entry per internal level (m)");
    for (const auto& c : t.level_copulas) {
        copulas::validate(c);
        if (c.k != t.k)
            throw std::invalid_argument("copula dimension must equal tree branching k");
    }
}

} // namespace

TreeSpec::TreeSpec(int k_, int m_, marginals::MarginalSpec leaf_, copulas::CopulaSpec copula_)
    : k(k_), m(m_), leaf(leaf_), level_copulas(m_ > 0 ? static_cast<std::size_t>(m_) : 0, copula_) {
    validate_tree(*this);
}

TreeSpec::TreeSpec(int k_, int m_, marginals::MarginalSpec leaf_, std::vector<copulas::CopulaSpec> per_level)
    : k(k_), m(m_), leaf(leaf_), level_copulas(std::move(per_level)) {
    validate_tree(*this);
}

std::uint64_t TreeSpec::n_leaves() const {
    return nodes_at(m);
}

std::uint64_t TreeSpec::nodes_at(int level) const {
    if (level < 0 || level > m)
        throw std::invalid_argument("level out of range");
    std::uint64_t v = 1;
    for (int i = 0; i < level; ++i)
        v *= static_cast<std::uint64_t>(k);
    return v;
}

std::uint64_t TreeSpec::n_nodes() const {
    std::uint64_t total = 0;
    for (int p = 0; p <= m; ++p)
        total += nodes_at(p);
    return total;
}

const copulas::CopulaSpec& TreeSpec::copula_at(int level) const {
    if (level < 0 || level >= m)
        throw std::invalid_argument("copula_at: level must name an internal node level");
    return level_copulas[static_cast<std::size_t>(level)];
}

NodeId TreeSpec::parent(NodeId id) const {
    if (id.level <= 0 || id.level > m || id.index < 1 || id.index > nodes_at(id.level))
        throw std::invalid_argument("parent: invalid node");
    return NodeId{id.level - 1, (id.index - 1) / static_cast<std::uint64_t>(k) + 1};
}

std::vector<NodeId> TreeSpec::children(NodeId id) const {
    if (id.level < 0 || id.level >= m || id.index < 1 || id.index > nodes_at(id.level))
        throw std::invalid_argument("children: invalid node");
    std::vector<NodeId> out;
    out.reserve(static_cast<std::size_t>(k));
    const std::uint64_t base = (id.index - 1) * static_cast<std::uint64_t>(k);
    for (int c = 0; c < k; ++c)
        out.push_back(NodeId{id.level + 1, base + static_cast<std::uint64_t>(c) + 1});
    return out;
}

const std::vector<double>& ScenarioSet::node(NodeId id) const {
    auto it = levels.find(id.level);
    if (it == levels.end())
        throw std::invalid_argument("ScenarioSet: level was not kept");
    if (id.index < 1 || id.index > it->second.size())
        throw std::invalid_argument("ScenarioSet: node index out of range");
    return it->second[id.index - 1];
}

namespace {

struct ChildOut {
    std::vector<double> aligned;
    std::vector<std::pair<NodeId, std::vector<double>>> kept;
};

// Stable argsort: ties broken by original index, so the result does not
// depend on how the work was partitioned.
std::vector<std::uint32_t> argsort(const std::vector<double>& v) {
    std::vector<std::pair<double, std::uint32_t>> tmp(v.size());
    for (std::size_t i = 0; i < v.size(); ++i)
        tmp[i] = {v[i], static_cast<std::uint32_t>(i)};
    std::sort(tmp.begin(), tmp.end());
    std::vector<std::uint32_t> idx(v.size());
    for (std::size_t i = 0; i < v.size(); ++i)
        idx[i] = tmp[i].second;
    return idx;
}

class Engine {
public:
    Engine(const TreeSpec& tree, std::size_t n, std::uint64_t seed, const AggregationOptions& opts)
        : tree_(tree), n_(n), seed_(seed), opts_(opts),
          tokens_(std::max(1, opts.threads) - 1) {}

    ScenarioSet run() {
        ChildOut root = evaluate(NodeId{0, 1}, /*coupled=*/false);
        ScenarioSet out;
        out.seed = seed_;
        out.n_sims = n_;
        for (int p : opts_.keep_levels) {
            if (p < 0 || p > tree_.m)
                throw std::invalid_argument("keep_levels entry out of range");
            out.levels[p].resize(tree_.nodes_at(p));
        }
        out.levels[0].resize(1);
        out.levels[0][0] = std::move(root.aligned);
        for (auto& [id, vec] : root.kept)
            out.levels[id.level][id.index - 1] = std::move(vec);
        return out;
    }

private:
    bool keep(int level) const { return opts_.keep_levels.count(level) != 0; }

    bool try_token() {
        int t = tokens_.load(std::memory_order_relaxed);
        while (t > 0) {
            if (tokens_.compare_exchange_weak(t, t - 1, std::memory_order_acquire))
                return true;
        }
        return false;
    }

    void give_token() { tokens_.fetch_add(1, std::memory_order_release); }

    std::vector<double> leaf_values(NodeId id) const {
        const rng::Stream s(seed_, rng::stream_id(rng::Purpose::LeafDraw, id.level, id.index));
        std::vector<double> v(n_);
        for (std::size_t j = 0; j < n_; ++j)
            v[j] = marginals::quantile(tree_.leaf, s.u01_at(j));
        return v;
    }

    // Evaluate the subtree rooted at `id`. When `coupled` is true the caller
    // re-couples the result against its copula column `col` of `sampler`:
    // the returned `aligned` vector is the node's scenario vector permuted to
    // carry the copula column's ranks, and any kept descendant vectors are
    // permuted the same way so row-wise sums stay consistent.
    ChildOut evaluate(NodeId id, bool coupled, const copulas::ColumnSampler* sampler = nullptr,
                      int col = 0) {
        ChildOut mine;
        if (id.level == tree_.m) {
            mine.aligned = leaf_values(id);
        } else {
            mine = aggregate_node(id);
        }
        if (!coupled)
            return mine;

        std::vector<double> keys(n_);
        sampler->rank_key_column(col, keys.data());
        const std::vector<std::uint32_t> iu = argsort(keys);
        keys.clear();
        keys.shrink_to_fit();

        std::vector<double> aligned(n_);
        if (mine.kept.empty()) {
            std::sort(mine.aligned.begin(), mine.aligned.end());
            for (std::size_t t = 0; t < n_; ++t)
                aligned[iu[t]] = mine.aligned[t];
        } else {
            const std::vector<std::uint32_t> iv = argsort(mine.aligned);
            for (std::size_t t = 0; t < n_; ++t)
                aligned[iu[t]] = mine.aligned[iv[t]];
            std::vector<double> scratch(n_);
            for (auto& [kid, vec] : mine.kept) {
                for (std::size_t t = 0; t < n_; ++t)
                    scratch[iu[t]] = vec[iv[t]];
                vec.swap(scratch);
            }
        }
        mine.aligned = std::move(aligned);
        return mine;
    }

    ChildOut aggregate_node(NodeId id) {
        const auto& cop = tree_.copula_at(id.level);
        const bool reorder = !(cop.kind == copulas::Kind::Independence ||
                               (cop.kind == copulas::Kind::GaussianEqui && cop.param == 0.0) ||
                               (cop.kind == copulas::Kind::Clayton && cop.param <= 1e-8));
        std::optional<copulas::ColumnSampler> sampler;
        if (reorder)
            sampler.emplace(cop, rng::Stream(seed_, rng::stream_id(rng::Purpose::Copula, id.level, id.index)),
                            n_);

        ChildOut out;
        out.aligned.assign(n_, 0.0);

        const int k = tree_.k;
        const std::uint64_t child_base = (id.index - 1) * static_cast<std::uint64_t>(k);
        const bool child_kept = keep(id.level + 1);
        const int batch = std::clamp(2 * std::max(1, opts_.threads), 2, 16);

        for (int c0 = 0; c0 < k; c0 += batch) {
            const int c1 = std::min(k, c0 + batch);
            std::vector<std::future<ChildOut>> futs(static_cast<std::size_t>(c1 - c0));
            std::vector<ChildOut> inline_results(static_cast<std::size_t>(c1 - c0));
            std::vector<bool> is_async(static_cast<std::size_t>(c1 - c0), false);

            for (int c = c0; c < c1; ++c) {
                const NodeId child{id.level + 1, child_base + static_cast<std::uint64_t>(c) + 1};
                auto work = [this, child, reorder, &sampler, c]() {
                    return evaluate(child, reorder, reorder ? &*sampler : nullptr, c);
                };
                if (id.level <= 2 && try_token()) {
                    is_async[c - c0] = true;
                    futs[c - c0] = std::async(std::launch::async, [this, work]() {
                        ChildOut r = work();
                        give_token();
                        return r;
                    });
                } else {
                    inline_results[c - c0] = work();
                }
            }

            for (int c = c0; c < c1; ++c) {
                ChildOut r = is_async[c - c0] ? futs[c - c0].get() : std::move(inline_results[c - c0]);
                double* acc = out.aligned.data();
                const double* add = r.aligned.data();
                for (std::size_t j = 0; j < n_; ++j)
                    acc[j] += add[j];
                if (child_kept)
                    out.kept.emplace_back(NodeId{id.level + 1, child_base + static_cast<std::uint64_t>(c) + 1},
                                          std::move(r.aligned));
                for (auto& kv : r.kept)
                    out.kept.push_back(std::move(kv));
            }
        }
        return out;
    }

    const TreeSpec& tree_;
    std::size_t n_;
    std::uint64_t seed_;
    const AggregationOptions& opts_;
    std::atomic<int> tokens_;
};

void check_budget(const TreeSpec& tree, std::size_t n, const AggregationOptions& opts) {
    std::uint64_t retained = 1;
    for (int p : opts.keep_levels) {
        if (p < 0 || p > tree.m)
            throw std::invalid_argument("keep_levels entry out of range");
        retained += tree.nodes_at(p);
    }
    const std::uint64_t workers = static_cast<std::uint64_t>(std::max(1, opts.threads));
    const std::uint64_t batch = std::clamp<std::uint64_t>(2 * workers, 2, 16);
    const std::uint64_t working = workers * static_cast<std::uint64_t>(tree.m + 2) + 2 * batch + 6;
    const std::uint64_t bytes = (retained + working) * static_cast<std::uint64_t>(n) * sizeof(double);
    if (bytes > opts.memory_budget)
        throw ResourceError("scenario storage estimate exceeds the memory budget");
}

} // namespace

ScenarioSet aggregate_mc(const TreeSpec& tree, std::size_t n_sims, std::uint64_t seed,
                         const AggregationOptions& opts) {
    if (n_sims < 2)
        throw std::invalid_argument("aggregate_mc: n_sims must be >= 2");
    check_budget(tree, n_sims, opts);
    Engine engine(tree, n_sims, seed, opts);
    return engine.run();
}

ScenarioSet independent_baseline(const TreeSpec& tree, std::size_t n_sims, std::uint64_t seed,
                                 const AggregationOptions& opts) {
    TreeSpec indep(tree.k, tree.m, tree.leaf, copulas::CopulaSpec::independence(tree.k));
    return aggregate_mc(indep, n_sims, seed, opts);
}

double standalone_sum_at_risk(const TreeSpec& tree, double alpha) {
    return static_cast<double>(tree.n_leaves()) * marginals::exact_xtvar(tree.leaf, alpha);
}

} // namespace riskagg::hierarchy
