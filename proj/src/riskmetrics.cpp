#include "riskagg/riskmetrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <vector>

#include <json.hpp>

#include "riskagg/analytic.hpp"
#include "riskagg/errors.hpp"

namespace riskagg::riskmetrics {

namespace {

// Tail size under the ceiling convention, clamped to [1, n].
std::size_t tail_count(std::size_t n, double alpha) {
    if (n == 0) throw std::invalid_argument("empirical tail of empty sample");
    if (!(alpha > 0.0) || !(alpha < 1.0))
        throw std::invalid_argument("alpha must lie in (0, 1)");
    auto t = static_cast<std::size_t>(std::ceil(alpha * static_cast<double>(n)));
    return std::clamp<std::size_t>(t, 1, n);
}

// Largest t values, sorted descending. Sorting fixes the summation order, so
// tail statistics do not depend on how the caller produced the sample.
std::vector<double> tail_values(std::span<const double> sample, double alpha) {
    const std::size_t t = tail_count(sample.size(), alpha);
    std::vector<double> work(sample.begin(), sample.end());
    std::nth_element(work.begin(), work.begin() + (t - 1), work.end(), std::greater<>());
    work.resize(t);
    std::sort(work.begin(), work.end(), std::greater<>());
    return work;
}

double mean_of(std::span<const double> v) {
    double acc = 0.0;
    for (double x : v) acc += x;
    return acc / static_cast<double>(v.size());
}

std::string fmt17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

} // namespace

double empirical_var(std::span<const double> sample, double alpha) {
    return tail_values(sample, alpha).back();
}

double empirical_tvar(std::span<const double> sample, double alpha) {
    return mean_of(tail_values(sample, alpha));
}

double empirical_xtvar(std::span<const double> sample, double alpha) {
    return empirical_tvar(sample, alpha) - mean_of(sample);
}

double tvar_standard_error(std::span<const double> sample, double alpha) {
    const auto tail = tail_values(sample, alpha);
    const double n = static_cast<double>(sample.size());
    const double q = tail.back();
    const double tv = mean_of(tail);
    double var_tail = 0.0;
    for (double x : tail) var_tail += (x - tv) * (x - tv);
    var_tail /= static_cast<double>(tail.size());
    const double avar = var_tail + (1.0 - alpha) * (tv - q) * (tv - q);
    return std::sqrt(avar / (alpha * n));
}

Diversification diversification(double s0, double s_z, double s1) {
    if (!std::isfinite(s0) || !std::isfinite(s_z) || !std::isfinite(s1))
        throw NumericError("diversification: non-finite sum at risk");
    if (!(s1 > s0))
        throw NumericError("diversification: S^1 must exceed S^0");
    if (!(s1 > 0.0))
        throw NumericError("diversification: S^1 must be positive");
    Diversification d;
    d.eta = (s_z - s0) / (s1 - s0);
    d.db = 1.0 - s_z / s1;
    d.eta_in_unit = d.eta >= 0.0 && d.eta <= 1.0;
    d.db_in_unit = d.db >= 0.0 && d.db <= 1.0;
    return d;
}

std::string to_json_string(const RiskReport& r) {
    nlohmann::json j;
    j["alpha"] = r.alpha;
    j["s0"] = r.s0;
    j["s_z"] = r.s_z;
    j["s1"] = r.s1;
    j["eta"] = r.eta;
    j["db"] = r.db;
    j["se_s0"] = r.se_s0;
    j["se_sz"] = r.se_sz;
    j["se_eta"] = r.se_eta;
    j["se_db"] = r.se_db;
    j["estimator"] = r.estimator;
    j["n_sims"] = r.n_sims;
    j["seed"] = r.seed;
    j["eta_in_unit"] = r.eta_in_unit;
    j["db_in_unit"] = r.db_in_unit;
    return j.dump(2);
}

std::string csv_header() {
    return "estimator,alpha,n_sims,seed,s0,s_z,s1,eta,db,se_s0,se_sz,se_eta,se_db";
}

std::string csv_row(const RiskReport& r) {
    std::string row = r.estimator;
    row += ',' + fmt17(r.alpha);
    row += ',' + std::to_string(r.n_sims);
    row += ',' + std::to_string(r.seed);
    for (double x : {r.s0, r.s_z, r.s1, r.eta, r.db, r.se_s0, r.se_sz, r.se_eta, r.se_db})
        row += ',' + fmt17(x);
    return row;
}

namespace {

// Closed forms apply when the leaves are Normal and every level couples with
// the same Gaussian equicorrelation (Independence counts as rho = 0).
std::optional<double> uniform_gaussian_rho(const hierarchy::TreeSpec& tree) {
    if (tree.leaf.kind != marginals::Kind::Normal) return std::nullopt;
    std::optional<double> rho;
    for (const auto& c : tree.level_copulas) {
        double r;
        if (c.kind == copulas::Kind::GaussianEqui) r = c.param;
        else if (c.kind == copulas::Kind::Independence) r = 0.0;
        else return std::nullopt;
        if (rho && *rho != r) return std::nullopt;
        rho = r;
    }
    return rho;
}

} // namespace

TreeRisk risk_report(const hierarchy::TreeSpec& tree, double alpha, std::size_t n_sims,
                     std::uint64_t seed, const hierarchy::AggregationOptions& opts) {
    hierarchy::AggregationOptions root_only = opts;
    root_only.keep_levels = {0};

    const auto coupled = hierarchy::aggregate_mc(tree, n_sims, seed, root_only);
    const auto indep = hierarchy::independent_baseline(tree, n_sims, seed, root_only);

    RiskReport r;
    r.alpha = alpha;
    r.estimator = "mc";
    r.n_sims = n_sims;
    r.seed = seed;
    r.s1 = hierarchy::standalone_sum_at_risk(tree, alpha);
    r.s0 = empirical_xtvar(indep.root(), alpha);
    r.s_z = empirical_xtvar(coupled.root(), alpha);
    r.se_s0 = tvar_standard_error(indep.root(), alpha);
    r.se_sz = tvar_standard_error(coupled.root(), alpha);

    const auto d = diversification(r.s0, r.s_z, r.s1);
    r.eta = d.eta;
    r.db = d.db;
    r.eta_in_unit = d.eta_in_unit;
    r.db_in_unit = d.db_in_unit;

    // Delta method; the coupled and independent runs use disjoint streams.
    const double span = r.s1 - r.s0;
    r.se_eta = std::hypot(r.se_sz / span, r.se_s0 * (r.s1 - r.s_z) / (span * span));
    r.se_db = r.se_sz / r.s1;

    TreeRisk out;
    out.empirical = r;

    if (auto rho = uniform_gaussian_rho(tree)) {
        analytic::GaussianTreeParams p{tree.k, tree.m, *rho, tree.leaf.scale};
        const auto s = analytic::sums_at_risk(p, alpha);
        RiskReport e;
        e.alpha = alpha;
        e.estimator = "exact";
        e.seed = seed;
        e.s0 = s.s0;
        e.s_z = s.s_z;
        e.s1 = s.s1;
        e.eta = analytic::eta_gaussian(tree.k, tree.m, *rho);
        e.db = analytic::db_gaussian(tree.k, tree.m, *rho);
        out.exact = e;
    }
    return out;
}

} // namespace riskagg::riskmetrics
