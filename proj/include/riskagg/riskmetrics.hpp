#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>

#include "riskagg/hierarchy.hpp"

namespace riskagg::riskmetrics {

// Empirical upper-tail measures with the ceiling convention: the tail holds
// the ceil(alpha * n) largest values. VaR is the smallest tail value, TVaR
// the tail mean, xTVaR the tail mean minus the sample mean.
double empirical_var(std::span<const double> sample, double alpha);
double empirical_tvar(std::span<const double> sample, double alpha);
double empirical_xtvar(std::span<const double> sample, double alpha);

// Asymptotic standard error of the empirical TVaR (influence-function based:
// tail variance plus a quantile-estimation term). Also the SE reported for
// xTVaR; the sample-mean noise it ignores is lower order.
double tvar_standard_error(std::span<const double> sample, double alpha);

// eta = (S_Z - S^0)/(S^1 - S^0), DB = 1 - S_Z/S^1. Values are reported raw;
// the flags mark MC noise that lands outside [0, 1].
struct Diversification {
    double eta = 0.0;
    double db = 0.0;
    bool eta_in_unit = true;
    bool db_in_unit = true;
};
Diversification diversification(double s0, double s_z, double s1);

struct RiskReport {
    double alpha = 0.0;
    double s0 = 0.0;
    double s_z = 0.0;
    double s1 = 0.0;
    double eta = 0.0;
    double db = 0.0;
    double se_s0 = 0.0;
    double se_sz = 0.0;
    double se_eta = 0.0;
    double se_db = 0.0;
    std::string estimator;  // "mc" or "exact"
    std::size_t n_sims = 0;
    std::uint64_t seed = 0;
    bool eta_in_unit = true;
    bool db_in_unit = true;
};

std::string to_json_string(const RiskReport& r);
std::string csv_header();
std::string csv_row(const RiskReport& r);

// Full tree risk analysis: S^1 exact, S^0 from the independent baseline,
// S_Z from hierarchical aggregation. For Normal leaves under a Gaussian
// copula (same rho at every level) the matching closed-form report is
// attached.
struct TreeRisk {
    RiskReport empirical;
    std::optional<RiskReport> exact;
};
TreeRisk risk_report(const hierarchy::TreeSpec& tree, double alpha, std::size_t n_sims,
                     std::uint64_t seed, const hierarchy::AggregationOptions& opts = {});

} // namespace riskagg::riskmetrics
