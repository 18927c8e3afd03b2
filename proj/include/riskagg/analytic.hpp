#pragma once

#include <cstdint>
#include <utility>
#include <vector>

namespace riskagg::analytic {

// Gaussian tree: Normal(0, sigma_m) leaves joined by the equicorrelation
// Gaussian copula with the same rho at every node. rho = 1 is accepted as a
// continuity limit (the tree degenerates to the comonotone sum).
struct GaussianTreeParams {
    int k = 2;
    int m = 1;
    double rho = 0.0;
    double sigma_m = 1.0;
};

void validate(const GaussianTreeParams& p);

// Standard deviation of a level-p node:
// sigma_(p) = sigma_m * (k + (k^2-k) rho)^((m-p)/2).
double sigma_level(const GaussianTreeParams& p, int level);

// f(alpha) = phi(Phi^-1(1-alpha)) / alpha, the normal xTVaR multiplier.
double xtvar_multiplier(double alpha);

// S^0 (independent sum), S_Z (hierarchical root), S^1 (comonotone sum),
// all as xTVaR at level alpha.
struct SumsAtRisk {
    double s0 = 0.0;
    double s_z = 0.0;
    double s1 = 0.0;
};
SumsAtRisk sums_at_risk(const GaussianTreeParams& p, double alpha);

// Diversification benefit DB = 1 - S_Z/S^1 = 1 - (1/k + (1-1/k) rho)^(m/2)
// and normalized spread eta = (S_Z - S^0)/(S^1 - S^0). Both are free of
// alpha and sigma_m.
double db_gaussian(int k, int m, double rho);
double eta_gaussian(int k, int m, double rho);

struct ShapeResult {
    int k = 0;
    int m = 0;
    double db = 0.0;
    double eta = 0.0;
};

// Evaluate DB and eta for several (k, m) shapes with the same leaf count,
// sorted by DB descending. For rho in (0, 1) DB is strictly decreasing in k
// at fixed k^m (thin trees diversify better); violated order is reported as
// a NumericError.
std::vector<ShapeResult> compare_shapes(std::uint64_t n_leaves,
                                        const std::vector<std::pair<int, int>>& shapes, double rho);

} // namespace riskagg::analytic
