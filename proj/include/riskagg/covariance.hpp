#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "riskagg/hierarchy.hpp"

namespace riskagg::covariance {

// Dense leaf covariance matrix of a Gaussian (k, m, rho) tree, with leaf
// standard deviation sigma_m. Row-major, n = k^m, capped at n <= 4096.
struct CovMatrix {
    int k = 0;
    int m = 0;
    double rho = 0.0;
    double sigma_m = 1.0;
    std::size_t n = 0;
    std::vector<double> a;

    double at(std::size_t i, std::size_t j) const { return a[i * n + j]; }
    double& at(std::size_t i, std::size_t j) { return a[i * n + j]; }
};

// Conditional-independence covariance, built by the level-block recurrence:
// diagonal blocks are the rescaled depth-(m-1) matrix, off-diagonal blocks
// are constant at rho (1/k + (1-1/k) rho)^(m-1) on the correlation scale.
// rho = 1 is accepted as the comonotone continuity limit.
CovMatrix build_ci_covariance(int k, int m, double rho, double sigma_m);

// Correlation between two leaves whose first common ancestor sits at level
// p in [0, m-1]: rho (1/k + (1-1/k) rho)^(m-p-1).
double effective_correlation(int k, int m, double rho, int p);

// Independent per-entry path: covariance of 0-based leaves i and j from
// their common ancestor level. Cross-check for the block recurrence.
double entry_from_ancestor(int k, int m, double rho, double sigma_m, std::size_t i, std::size_t j);

// Conditional-independence check across every internal non-root node W:
// for i inside W's leaf set J and j outside, C_ij must equal
// C_iJ * C_jJ / C_JJ. Reports the largest absolute deviation.
struct CiReport {
    double max_violation = 0.0;
    std::size_t checks = 0;
};
CiReport verify_ci(const CovMatrix& c);

struct EigenBounds {
    double min_eigenvalue = 0.0;
    double max_eigenvalue = 0.0;
};
EigenBounds eigen_bounds(const CovMatrix& c);

double grand_sum(const CovMatrix& c);

// Joint leaf scenarios from N(0, C) via a triangular factorization with
// diagonal pivots floored at 1e-12 (semidefinite limits). The result stores
// the leaves (level m) and the root (their row-wise sum). Bit-identical for
// any threads >= 1.
hierarchy::ScenarioSet sample_joint(const CovMatrix& c, std::size_t n_sims, std::uint64_t seed,
                                    int threads = 1);

// Row-major CSV, 17 significant digits.
void write_csv(const CovMatrix& c, std::ostream& os);

} // namespace riskagg::covariance
