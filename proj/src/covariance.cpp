#include "riskagg/covariance.hpp"

#include <bit>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>
#include <thread>

#include <Eigen/Dense>

#include "riskagg/errors.hpp"
#include "riskagg/marginals.hpp"
#include "riskagg/rng.hpp"

namespace riskagg::covariance {

namespace {

constexpr std::size_t kMaxDim = 4096;
constexpr double kPivotFloor = 1e-12;

void validate_params(int k, int m, double rho, double sigma_m) {
    if (k < 2)
        throw std::invalid_argument("k must be >= 2");
    if (m < 1)
        throw std::invalid_argument("m must be >= 1");
    if (!(rho > -1.0 / (k - 1) && rho <= 1.0))
        throw std::invalid_argument("rho must lie in (-1/(k-1), 1]");
    if (!(sigma_m > 0.0))
        throw std::invalid_argument("sigma_m must be positive");
}

std::size_t dim_of(int k, int m) {
    std::size_t n = 1;
    for (int i = 0; i < m; ++i) {
        n *= static_cast<std::size_t>(k);
        if (n > kMaxDim)
            throw ResourceError("covariance dimension k^m exceeds the cap (4096)");
    }
    return n;
}

} // namespace

CovMatrix build_ci_covariance(int k, int m, double rho, double sigma_m) {
    validate_params(k, m, rho, sigma_m);
    const std::size_t n = dim_of(k, m);
    const double g = 1.0 / k + (1.0 - 1.0 / k) * rho;

    // Correlation-scale recurrence: R_1 is the k x k equicorrelation matrix,
    // R_d embeds k copies of R_{d-1} on the diagonal with constant
    // off-diagonal blocks rho * g^(d-1).
    std::vector<double> prev{1.0};
    std::size_t s = 1;
    for (int d = 1; d <= m; ++d) {
        const std::size_t ns = s * static_cast<std::size_t>(k);
        const double beta = rho * std::pow(g, d - 1);
        std::vector<double> cur(ns * ns, beta);
        for (int b = 0; b < k; ++b) {
            const std::size_t off = static_cast<std::size_t>(b) * s;
            for (std::size_t i = 0; i < s; ++i)
                for (std::size_t j = 0; j < s; ++j)
                    cur[(off + i) * ns + (off + j)] = prev[i * s + j];
        }
        prev = std::move(cur);
        s = ns;
    }

    CovMatrix c;
    c.k = k;
    c.m = m;
    c.rho = rho;
    c.sigma_m = sigma_m;
    c.n = n;
    c.a = std::move(prev);
    const double v = sigma_m * sigma_m;
    for (double& x : c.a)
        x *= v;
    return c;
}

double effective_correlation(int k, int m, double rho, int p) {
    validate_params(k, m, rho, 1.0);
    if (p < 0 || p >= m)
        throw std::invalid_argument("effective_correlation: p must lie in [0, m-1]");
    const double g = 1.0 / k + (1.0 - 1.0 / k) * rho;
    return rho * std::pow(g, m - p - 1);
}

double entry_from_ancestor(int k, int m, double rho, double sigma_m, std::size_t i, std::size_t j) {
    validate_params(k, m, rho, sigma_m);
    const std::size_t n = dim_of(k, m);
    if (i >= n || j >= n)
        throw std::invalid_argument("entry_from_ancestor: leaf index out of range");
    if (i == j)
        return sigma_m * sigma_m;
    // Walk both leaves up until they meet; d counts the meeting level.
    std::size_t a = i, b = j;
    int d = m;
    while (a != b) {
        a /= static_cast<std::size_t>(k);
        b /= static_cast<std::size_t>(k);
        --d;
    }
    return sigma_m * sigma_m * effective_correlation(k, m, rho, d);
}

CiReport verify_ci(const CovMatrix& c) {
    if (c.n == 0 || c.a.size() != c.n * c.n)
        throw std::invalid_argument("verify_ci: malformed matrix");
    CiReport rep;
    const std::size_t n = c.n;
    std::vector<double> row_block(n);
    std::size_t block = n;  // leaf count under a level-p node
    for (int p = 1; p <= c.m - 1; ++p) {
        block /= static_cast<std::size_t>(c.k);
        const std::size_t nodes = n / block;
        for (std::size_t w = 0; w < nodes; ++w) {
            const std::size_t lo = w * block;
            const std::size_t hi = lo + block;
            for (std::size_t i = 0; i < n; ++i) {
                double s = 0.0;
                for (std::size_t u = lo; u < hi; ++u)
                    s += c.at(i, u);
                row_block[i] = s;
            }
            double bj = 0.0;
            for (std::size_t u = lo; u < hi; ++u)
                bj += row_block[u];
            for (std::size_t i = lo; i < hi; ++i) {
                for (std::size_t j = 0; j < n; ++j) {
                    if (j >= lo && j < hi)
                        continue;
                    const double implied = row_block[i] * row_block[j] / bj;
                    const double v = std::fabs(c.at(i, j) - implied);
                    if (v > rep.max_violation)
                        rep.max_violation = v;
                    ++rep.checks;
                }
            }
        }
    }
    return rep;
}

EigenBounds eigen_bounds(const CovMatrix& c) {
    using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    Eigen::Map<const RowMajor> mat(c.a.data(), static_cast<Eigen::Index>(c.n),
                                   static_cast<Eigen::Index>(c.n));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(mat, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success)
        throw NumericError("eigenvalue computation failed");
    return EigenBounds{solver.eigenvalues().minCoeff(), solver.eigenvalues().maxCoeff()};
}

double grand_sum(const CovMatrix& c) {
    double s = 0.0;
    for (double x : c.a)
        s += x;
    return s;
}

hierarchy::ScenarioSet sample_joint(const CovMatrix& c, std::size_t n_sims, std::uint64_t seed,
                                    int threads) {
    if (n_sims < 2)
        throw std::invalid_argument("sample_joint: n_sims must be >= 2");
    const std::size_t n = c.n;
    if ((n + 1) * n_sims * sizeof(double) > (std::uint64_t(3) << 30))
        throw ResourceError("sample_joint: scenario storage exceeds the memory budget");

    // Cholesky of the correlation-scale matrix with floored pivots, so the
    // comonotone limit rho -> 1 factors cleanly.
    const double v = c.sigma_m * c.sigma_m;
    std::vector<double> l(n * n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        double d = c.at(j, j) / v;
        for (std::size_t t = 0; t < j; ++t)
            d -= l[j * n + t] * l[j * n + t];
        if (d < kPivotFloor)
            d = kPivotFloor;
        l[j * n + j] = std::sqrt(d);
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = c.at(i, j) / v;
            for (std::size_t t = 0; t < j; ++t)
                s -= l[i * n + t] * l[j * n + t];
            l[i * n + j] = s / l[j * n + j];
        }
    }

    hierarchy::ScenarioSet out;
    out.seed = seed;
    out.n_sims = n_sims;
    auto& leaves = out.levels[c.m];
    leaves.assign(n, std::vector<double>(n_sims));
    auto& rootvec = out.levels[0];
    rootvec.assign(1, std::vector<double>(n_sims));

    const rng::Stream stream(seed, rng::stream_id(rng::Purpose::JointSample, c.m, 1));
    const std::uint64_t stride = std::bit_ceil(static_cast<std::uint64_t>(n));

    auto rows = [&](std::size_t j0, std::size_t j1) {
        std::vector<double> z(n);
        for (std::size_t j = j0; j < j1; ++j) {
            for (std::size_t lane = 0; lane < n; ++lane)
                z[lane] = marginals::std_normal_quantile(stream.u01_at(j * stride + lane));
            double total = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                double s = 0.0;
                const double* lr = l.data() + i * n;
                for (std::size_t t = 0; t <= i; ++t)
                    s += lr[t] * z[t];
                const double x = c.sigma_m * s;
                leaves[i][j] = x;
                total += x;
            }
            rootvec[0][j] = total;
        }
    };

    const int w = std::max(1, threads);
    if (w == 1 || n_sims < 1024) {
        rows(0, n_sims);
    } else {
        std::vector<std::thread> pool;
        const std::size_t chunk = (n_sims + w - 1) / w;
        for (int t = 0; t < w; ++t) {
            const std::size_t j0 = std::min(n_sims, t * chunk);
            const std::size_t j1 = std::min(n_sims, j0 + chunk);
            if (j0 < j1)
                pool.emplace_back(rows, j0, j1);
        }
        for (auto& th : pool)
            th.join();
    }
    return out;
}

void write_csv(const CovMatrix& c, std::ostream& os) {
    char buf[40];
    for (std::size_t i = 0; i < c.n; ++i) {
        for (std::size_t j = 0; j < c.n; ++j) {
            std::snprintf(buf, sizeof buf, "%.17g", c.at(i, j));
            if (j)
                os << ',';
            os << buf;
        }
        os << '\n';
    }
}

} // namespace riskagg::covariance
