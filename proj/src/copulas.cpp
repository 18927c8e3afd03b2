#include "riskagg/copulas.hpp"

#include <bit>
#include <cmath>
#include <stdexcept>

#include "riskagg/errors.hpp"
#include "riskagg/marginals.hpp"

namespace riskagg::copulas {

namespace {

constexpr double kClaytonIndepCutoff = 1e-8;
constexpr double kUEps = 1e-15;

double clamp_u(double u) {
    return std::fmin(1.0 - kUEps, std::fmax(kUEps, u));
}

} // namespace

CopulaSpec CopulaSpec::independence(int k) {
    CopulaSpec s{Kind::Independence, k, 0.0};
    validate(s);
    return s;
}

CopulaSpec CopulaSpec::gaussian(int k, double rho) {
    CopulaSpec s{Kind::GaussianEqui, k, rho};
    validate(s);
    return s;
}

CopulaSpec CopulaSpec::clayton(int k, double theta) {
    CopulaSpec s{Kind::Clayton, k, theta};
    validate(s);
    return s;
}

void validate(const CopulaSpec& spec) {
    if (spec.k < 2)
        throw std::invalid_argument("copula dimension k must be >= 2");
    switch (spec.kind) {
    case Kind::Independence:
        return;
    case Kind::GaussianEqui: {
        const double lo = -1.0 / (spec.k - 1);
        if (!(spec.param > lo && spec.param < 1.0))
            throw std::invalid_argument("equicorrelation rho must lie in (-1/(k-1), 1)");
        return;
    }
    case Kind::Clayton:
        if (!(spec.param >= 0.0) || !std::isfinite(spec.param))
            throw std::invalid_argument("Clayton theta must be finite and >= 0");
        return;
    }
    throw std::invalid_argument("unknown copula kind");
}

double equicorr_eigen_max(int k, double rho) {
    return std::fmax(1.0 + (k - 1) * rho, 1.0 - rho);
}

double equicorr_eigen_min(int k, double rho) {
    return std::fmin(1.0 + (k - 1) * rho, 1.0 - rho);
}

void EquicorrFactor::apply(const double* z, double* x) const {
    if (one_factor) {
        const double a = std::sqrt(rho);
        const double b = std::sqrt(1.0 - rho);
        const double z0 = z[k];
        for (int i = 0; i < k; ++i)
            x[i] = a * z0 + b * z[i];
        return;
    }
    for (int i = 0; i < k; ++i) {
        double s = 0.0;
        for (int d = 0; d <= i; ++d)
            s += chol[static_cast<std::size_t>(i) * k + d] * z[d];
        x[i] = s;
    }
}

std::vector<double> EquicorrFactor::reconstruct() const {
    std::vector<double> m(static_cast<std::size_t>(k) * k);
    if (one_factor) {
        for (int i = 0; i < k; ++i)
            for (int j = 0; j < k; ++j)
                m[static_cast<std::size_t>(i) * k + j] = (i == j) ? 1.0 : rho;
        return m;
    }
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j) {
            double s = 0.0;
            for (int d = 0; d <= std::min(i, j); ++d)
                s += chol[static_cast<std::size_t>(i) * k + d] * chol[static_cast<std::size_t>(j) * k + d];
            m[static_cast<std::size_t>(i) * k + j] = s;
        }
    return m;
}

EquicorrFactor equicorr_factorization(int k, double rho) {
    validate(CopulaSpec{Kind::GaussianEqui, k, rho});
    EquicorrFactor f;
    f.k = k;
    f.rho = rho;
    if (rho >= 0.0) {
        f.one_factor = true;
        return f;
    }
    f.one_factor = false;
    f.chol.assign(static_cast<std::size_t>(k) * k, 0.0);
    auto at = [&](int i, int j) -> double& { return f.chol[static_cast<std::size_t>(i) * k + j]; };
    for (int j = 0; j < k; ++j) {
        double d = 1.0;  // unit diagonal
        for (int t = 0; t < j; ++t)
            d -= at(j, t) * at(j, t);
        if (d <= 0.0)
            throw NumericError("equicorrelation matrix is not positive definite");
        at(j, j) = std::sqrt(d);
        for (int i = j + 1; i < k; ++i) {
            double s = rho;
            for (int t = 0; t < j; ++t)
                s -= at(i, t) * at(j, t);
            at(i, j) = s / at(j, j);
        }
    }
    return f;
}

ColumnSampler::ColumnSampler(const CopulaSpec& spec, rng::Stream stream, std::size_t n)
    : spec_(spec), stream_(stream), n_(n) {
    validate(spec);
    if (n == 0)
        throw std::invalid_argument("ColumnSampler: n must be positive");
    // Row stride: lanes 0..k-1 drive the columns, lane k the shared factor,
    // anything above feeds rejection samplers.
    stride_ = std::bit_ceil(static_cast<std::uint64_t>(spec.k) + 34);

    as_independence_ = spec.kind == Kind::Independence ||
                       (spec.kind == Kind::Clayton && spec.param <= kClaytonIndepCutoff);
    if (as_independence_)
        return;

    if (spec.kind == Kind::GaussianEqui) {
        factor_ = equicorr_factorization(spec.k, spec.param);
        if (factor_.one_factor) {
            shared_.resize(n);
            for (std::size_t j = 0; j < n; ++j)
                shared_[j] = marginals::std_normal_quantile(stream_.u01_at(j * stride_ + spec.k));
        }
        return;
    }

    // Clayton frailty V ~ Gamma(1/theta, 1), one draw per row.
    shared_.resize(n);
    const double shape = 1.0 / spec.param;
    for (std::size_t j = 0; j < n; ++j) {
        rng::Cursor cur(stream_, j * stride_ + spec.k + 1, (j + 1) * stride_);
        shared_[j] = cur.gamma(shape);
    }
}

double ColumnSampler::driver(std::size_t row, int lane) const {
    return stream_.u01_at(row * stride_ + static_cast<std::uint64_t>(lane));
}

void ColumnSampler::rank_key_column(int c, double* out) const {
    if (c < 0 || c >= spec_.k)
        throw std::invalid_argument("rank_key_column: column out of range");
    if (as_independence_) {
        for (std::size_t j = 0; j < n_; ++j)
            out[j] = driver(j, c);
        return;
    }
    if (spec_.kind == Kind::GaussianEqui) {
        if (factor_.one_factor) {
            const double a = std::sqrt(factor_.rho);
            const double b = std::sqrt(1.0 - factor_.rho);
            for (std::size_t j = 0; j < n_; ++j)
                out[j] = a * shared_[j] + b * marginals::std_normal_quantile(driver(j, c));
        } else {
            const double* lrow = factor_.chol.data() + static_cast<std::size_t>(c) * spec_.k;
            for (std::size_t j = 0; j < n_; ++j) {
                double s = 0.0;
                for (int d = 0; d <= c; ++d)
                    s += lrow[d] * marginals::std_normal_quantile(driver(j, d));
                out[j] = s;
            }
        }
        return;
    }
    // Clayton: u = (1 + E/V)^(-1/theta) is strictly decreasing in E/V, so
    // log(u01)/V (= -E/V) ranks rows identically to u itself.
    for (std::size_t j = 0; j < n_; ++j)
        out[j] = std::log(driver(j, c)) / shared_[j];
}

void ColumnSampler::uniform_column(int c, double* out) const {
    if (c < 0 || c >= spec_.k)
        throw std::invalid_argument("uniform_column: column out of range");
    if (as_independence_) {
        for (std::size_t j = 0; j < n_; ++j)
            out[j] = driver(j, c);
        return;
    }
    if (spec_.kind == Kind::GaussianEqui) {
        rank_key_column(c, out);
        for (std::size_t j = 0; j < n_; ++j)
            out[j] = clamp_u(marginals::std_normal_cdf(out[j]));
        return;
    }
    const double inv_theta = 1.0 / spec_.param;
    for (std::size_t j = 0; j < n_; ++j) {
        const double e = -std::log(driver(j, c));
        out[j] = clamp_u(std::pow(1.0 + e / shared_[j], -inv_theta));
    }
}

UniformBlock sample_copula(const CopulaSpec& spec, std::size_t n, rng::Stream stream) {
    ColumnSampler sampler(spec, stream, n);
    UniformBlock block;
    block.n = n;
    block.k = spec.k;
    block.data.resize(n * static_cast<std::size_t>(spec.k));
    for (int c = 0; c < spec.k; ++c)
        sampler.uniform_column(c, block.data.data() + static_cast<std::size_t>(c) * n);
    return block;
}

} // namespace riskagg::copulas
