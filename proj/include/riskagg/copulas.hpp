#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "riskagg/rng.hpp"

namespace riskagg::copulas {

enum class Kind { Independence, GaussianEqui, Clayton };

// Exchangeable k-dimensional copula. param is rho for GaussianEqui
// (-1/(k-1) < rho < 1) and theta for Clayton (theta >= 0; theta <= 1e-8 is
// treated as independence).
struct CopulaSpec {
    Kind kind = Kind::Independence;
    int k = 2;
    double param = 0.0;

    static CopulaSpec independence(int k);
    static CopulaSpec gaussian(int k, double rho);
    static CopulaSpec clayton(int k, double theta);
};

void validate(const CopulaSpec& spec);

// Eigenvalues of the equicorrelation matrix (1-rho)I + rho J: 1+(k-1)rho
// once and 1-rho with multiplicity k-1.
double equicorr_eigen_max(int k, double rho);
double equicorr_eigen_min(int k, double rho);

// Linear map L with L L^T equal to the equicorrelation matrix. For rho >= 0
// the one-factor form x_i = sqrt(rho) z0 + sqrt(1-rho) z_i (k+1 inputs, the
// common factor last); for rho < 0 a dense Cholesky factor (k inputs).
struct EquicorrFactor {
    int k = 0;
    double rho = 0.0;
    bool one_factor = true;
    std::vector<double> chol;  // lower triangular, row-major, empty if one_factor

    int inputs() const { return one_factor ? k + 1 : k; }
    void apply(const double* z, double* x) const;
    std::vector<double> reconstruct() const;  // L L^T, row-major k x k
};

EquicorrFactor equicorr_factorization(int k, double rho);

// n x k block of copula samples, stored column-major.
struct UniformBlock {
    std::size_t n = 0;
    int k = 0;
    std::vector<double> data;

    double operator()(std::size_t i, int c) const { return data[static_cast<std::size_t>(c) * n + i]; }
};

// Column-wise sampler bound to one (spec, stream, n). uniform_column yields
// proper copula uniforms; rank_key_column yields values with the same
// row-wise ranks at lower cost (a strictly increasing transform of the
// uniforms), which is all the re-coupling step needs.
class ColumnSampler {
public:
    ColumnSampler(const CopulaSpec& spec, rng::Stream stream, std::size_t n);

    void uniform_column(int c, double* out) const;
    void rank_key_column(int c, double* out) const;

    const CopulaSpec& spec() const { return spec_; }
    std::size_t rows() const { return n_; }

private:
    double driver(std::size_t row, int lane) const;

    CopulaSpec spec_;
    rng::Stream stream_;
    std::size_t n_ = 0;
    std::uint64_t stride_ = 0;
    bool as_independence_ = false;
    EquicorrFactor factor_;       // GaussianEqui only
    std::vector<double> shared_;  // common factor z0, or Clayton frailty V
};

UniformBlock sample_copula(const CopulaSpec& spec, std::size_t n, rng::Stream stream);

} // namespace riskagg::copulas
