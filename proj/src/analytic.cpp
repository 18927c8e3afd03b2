#include "riskagg/analytic.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "riskagg/errors.hpp"
#include "riskagg/marginals.hpp"

namespace riskagg::analytic {

namespace {

void validate_shape(int k, int m) {
    if (k < 2)
        throw std::invalid_argument("k must be >= 2");
    if (m < 1)
        throw std::invalid_argument("m must be >= 1");
}

// rho = 1 included as the continuity limit.
void validate_rho(int k, double rho) {
    if (!(rho > -1.0 / (k - 1) && rho <= 1.0))
        throw std::invalid_argument("rho must lie in (-1/(k-1), 1]");
}

// Aggregate variance multiplier per level: k + (k^2 - k) rho.
double level_factor(int k, double rho) {
    return k + (static_cast<double>(k) * k - k) * rho;
}

} // namespace

void validate(const GaussianTreeParams& p) {
    validate_shape(p.k, p.m);
    validate_rho(p.k, p.rho);
    if (!(p.sigma_m > 0.0))
        throw std::invalid_argument("sigma_m must be positive");
}

double sigma_level(const GaussianTreeParams& p, int level) {
    validate(p);
    if (level < 0 || level > p.m)
        throw std::invalid_argument("sigma_level: level out of range");
    return p.sigma_m * std::pow(level_factor(p.k, p.rho), 0.5 * (p.m - level));
}

double xtvar_multiplier(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0))
        throw std::invalid_argument("alpha must lie in (0,1)");
    return marginals::std_normal_pdf(marginals::std_normal_quantile(1.0 - alpha)) / alpha;
}

SumsAtRisk sums_at_risk(const GaussianTreeParams& p, double alpha) {
    validate(p);
    const double f = xtvar_multiplier(alpha);
    const double km = std::pow(static_cast<double>(p.k), p.m);
    SumsAtRisk s;
    s.s0 = f * p.sigma_m * std::sqrt(km);
    s.s_z = f * p.sigma_m * std::pow(level_factor(p.k, p.rho), 0.5 * p.m);
    s.s1 = f * p.sigma_m * km;
    return s;
}

double db_gaussian(int k, int m, double rho) {
    validate_shape(k, m);
    validate_rho(k, rho);
    return 1.0 - std::pow(1.0 / k + (1.0 - 1.0 / k) * rho, 0.5 * m);
}

double eta_gaussian(int k, int m, double rho) {
    validate_shape(k, m);
    validate_rho(k, rho);
    const double km2 = std::pow(static_cast<double>(k), 0.5 * m);  // k^(m/2)
    const double km = km2 * km2;
    return (std::pow(level_factor(k, rho), 0.5 * m) - km2) / (km - km2);
}

std::vector<ShapeResult> compare_shapes(std::uint64_t n_leaves,
                                        const std::vector<std::pair<int, int>>& shapes, double rho) {
    if (shapes.empty())
        throw std::invalid_argument("compare_shapes: no shapes given");
    std::vector<ShapeResult> out;
    out.reserve(shapes.size());
    for (const auto& [k, m] : shapes) {
        validate_shape(k, m);
        if (std::any_of(out.begin(), out.end(),
                        [k = k, m = m](const ShapeResult& r) { return r.k == k && r.m == m; }))
            throw std::invalid_argument("compare_shapes: duplicate shape");
        std::uint64_t leaves = 1;
        for (int i = 0; i < m; ++i) {
            if (leaves > n_leaves)
                break;
            leaves *= static_cast<std::uint64_t>(k);
        }
        if (leaves != n_leaves)
            throw std::invalid_argument("compare_shapes: shape does not have the requested leaf count");
        validate_rho(k, rho);
        out.push_back(ShapeResult{k, m, db_gaussian(k, m, rho), eta_gaussian(k, m, rho)});
    }
    std::sort(out.begin(), out.end(), [](const ShapeResult& a, const ShapeResult& b) {
        if (a.db != b.db)
            return a.db > b.db;
        return a.k < b.k;
    });
    if (rho > 0.0 && rho < 1.0) {
        // Thinner tree = higher DB; after the DB sort k must be increasing.
        for (std::size_t i = 1; i < out.size(); ++i) {
            if (out[i].k <= out[i - 1].k)
                throw NumericError("compare_shapes: DB is not strictly decreasing in k");
        }
    }
    return out;
}

} // namespace riskagg::analytic
