#include "riskagg/marginals.hpp"

#include <cmath>
#include <stdexcept>

namespace riskagg::marginals {

namespace {

constexpr double kSqrt2 = 1.4142135623730951;
constexpr double kInvSqrt2Pi = 0.3989422804014327;

// Uniforms are clamped away from the endpoints before quantile transforms so
// MC paths can never produce infinities.
constexpr double kUEps = 1e-15;

void check_alpha(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0))
        throw std::invalid_argument("alpha must lie in (0,1)");
}

} // namespace

MarginalSpec MarginalSpec::normal(double mean, double sd) {
    if (!(sd > 0.0) || !std::isfinite(sd) || !std::isfinite(mean))
        throw std::invalid_argument("Normal marginal needs finite mean and sd > 0");
    return MarginalSpec{Kind::Normal, mean, sd};
}

MarginalSpec MarginalSpec::lognormal(double log_mean, double log_sd) {
    if (!(log_sd > 0.0) || !std::isfinite(log_sd) || !std::isfinite(log_mean))
        throw std::invalid_argument("LogNormal marginal needs finite log_mean and log_sd > 0");
    return MarginalSpec{Kind::LogNormal, log_mean, log_sd};
}

double std_normal_pdf(double x) {
    return kInvSqrt2Pi * std::exp(-0.5 * x * x);
}

double std_normal_cdf(double x) {
    return 0.5 * std::erfc(-x / kSqrt2);
}

// AS 241, PPND16 (Wichura 1988). Three rational approximations by region.
double std_normal_quantile(double u) {
    if (!(u > 0.0 && u < 1.0))
        throw std::invalid_argument("std_normal_quantile: u must lie in (0,1)");
    const double q = u - 0.5;
    if (std::fabs(q) <= 0.425) {
        const double r = 0.180625 - q * q;
        const double num =
            (((((((2.5090809287301226727e3 * r + 3.3430575583588128105e4) * r +
                  6.7265770927008700853e4) * r + 4.5921953931549871457e4) * r +
                1.3731693765509461125e4) * r + 1.9715909503065514427e3) * r +
              1.3314166789178437745e2) * r + 3.3871328727963666080e0);
        const double den =
            (((((((5.2264952788528545610e3 * r + 2.8729085735721942674e4) * r +
                  3.9307895800092710610e4) * r + 2.1213794301586595867e4) * r +
                5.3941960214247511077e3) * r + 6.8718700749205790830e2) * r +
              4.2313330701600911252e1) * r + 1.0);
        return q * num / den;
    }
    double r = (q < 0.0) ? u : 1.0 - u;
    r = std::sqrt(-std::log(r));
    double x;
    if (r <= 5.0) {
        r -= 1.6;
        const double num =
            (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
                  2.41780725177450611770e-1) * r + 1.27045825245236838258e0) * r +
                3.64784832476320460504e0) * r + 5.76949722146069140550e0) * r +
              4.63033784615654529590e0) * r + 1.42343711074968357734e0);
        const double den =
            (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
                  1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
                6.89767334985100004550e-1) * r + 1.67638483018380384940e0) * r +
              2.05319162663775882187e0) * r + 1.0);
        x = num / den;
    } else {
        r -= 5.0;
        const double num =
            (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                  1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
                2.96560571828504891230e-1) * r + 1.78482653991729133580e0) * r +
              5.46378491116411436990e0) * r + 6.65790464350110377720e0);
        const double den =
            (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
                  1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r +
                1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
              5.99832206555887937690e-1) * r + 1.0);
        x = num / den;
    }
    return (q < 0.0) ? -x : x;
}

LogNormalParams lognormal_from_moments(double mean, double sd) {
    if (!(mean > 0.0) || !(sd > 0.0))
        throw std::invalid_argument("lognormal_from_moments: mean and sd must be positive");
    const double cv2 = (sd / mean) * (sd / mean);
    const double log_var = std::log1p(cv2);
    const double log_sd = std::sqrt(log_var);
    const double log_mean = std::log(mean) - 0.5 * log_var;
    return {log_mean, log_sd};
}

double mean(const MarginalSpec& m) {
    switch (m.kind) {
    case Kind::Normal:
        return m.location;
    case Kind::LogNormal:
        return std::exp(m.location + 0.5 * m.scale * m.scale);
    }
    throw std::logic_error("unreachable");
}

double sd(const MarginalSpec& m) {
    switch (m.kind) {
    case Kind::Normal:
        return m.scale;
    case Kind::LogNormal: {
        const double s2 = m.scale * m.scale;
        return std::exp(m.location + 0.5 * s2) * std::sqrt(std::expm1(s2));
    }
    }
    throw std::logic_error("unreachable");
}

double cdf(const MarginalSpec& m, double x) {
    switch (m.kind) {
    case Kind::Normal:
        return std_normal_cdf((x - m.location) / m.scale);
    case Kind::LogNormal:
        if (x <= 0.0)
            return 0.0;
        return std_normal_cdf((std::log(x) - m.location) / m.scale);
    }
    throw std::logic_error("unreachable");
}

double quantile(const MarginalSpec& m, double u) {
    if (!(u > 0.0 && u < 1.0))
        throw std::invalid_argument("quantile: u must lie in (0,1)");
    const double uc = std::fmin(1.0 - kUEps, std::fmax(kUEps, u));
    const double z = std_normal_quantile(uc);
    switch (m.kind) {
    case Kind::Normal:
        return m.location + m.scale * z;
    case Kind::LogNormal:
        return std::exp(m.location + m.scale * z);
    }
    throw std::logic_error("unreachable");
}

double exact_tvar(const MarginalSpec& m, double alpha) {
    check_alpha(alpha);
    const double z = std_normal_quantile(1.0 - alpha);
    switch (m.kind) {
    case Kind::Normal:
        return m.location + m.scale * std_normal_pdf(z) / alpha;
    case Kind::LogNormal:
        return mean(m) * std_normal_cdf(m.scale - z) / alpha;
    }
    throw std::logic_error("unreachable");
}

double exact_xtvar(const MarginalSpec& m, double alpha) {
    return exact_tvar(m, alpha) - mean(m);
}

} // namespace riskagg::marginals
