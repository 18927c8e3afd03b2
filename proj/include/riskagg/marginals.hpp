#pragma once

namespace riskagg::marginals {

enum class Kind { Normal, LogNormal };

// Leaf marginal. Normal: (location, scale) = (mean, sd). LogNormal:
// (location, scale) = (log_mean, log_sd), the parameters of the underlying
// normal, so quantile transforms are exp() of the normal case.
struct MarginalSpec {
    Kind kind = Kind::Normal;
    double location = 0.0;
    double scale = 1.0;

    static MarginalSpec normal(double mean, double sd);
    static MarginalSpec lognormal(double log_mean, double log_sd);
};

double std_normal_pdf(double x);
double std_normal_cdf(double x);
// Inverse standard normal CDF, u in (0,1). Wichura's AS 241 (PPND16)
// rational approximations; relative accuracy ~1e-15, target 1e-12.
double std_normal_quantile(double u);

struct LogNormalParams {
    double log_mean;
    double log_sd;
};
// Match a lognormal to a given mean and standard deviation (both > 0).
LogNormalParams lognormal_from_moments(double mean, double sd);

double mean(const MarginalSpec& m);
double sd(const MarginalSpec& m);
double cdf(const MarginalSpec& m, double x);
double quantile(const MarginalSpec& m, double u);

// Upper-tail TVaR at level alpha in (0,1): the mean of the worst (largest)
// alpha fraction of outcomes. xTVaR subtracts the mean and is >= 0.
double exact_tvar(const MarginalSpec& m, double alpha);
double exact_xtvar(const MarginalSpec& m, double alpha);

} // namespace riskagg::marginals
