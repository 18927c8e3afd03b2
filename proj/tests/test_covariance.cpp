#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "oracles.hpp"
#include "riskagg/analytic.hpp"
#include "riskagg/covariance.hpp"
#include "riskagg/errors.hpp"

using namespace riskagg;

TEST_CASE("smallest tree covariance is the plain equicorrelation block") {
    const auto c = covariance::build_ci_covariance(2, 1, 0.6, 2.0);
    REQUIRE(c.n == 2);
    CHECK(c.at(0, 0) == doctest::Approx(4.0).epsilon(1e-14));
    CHECK(c.at(1, 1) == doctest::Approx(4.0).epsilon(1e-14));
    CHECK(c.at(0, 1) == doctest::Approx(2.4).epsilon(1e-14));
    CHECK(c.at(1, 0) == doctest::Approx(2.4).epsilon(1e-14));
}

TEST_CASE("cross-block entries follow the effective correlation") {
    // k=3, m=2, rho=0.4: same parent -> 0.4; different parents -> 0.24.
    const auto c = covariance::build_ci_covariance(3, 2, 0.4, 1.0);
    REQUIRE(c.n == 9);
    CHECK(c.at(0, 1) == doctest::Approx(0.4).epsilon(1e-14));
    CHECK(c.at(0, 3) == doctest::Approx(0.24).epsilon(1e-14));
    CHECK(c.at(0, 8) == doctest::Approx(0.24).epsilon(1e-14));
    CHECK(covariance::effective_correlation(3, 2, 0.4, 1) == doctest::Approx(0.4).epsilon(1e-14));
    CHECK(covariance::effective_correlation(3, 2, 0.4, 0) == doctest::Approx(0.24).epsilon(1e-14));
}

TEST_CASE("entry_from_ancestor agrees with the block recurrence") {
    for (double rho : {-0.2, 0.0, 0.3, 0.7, 1.0}) {
        const auto c = covariance::build_ci_covariance(3, 3, rho, 1.7);
        double worst = 0.0;
        for (std::size_t i = 0; i < c.n; ++i)
            for (std::size_t j = 0; j < c.n; ++j)
                worst = std::max(worst, std::abs(c.at(i, j) -
                                                 covariance::entry_from_ancestor(3, 3, rho, 1.7, i, j)));
        CHECK(worst < 1e-12);
    }
}

TEST_CASE("conditional independence holds exactly on constructed matrices") {
    for (int k : {2, 3, 4}) {
        for (int m : {1, 2, 3}) {
            for (double rho : {-0.2, 0.0, 0.3, 0.7}) {
                const auto c = covariance::build_ci_covariance(k, m, rho, 1.0);
                const auto rep = covariance::verify_ci(c);
                CHECK(rep.max_violation < 1e-10);
                if (m > 1) CHECK(rep.checks > 0);
            }
        }
    }
}

TEST_CASE("a perturbed matrix is flagged") {
    auto c = covariance::build_ci_covariance(3, 4, 0.5, 1.0);
    // Bump one cross-block covariance; CI must now fail by about the bump.
    c.at(0, 80) += 0.01;
    c.at(80, 0) += 0.01;
    const auto rep = covariance::verify_ci(c);
    CHECK(rep.max_violation > 0.009);
}

TEST_CASE("spectrum matches the closed form") {
    // Eigenvalues of the correlation-scale matrix: (1+(k-1)rho)^m once, and
    // (1+(k-1)rho)^{m-p-1} (1-rho) blocks; checked via bounds only.
    const int k = 3, m = 3;
    const double rho = 0.5, sigma = 1.0;
    const auto c = covariance::build_ci_covariance(k, m, rho, sigma);
    const auto ev = covariance::eigen_bounds(c);
    CHECK(ev.max_eigenvalue == doctest::Approx(std::pow(1.0 + (k - 1) * rho, m)).epsilon(1e-10));
    CHECK(ev.min_eigenvalue == doctest::Approx(1.0 - rho).epsilon(1e-10));
    // PSD for valid rho, including the negative part of the interval.
    const auto neg = covariance::build_ci_covariance(3, 2, -0.4, 1.0);
    CHECK(covariance::eigen_bounds(neg).min_eigenvalue > 0.0);
}

TEST_CASE("grand sum equals the closed-form root variance") {
    for (double rho : {-0.2, 0.0, 0.3, 0.7}) {
        const auto c = covariance::build_ci_covariance(2, 3, rho, 1.3);
        const double want = 1.69 * std::pow(2.0 + 2.0 * rho, 3);
        CHECK(covariance::grand_sum(c) == doctest::Approx(want).epsilon(1e-11));
    }
}

TEST_CASE("size cap is a resource error") {
    CHECK_THROWS_AS(covariance::build_ci_covariance(2, 13, 0.3, 1.0), ResourceError);
    CHECK_NOTHROW(covariance::build_ci_covariance(2, 12, 0.3, 1.0));  // 4096 exactly
}

TEST_CASE("invalid parameters are rejected") {
    CHECK_THROWS_AS(covariance::build_ci_covariance(2, 2, -1.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(covariance::build_ci_covariance(2, 2, 1.5, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(covariance::build_ci_covariance(2, 2, 0.5, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(covariance::effective_correlation(2, 3, 0.5, 3), std::invalid_argument);
}

TEST_CASE("sample_joint reproduces leaf and root moments") {
    const auto c = covariance::build_ci_covariance(2, 2, 0.5, 1.5);
    const auto s = covariance::sample_joint(c, 200000, 91);
    REQUIRE(s.has_level(2));
    const auto& leaf = s.node({2, 1});
    CHECK(oracles::sd(leaf) == doctest::Approx(1.5).epsilon(0.01));
    CHECK(std::abs(oracles::mean(leaf)) < 0.02);
    const double want_root_var = covariance::grand_sum(c);
    CHECK(oracles::variance(s.root()) == doctest::Approx(want_root_var).epsilon(0.02));
    // Pairwise correlation across the deepest split.
    const auto& l0 = s.node({2, 1});
    const auto& l1 = s.node({2, 2});
    CHECK(oracles::pearson(l0, l1) == doctest::Approx(0.5).epsilon(0.02));
}

TEST_CASE("sample_joint is thread-count independent") {
    const auto c = covariance::build_ci_covariance(2, 3, 0.4, 1.0);
    const auto a = covariance::sample_joint(c, 20000, 92, 1);
    const auto b = covariance::sample_joint(c, 20000, 92, 4);
    CHECK(a.root() == b.root());
    for (std::uint64_t i = 1; i <= 8; ++i) CHECK(a.node({3, i}) == b.node({3, i}));
}

TEST_CASE("csv writer emits n rows at full precision") {
    const auto c = covariance::build_ci_covariance(2, 1, 0.123456789012345, 1.0);
    std::ostringstream os;
    covariance::write_csv(c, os);
    const std::string text = os.str();
    CHECK(text.find("0.12345678901234") != std::string::npos);
    CHECK(std::count(text.begin(), text.end(), '\n') == 2);
}
