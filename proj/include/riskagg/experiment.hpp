#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "riskagg/copulas.hpp"
#include "riskagg/marginals.hpp"

namespace riskagg::experiment {

enum class Mode { Analytic, Mc, Both, Covariance, CompareShapes };

Mode mode_from_string(const std::string& s);
std::string to_string(Mode mode);

// One experiment: a (k, m) tree, a leaf marginal, a copula family swept over
// a parameter grid. Parsed from JSON; field names match the JSON schema.
struct ExperimentConfig {
    Mode mode = Mode::Analytic;
    int k = 2;
    int m = 1;
    marginals::MarginalSpec leaf = marginals::MarginalSpec::normal(0.0, 1.0);
    copulas::Kind copula_kind = copulas::Kind::Independence;
    std::vector<double> grid{0.0};     // rho or theta values
    std::vector<int> m_list;           // analytic only; defaults to {m}
    double alpha = 0.01;
    std::size_t n_sims = 10000;
    std::uint64_t seed = 1;
    int threads = 1;
    std::vector<std::pair<int, int>> shapes;  // compare-shapes: (k, m) list
    double shape_rho = 0.4;
    std::string out;                   // output directory; empty = stdout
};

ExperimentConfig config_from_json(const std::string& text);
std::string config_to_json(const ExperimentConfig& cfg);

// MC endpoint approximations (rho = 1 -> 0.999, theta > 50 -> 50).
struct Substitution {
    std::string field;
    double requested = 0.0;
    double used = 0.0;
};

struct RunResult {
    // (file name, content) in emission order; CSV data plus report.json last.
    std::vector<std::pair<std::string, std::string>> files;
    std::vector<Substitution> substitutions;
};

RunResult run(const ExperimentConfig& cfg);

// Parses flags, loads the config, runs, writes outputs. Returns the process
// exit code: 0 success, 2 config error, 3 numeric failure, 4 resource cap.
int cli_main(int argc, char** argv);

} // namespace riskagg::experiment
