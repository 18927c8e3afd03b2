#include "riskagg/experiment.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "riskagg/analytic.hpp"
#include "riskagg/covariance.hpp"
#include "riskagg/errors.hpp"
#include "riskagg/hierarchy.hpp"
#include "riskagg/riskmetrics.hpp"

namespace riskagg::experiment {

namespace {

using nlohmann::json;

std::string fmt17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

constexpr double kRhoEndpoint = 0.999;
constexpr double kThetaEndpoint = 50.0;

[[noreturn]] void config_fail(const std::string& msg) { throw ConfigError("config: " + msg); }

const json& require_field(const json& j, const char* name) {
    auto it = j.find(name);
    if (it == j.end()) config_fail(std::string("missing field '") + name + "'");
    return *it;
}

double as_number(const json& j, const char* name) {
    if (!j.is_number()) config_fail(std::string("field '") + name + "' must be a number");
    return j.get<double>();
}

} // namespace

Mode mode_from_string(const std::string& s) {
    if (s == "analytic") return Mode::Analytic;
    if (s == "mc") return Mode::Mc;
    if (s == "both") return Mode::Both;
    if (s == "covariance") return Mode::Covariance;
    if (s == "compare-shapes") return Mode::CompareShapes;
    config_fail("unknown mode '" + s + "'");
}

std::string to_string(Mode mode) {
    switch (mode) {
        case Mode::Analytic: return "analytic";
        case Mode::Mc: return "mc";
        case Mode::Both: return "both";
        case Mode::Covariance: return "covariance";
        case Mode::CompareShapes: return "compare-shapes";
    }
    return "?";
}

ExperimentConfig config_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        config_fail(e.what());
    }
    if (!j.is_object()) config_fail("top level must be an object");

    ExperimentConfig cfg;
    cfg.mode = mode_from_string(require_field(j, "mode").get<std::string>());

    const json& tree = require_field(j, "tree");
    cfg.k = static_cast<int>(as_number(require_field(tree, "k"), "tree.k"));
    cfg.m = static_cast<int>(as_number(require_field(tree, "m"), "tree.m"));
    if (cfg.k < 2) config_fail("tree.k must be >= 2");
    if (cfg.m < 1) config_fail("tree.m must be >= 1");

    const json& marg = require_field(j, "marginal");
    const std::string mkind = require_field(marg, "kind").get<std::string>();
    try {
        if (mkind == "normal") {
            cfg.leaf = marginals::MarginalSpec::normal(as_number(require_field(marg, "mean"), "marginal.mean"),
                                                       as_number(require_field(marg, "sd"), "marginal.sd"));
        } else if (mkind == "lognormal") {
            if (marg.contains("log_mean") || marg.contains("log_sd")) {
                cfg.leaf = marginals::MarginalSpec::lognormal(
                    as_number(require_field(marg, "log_mean"), "marginal.log_mean"),
                    as_number(require_field(marg, "log_sd"), "marginal.log_sd"));
            } else {
                const auto p = marginals::lognormal_from_moments(
                    as_number(require_field(marg, "mean"), "marginal.mean"),
                    as_number(require_field(marg, "sd"), "marginal.sd"));
                cfg.leaf = marginals::MarginalSpec::lognormal(p.log_mean, p.log_sd);
            }
        } else {
            config_fail("marginal.kind must be 'normal' or 'lognormal'");
        }
    } catch (const std::invalid_argument& e) {
        config_fail(std::string("marginal: ") + e.what());
    }

    const json& cop = require_field(j, "copula");
    const std::string ckind = require_field(cop, "kind").get<std::string>();
    if (ckind == "independence") cfg.copula_kind = copulas::Kind::Independence;
    else if (ckind == "gaussian") cfg.copula_kind = copulas::Kind::GaussianEqui;
    else if (ckind == "clayton") cfg.copula_kind = copulas::Kind::Clayton;
    else config_fail("copula.kind must be 'independence', 'gaussian' or 'clayton'");

    if (cfg.copula_kind == copulas::Kind::Independence) {
        cfg.grid = {0.0};
    } else {
        const json& grid = require_field(cop, "grid");
        if (!grid.is_array() || grid.empty()) config_fail("copula.grid must be a non-empty array");
        cfg.grid.clear();
        for (const auto& g : grid) cfg.grid.push_back(as_number(g, "copula.grid"));
    }

    if (j.contains("m_list")) {
        if (!j["m_list"].is_array() || j["m_list"].empty()) config_fail("m_list must be a non-empty array");
        for (const auto& v : j["m_list"]) {
            int mm = static_cast<int>(as_number(v, "m_list"));
            if (mm < 1) config_fail("m_list entries must be >= 1");
            cfg.m_list.push_back(mm);
        }
    }
    if (cfg.m_list.empty()) cfg.m_list = {cfg.m};

    cfg.alpha = j.contains("alpha") ? as_number(j["alpha"], "alpha") : 0.01;
    if (!(cfg.alpha > 0.0) || !(cfg.alpha < 1.0)) config_fail("alpha must lie in (0, 1)");

    if (j.contains("n_sims")) {
        const double n = as_number(j["n_sims"], "n_sims");
        if (!(n >= 2.0) || n != std::floor(n)) config_fail("n_sims must be an integer >= 2");
        cfg.n_sims = static_cast<std::size_t>(n);
    }
    if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("threads")) {
        cfg.threads = static_cast<int>(as_number(j["threads"], "threads"));
        if (cfg.threads < 1) config_fail("threads must be >= 1");
    }

    if (j.contains("shapes")) {
        if (!j["shapes"].is_array()) config_fail("shapes must be an array of [k, m] pairs");
        for (const auto& s : j["shapes"]) {
            if (!s.is_array() || s.size() != 2) config_fail("shapes entries must be [k, m] pairs");
            cfg.shapes.emplace_back(static_cast<int>(as_number(s[0], "shapes.k")),
                                    static_cast<int>(as_number(s[1], "shapes.m")));
        }
    }
    if (j.contains("shape_rho")) cfg.shape_rho = as_number(j["shape_rho"], "shape_rho");
    if (j.contains("out")) cfg.out = j["out"].get<std::string>();

    if (cfg.mode == Mode::CompareShapes && cfg.shapes.empty())
        config_fail("compare-shapes mode needs a 'shapes' list");
    return cfg;
}

std::string config_to_json(const ExperimentConfig& cfg) {
    json j;
    j["mode"] = to_string(cfg.mode);
    j["tree"] = {{"k", cfg.k}, {"m", cfg.m}};
    if (cfg.leaf.kind == marginals::Kind::Normal)
        j["marginal"] = {{"kind", "normal"}, {"mean", cfg.leaf.location}, {"sd", cfg.leaf.scale}};
    else
        j["marginal"] = {{"kind", "lognormal"}, {"log_mean", cfg.leaf.location}, {"log_sd", cfg.leaf.scale}};
    switch (cfg.copula_kind) {
        case copulas::Kind::Independence: j["copula"] = {{"kind", "independence"}}; break;
        case copulas::Kind::GaussianEqui: j["copula"] = {{"kind", "gaussian"}, {"grid", cfg.grid}}; break;
        case copulas::Kind::Clayton: j["copula"] = {{"kind", "clayton"}, {"grid", cfg.grid}}; break;
    }
    j["m_list"] = cfg.m_list;
    j["alpha"] = cfg.alpha;
    j["n_sims"] = cfg.n_sims;
    j["seed"] = cfg.seed;
    j["threads"] = cfg.threads;
    if (!cfg.shapes.empty()) {
        json shapes = json::array();
        for (const auto& [k, m] : cfg.shapes) shapes.push_back({k, m});
        j["shapes"] = shapes;
    }
    j["shape_rho"] = cfg.shape_rho;
    j["out"] = cfg.out;
    return j.dump(2);
}

namespace {

void run_analytic(const ExperimentConfig& cfg, RunResult& out) {
    if (cfg.leaf.kind != marginals::Kind::Normal)
        config_fail("analytic mode needs a normal marginal");
    if (cfg.copula_kind == copulas::Kind::Clayton)
        config_fail("analytic mode needs a gaussian or independence copula");

    std::string csv = "k,m,rho,S0,SZ,S1,eta,DB\n";
    for (int m : cfg.m_list) {
        for (double rho : cfg.grid) {
            analytic::GaussianTreeParams p{cfg.k, m, rho, cfg.leaf.scale};
            analytic::validate(p);
            const auto s = analytic::sums_at_risk(p, cfg.alpha);
            csv += std::to_string(cfg.k) + ',' + std::to_string(m) + ',' + fmt17(rho);
            csv += ',' + fmt17(s.s0) + ',' + fmt17(s.s_z) + ',' + fmt17(s.s1);
            csv += ',' + fmt17(analytic::eta_gaussian(cfg.k, m, rho));
            csv += ',' + fmt17(analytic::db_gaussian(cfg.k, m, rho)) + '\n';
        }
    }
    out.files.emplace_back("analytic.csv", std::move(csv));
}

// Grid value actually simulated, recording endpoint approximations.
double mc_param(const ExperimentConfig& cfg, double requested, RunResult& out) {
    double used = requested;
    if (cfg.copula_kind == copulas::Kind::GaussianEqui && std::abs(requested - 1.0) <= 1e-12)
        used = kRhoEndpoint;
    if (cfg.copula_kind == copulas::Kind::Clayton && requested > kThetaEndpoint)
        used = kThetaEndpoint;
    if (used != requested) {
        const char* field = cfg.copula_kind == copulas::Kind::Clayton ? "theta" : "rho";
        out.substitutions.push_back({field, requested, used});
    }
    return used;
}

copulas::CopulaSpec make_copula(copulas::Kind kind, int k, double param) {
    switch (kind) {
        case copulas::Kind::GaussianEqui: return copulas::CopulaSpec::gaussian(k, param);
        case copulas::Kind::Clayton: return copulas::CopulaSpec::clayton(k, param);
        default: return copulas::CopulaSpec::independence(k);
    }
}

void run_mc(const ExperimentConfig& cfg, RunResult& out) {
    const char* family = cfg.copula_kind == copulas::Kind::GaussianEqui ? "gaussian"
                         : cfg.copula_kind == copulas::Kind::Clayton    ? "clayton"
                                                                        : "independence";
    std::string csv =
        "k,m,copula,param,requested_param,"
        "S0,SZ,S1,eta,DB,se_S0,se_SZ,se_eta,se_DB,"
        "exact_S0,exact_SZ,exact_S1,exact_eta,exact_DB,n_sims,seed\n";

    hierarchy::AggregationOptions opts;
    opts.threads = cfg.threads;

    for (double requested : cfg.grid) {
        const double used = mc_param(cfg, requested, out);
        copulas::CopulaSpec cop = copulas::CopulaSpec::independence(cfg.k);
        try {
            cop = make_copula(cfg.copula_kind, cfg.k, used);
        } catch (const std::invalid_argument& e) {
            config_fail(std::string("copula.grid: ") + e.what());
        }
        std::fprintf(stderr, "[riskagg] mc %s=%g n=%zu ...\n", family, used, cfg.n_sims);
        hierarchy::TreeSpec tree(cfg.k, cfg.m, cfg.leaf, cop);
        const auto tr = riskmetrics::risk_report(tree, cfg.alpha, cfg.n_sims, cfg.seed, opts);
        const auto& r = tr.empirical;

        csv += std::to_string(cfg.k) + ',' + std::to_string(cfg.m) + ',' + family;
        csv += ',' + fmt17(used) + ',' + fmt17(requested);
        for (double x : {r.s0, r.s_z, r.s1, r.eta, r.db, r.se_s0, r.se_sz, r.se_eta, r.se_db})
            csv += ',' + fmt17(x);
        if (tr.exact) {
            const auto& e = *tr.exact;
            for (double x : {e.s0, e.s_z, e.s1, e.eta, e.db}) csv += ',' + fmt17(x);
        } else {
            csv += ",,,,,";
        }
        csv += ',' + std::to_string(cfg.n_sims) + ',' + std::to_string(cfg.seed) + '\n';
    }
    out.files.emplace_back("mc.csv", std::move(csv));
}

void run_covariance(const ExperimentConfig& cfg, RunResult& out, json& report) {
    if (cfg.leaf.kind != marginals::Kind::Normal)
        config_fail("covariance mode needs a normal marginal");
    if (cfg.copula_kind == copulas::Kind::Clayton)
        config_fail("covariance mode needs a gaussian or independence copula");

    json entries = json::array();
    for (std::size_t gi = 0; gi < cfg.grid.size(); ++gi) {
        const double rho = cfg.grid[gi];
        const auto c = covariance::build_ci_covariance(cfg.k, cfg.m, rho, cfg.leaf.scale);
        const auto ci = covariance::verify_ci(c);
        const auto ev = covariance::eigen_bounds(c);
        analytic::GaussianTreeParams p{cfg.k, cfg.m, rho, cfg.leaf.scale};
        const double sigma_z = analytic::sigma_level(p, 0);

        std::ostringstream mat;
        covariance::write_csv(c, mat);
        std::string name = "covariance_" + std::to_string(gi) + ".csv";
        out.files.emplace_back(name, mat.str());

        entries.push_back({{"rho", rho},
                           {"matrix_file", name},
                           {"n", c.n},
                           {"max_violation", ci.max_violation},
                           {"checks", ci.checks},
                           {"min_eigenvalue", ev.min_eigenvalue},
                           {"max_eigenvalue", ev.max_eigenvalue},
                           {"total_variance", covariance::grand_sum(c)},
                           {"sigma_Z_squared", sigma_z * sigma_z}});
    }
    report["covariance"] = std::move(entries);
}

void run_compare_shapes(const ExperimentConfig& cfg, RunResult& out) {
    std::uint64_t n_leaves = 1;
    for (int i = 0; i < cfg.shapes.front().second; ++i) n_leaves *= static_cast<std::uint64_t>(cfg.shapes.front().first);
    const auto rows = analytic::compare_shapes(n_leaves, cfg.shapes, cfg.shape_rho);

    std::string csv = "rank,k,m,DB,eta\n";
    for (std::size_t i = 0; i < rows.size(); ++i) {
        csv += std::to_string(i + 1) + ',' + std::to_string(rows[i].k) + ',' + std::to_string(rows[i].m);
        csv += ',' + fmt17(rows[i].db) + ',' + fmt17(rows[i].eta) + '\n';
    }
    out.files.emplace_back("shapes.csv", std::move(csv));
}

} // namespace

RunResult run(const ExperimentConfig& cfg) {
    RunResult out;
    json report;
    report["mode"] = to_string(cfg.mode);
    report["config"] = json::parse(config_to_json(cfg));

    switch (cfg.mode) {
        case Mode::Analytic: run_analytic(cfg, out); break;
        case Mode::Mc: run_mc(cfg, out); break;
        case Mode::Both:
            run_analytic(cfg, out);
            run_mc(cfg, out);
            break;
        case Mode::Covariance: run_covariance(cfg, out, report); break;
        case Mode::CompareShapes: run_compare_shapes(cfg, out); break;
    }

    json files = json::array();
    for (const auto& [name, text] : out.files) {
        files.push_back(name);
        (void)text;
    }
    report["files"] = std::move(files);
    json subs = json::array();
    for (const auto& s : out.substitutions)
        subs.push_back({{"field", s.field}, {"requested", s.requested}, {"used", s.used}});
    report["endpoint_substitutions"] = std::move(subs);
    out.files.emplace_back("report.json", report.dump(2) + "\n");
    return out;
}

int cli_main(int argc, char** argv) {
    CLI::App app{"Copula-based hierarchical risk aggregation"};
    std::string config_path;
    std::string out_dir;
    std::string mode_str;
    std::uint64_t seed = 0;
    int threads = 0;
    app.add_option("--config", config_path, "Experiment config (JSON)")->required();
    app.add_option("--seed", seed, "Master seed (overrides config)");
    app.add_option("--out", out_dir, "Output directory (default: config 'out', else stdout)");
    app.add_option("--mode", mode_str, "analytic|mc|both|covariance|compare-shapes (overrides config)");
    app.add_option("--threads", threads, "Worker count (overrides config)")->envname("RISKAGG_THREADS");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        std::ifstream in(config_path);
        if (!in) config_fail("cannot open '" + config_path + "'");
        std::stringstream buf;
        buf << in.rdbuf();

        ExperimentConfig cfg = config_from_json(buf.str());
        if (!mode_str.empty()) cfg.mode = mode_from_string(mode_str);
        if (app.count("--seed") > 0) cfg.seed = seed;
        if (threads > 0) cfg.threads = threads;
        if (!out_dir.empty()) cfg.out = out_dir;

        const RunResult res = run(cfg);
        for (const auto& s : res.substitutions)
            std::fprintf(stderr, "[riskagg] endpoint substitution: %s %g -> %g\n", s.field.c_str(),
                         s.requested, s.used);

        if (cfg.out.empty()) {
            // stdout carries exactly one data file; ask for a directory otherwise.
            if (res.files.size() > 2)
                config_fail("multiple output files; pass --out <dir>");
            std::cout << res.files.front().second;
        } else {
            std::filesystem::create_directories(cfg.out);
            for (const auto& [name, text] : res.files) {
                std::ofstream f(std::filesystem::path(cfg.out) / name, std::ios::binary);
                if (!f) throw ResourceError("cannot write " + name);
                f << text;
            }
            std::fprintf(stderr, "[riskagg] wrote %zu file(s) to %s\n", res.files.size(),
                         cfg.out.c_str());
        }
        return 0;
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const ResourceError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 4;
    } catch (const NumericError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    } catch (const std::bad_alloc&) {
        std::fprintf(stderr, "error: out of memory\n");
        return 4;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    }
}

} // namespace riskagg::experiment
