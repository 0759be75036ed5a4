#include "rousk/suite.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <set>
#include <sstream>

#include <json.hpp>

#include "rousk/brownian.hpp"
#include "rousk/capacity.hpp"
#include "rousk/geometry.hpp"
#include "rousk/mcverify.hpp"
#include "rousk/reflect.hpp"
#include "rousk/rng.hpp"
#include "rousk/stats.hpp"

namespace rousk {

namespace {

using nlohmann::json;

// 1-based line of the first occurrence of a token, for config error messages.
std::size_t line_of(const std::string& text, const std::string& token) {
    const auto pos = text.find(token);
    if (pos == std::string::npos) return 1;
    return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + pos, '\n'));
}

struct RunContext {
    std::uint64_t seed = 0;
    unsigned workers = 1;
    double c1 = 0.75;  // prior envelope constant; replaced by calibration checks
    const std::string* config_text = nullptr;
};

void require_keys(const json& obj, const std::set<std::string>& allowed,
                  const std::string& where, const RunContext& ctx) {
    for (const auto& item : obj.items())
        if (!allowed.count(item.key()))
            throw ConfigError("config line " +
                              std::to_string(line_of(*ctx.config_text, "\"" + item.key() + "\"")) +
                              ": unknown key '" + item.key() + "' in " + where);
}

McOptions mc_options_from(const json& params, const RunContext& ctx) {
    McOptions opts;
    opts.workers = ctx.workers;
    if (params.contains("n_paths")) opts.n_paths = params.at("n_paths").get<std::size_t>();
    if (params.contains("n_steps")) opts.n_steps = params.at("n_steps").get<std::size_t>();
    if (params.contains("level")) opts.level = params.at("level").get<double>();
    if (params.contains("n_tube_samples"))
        opts.n_tube_samples = params.at("n_tube_samples").get<std::size_t>();
    return opts;
}

Point point_param(const json& params, const std::string& key) {
    if (!params.contains(key)) throw ConfigError("missing required parameter '" + key + "'");
    return params.at(key).get<Point>();
}

DomainPtr resolve_domain(const json& check, const RunContext& ctx, bool required) {
    if (!check.contains("domain")) {
        if (required) throw ConfigError("check '" + check.at("name").get<std::string>() +
                                        "' requires a domain");
        return nullptr;
    }
    const std::string id = check.at("domain").get<std::string>();
    try {
        return make_domain(id);
    } catch (const std::exception& e) {
        throw ConfigError("config line " + std::to_string(line_of(*ctx.config_text, id)) +
                          ": " + e.what());
    }
}

json make_record(const std::string& check, const std::string& domain, const json& params,
                 double estimate, double ci_lo, double ci_hi, double bound, double slack,
                 bool pass) {
    json rec;
    rec["check"] = check;
    rec["domain"] = domain;
    rec["params"] = params;
    rec["estimate"] = estimate;
    rec["ci"] = json::array({ci_lo, ci_hi});
    rec["bound"] = std::isfinite(bound) ? json(bound) : json("inf");
    rec["slack"] = std::isfinite(slack) ? json(slack) : json("inf");
    rec["pass"] = pass;
    return rec;
}

const std::set<std::string> kMcKeys = {"n_paths", "n_steps", "level", "n_tube_samples"};

std::set<std::string> with_mc(std::set<std::string> keys) {
    keys.insert(kMcKeys.begin(), kMcKeys.end());
    return keys;
}

json run_fp_normalization(const json& check, RunContext& ctx) {
    const json params = check.value("params", json::object());
    require_keys(params, {"drifts", "barriers", "tol"}, "fp-normalization params", ctx);
    const auto drifts = params.value("drifts", std::vector<double>{0.0, 0.5, 1.0, 5.0});
    const auto barriers = params.value("barriers", std::vector<double>{0.1, 1.0, 10.0});
    const double tol = params.value("tol", 1e-6);
    double worst = 0.0;
    for (double c : drifts)
        for (double r : barriers) {
            const FirstPassageLaw law{c, r};
            const double mass = fp_density_integral(law, 0.0) + fp_atom(law);
            worst = std::max(worst, std::abs(mass - 1.0));
        }
    return make_record("fp-normalization", "", params, worst, worst, worst, tol, tol - worst,
                       worst <= tol);
}

json run_staying_bound(const json& check, RunContext& ctx, std::uint64_t seed) {
    const json params = check.value("params", json::object());
    require_keys(params, with_mc({"x", "u"}), "staying-bound params", ctx);
    const auto domain = resolve_domain(check, ctx, true);
    const auto verdict = verify_staying_bound(*domain, point_param(params, "x"),
                                              params.value("u", 1.0),
                                              mc_options_from(params, ctx), seed);
    return make_record("staying-bound", domain->id(), params, verdict.estimate.mean,
                       verdict.estimate.mean - verdict.estimate.half_width,
                       verdict.estimate.mean + verdict.estimate.half_width, verdict.bound,
                       verdict.slack, verdict.pass);
}

json run_exit_density(const json& check, RunContext& ctx, std::uint64_t seed) {
    const json params = check.value("params", json::object());
    require_keys(params, with_mc({"x", "level_r", "t_grid"}), "exit-density params", ctx);
    const auto domain = resolve_domain(check, ctx, true);
    std::vector<double> t_grid =
        params.value("t_grid", std::vector<double>{0.05, 0.1, 0.2, 0.35, 0.5, 0.75, 1.0});
    const auto report = verify_exit_density(*domain, point_param(params, "x"),
                                            params.value("level_r", 0.0), t_grid,
                                            mc_options_from(params, ctx), seed);
    const bool pass = report.monotone && report.c1 > 0.0 && std::isfinite(report.c1);
    if (pass) ctx.c1 = report.c1;  // later bound checks consume the calibration
    return make_record("exit-density", domain->id(), params, report.c1, report.c1, report.c1,
                       report.c1, 0.0, pass);
}

json run_band_bound(const json& check, RunContext& ctx, std::uint64_t seed) {
    const json params = check.value("params", json::object());
    require_keys(params, with_mc({"x", "gamma", "r", "u"}), "band-bound params", ctx);
    const auto domain = resolve_domain(check, ctx, true);
    const double c2 = 4.0 * ctx.c1 + 2.0;
    const auto verdict = verify_band_bound(*domain, point_param(params, "x"),
                                           params.value("gamma", 0.1), params.value("r", 0.1),
                                           params.value("u", 1.0), c2,
                                           mc_options_from(params, ctx), seed);
    return make_record("band-bound", domain->id(), params, verdict.estimate.mean,
                       verdict.estimate.mean - verdict.estimate.half_width,
                       verdict.estimate.mean + verdict.estimate.half_width, verdict.bound,
                       verdict.slack, verdict.pass);
}

json run_gradient_mass(const json& check, RunContext& ctx, std::uint64_t seed) {
    const json params = check.value("params", json::object());
    require_keys(params, with_mc({"k", "m_schedule", "horizon"}), "gradient-mass params", ctx);
    const auto domain = resolve_domain(check, ctx, true);
    const double c2 = 4.0 * ctx.c1 + 2.0;
    const auto report = verify_gradient_mass(
        *domain, params.value("k", 1), params.value("m_schedule", std::vector<int>{2, 4, 8, 16, 32}),
        params.value("horizon", 0.25), c2, mc_options_from(params, ctx), seed);
    double worst = 0.0, worst_hw = 0.0;
    for (std::size_t i = 0; i < report.estimates.size(); ++i)
        if (report.estimates[i] + report.half_widths[i] > worst + worst_hw) {
            worst = report.estimates[i];
            worst_hw = report.half_widths[i];
        }
    return make_record("gradient-mass", domain->id(), params, worst, worst - worst_hw,
                       worst + worst_hw, report.bound,
                       report.bound - (worst + worst_hw), report.pass);
}

json run_excursion_quadratic(const json& check, RunContext& ctx, std::uint64_t seed) {
    const json params = check.value("params", json::object());
    require_keys(params, with_mc({"split", "horizon", "r_schedule", "l"}),
                 "excursion-quadratic params", ctx);
    const auto domain = resolve_domain(check, ctx, true);
    const auto report = verify_excursion_quadratic(
        *domain, params.value("split", 0.5), params.value("horizon", 1.0),
        params.value("r_schedule", std::vector<double>{0.4, 0.3, 0.2, 0.15, 0.1}),
        params.value("l", 1), mc_options_from(params, ctx), seed);
    return make_record("excursion-quadratic", domain->id(), params, report.slope, report.slope,
                       report.slope, 1.7, report.slope - 1.7, report.pass);
}

json run_null_boundary(const json& check, RunContext& ctx, std::uint64_t seed) {
    const json params = check.value("params", json::object());
    require_keys(params, with_mc({"eps_schedule", "horizon"}), "null-boundary params", ctx);
    const auto domain = resolve_domain(check, ctx, true);
    const auto report = verify_null_boundary(
        *domain, params.value("eps_schedule", std::vector<double>{0.4, 0.3, 0.2, 0.15, 0.1}),
        params.value("horizon", 1.0), mc_options_from(params, ctx), seed);
    const double slack = std::min(report.slope - 0.7, 1.3 - report.slope);
    return make_record("null-boundary", domain->id(), params, report.slope, report.slope,
                       report.slope, 1.0, slack, report.pass);
}

json run_capacity_value(const json& check, RunContext& ctx) {
    const json params = check.value("params", json::object());
    require_keys(params, {"set", "beta", "resolution", "expect_lo", "expect_hi", "solver_tol"},
                 "capacity-value params", ctx);
    if (!params.contains("set")) throw ConfigError("capacity-value: missing 'set'");
    MinimizeOptions opts;
    if (params.contains("solver_tol")) opts.tol = params.at("solver_tol").get<double>();
    const double cap = capacity_value(params.at("set").get<std::string>(),
                                      params.value("beta", 1.0),
                                      params.value("resolution", std::size_t{512}), opts);
    const double lo = params.value("expect_lo", 0.0);
    const double hi = params.value("expect_hi", std::numeric_limits<double>::infinity());
    const bool pass = cap >= lo && cap <= hi;
    return make_record("capacity-value", "", params, cap, cap, cap, hi,
                       std::min(cap - lo, hi - cap), pass);
}

json run_vanishing_capacity(const json& check, RunContext& ctx, std::uint64_t seed) {
    const json params = check.value("params", json::object());
    require_keys(params, {"r_schedule", "resolutions", "expect", "solver_tol"},
                 "vanishing-capacity params", ctx);
    const auto domain = resolve_domain(check, ctx, true);
    MinimizeOptions opts;
    if (params.contains("solver_tol")) opts.tol = params.at("solver_tol").get<double>();
    const auto r_schedule = params.value("r_schedule", std::vector<double>{0.4, 0.2, 0.1, 0.05});
    const auto resolutions =
        params.value("resolutions", std::vector<std::size_t>{256, 512, 1024, 2048});
    const auto report = check_vanishing_capacity(*domain, r_schedule, resolutions, seed, opts);
    const std::string expect = params.value("expect", std::string("holds"));
    const double final_cap = report.schedule.back().capacity;
    return make_record("vanishing-capacity", domain->id(), params, final_cap, final_cap,
                       final_cap, report.threshold, report.threshold - final_cap,
                       report.verdict == expect);
}

std::vector<std::vector<double>> default_directions(const DiscretePathSpace& space) {
    const std::size_t dd = static_cast<std::size_t>(space.d);
    const std::size_t ambient = space.ambient_dim();
    std::vector<std::vector<double>> dirs;
    std::vector<double> l1(ambient, 0.0);
    for (std::size_t i = 0; i < space.n_grid; ++i) l1[i * dd] = space.grid_time(i);
    dirs.push_back(l1);
    std::vector<double> l2(ambient, 0.0);
    const std::size_t c2 = dd > 1 ? 1 : 0;
    for (std::size_t i = 0; i < space.n_grid; ++i) {
        const double t = space.grid_time(i);
        l2[i * dd + c2] = std::min(t, space.horizon - t) + (i + 1 == space.n_grid ? space.dt() : 0.0);
    }
    dirs.push_back(l2);
    // fixed pseudo-random direction: a cumulative walk per coordinate
    Rng rng(0xd17ULL, 7);
    std::vector<double> l3(ambient, 0.0);
    for (std::size_t j = 0; j < ambient; ++j)
        l3[j] = (j >= dd ? l3[j - dd] : 0.0) + rng.normal() * std::sqrt(space.dt());
    dirs.push_back(l3);
    return dirs;
}

json run_reflected_ou(const json& check, RunContext& ctx, std::uint64_t seed) {
    const json params = check.value("params", json::object());
    require_keys(params,
                 {"d", "n_grid", "horizon", "t_end", "dt_sim", "n_traj", "locus_tol"},
                 "reflected-ou params", ctx);
    const auto domain = resolve_domain(check, ctx, false);
    DiscretePathSpace space;
    space.domain = domain;
    space.d = domain ? domain->dim() : params.value("d", 1);
    space.n_grid = params.value("n_grid", std::size_t{8});
    space.horizon = params.value("horizon", 1.0);
    const double t_end = params.value("t_end", 2.0);
    const double dt_sim = params.value("dt_sim", 1e-3);
    const std::size_t n_traj = params.value("n_traj", std::size_t{32});
    const double locus_tol = params.value("locus_tol", 1e-6);

    const auto dirs = default_directions(space);
    const std::vector<double> x0(space.ambient_dim(), 0.0);

    struct TrajSummary {
        bool completed = true;
        double identity_error = 0.0;
        std::vector<double> qv;
        std::vector<double> endpoint;
        std::size_t locus_events = 0, locus_single = 0;
    };
    std::vector<TrajSummary> summaries(n_traj);
    parallel_for(n_traj, ctx.workers, [&](std::size_t t) {
        SimulateOptions so;
        so.directions = dirs;
        so.record_events = domain != nullptr;
        const auto traj = simulate_rou(space, x0, t_end, dt_sim, seed, t, so);
        TrajSummary& s = summaries[t];
        s.completed = traj.completed;
        s.identity_error = traj.identity_error;
        for (std::size_t k = 0; k < dirs.size(); ++k) {
            double qv = 0.0, end = 0.0;
            for (double v : traj.direction_increments[k]) {
                qv += v * v;
                end += v;
            }
            s.qv.push_back(qv / (t_end * traj.direction_norms2[k]));
            s.endpoint.push_back(end / std::sqrt(t_end * traj.direction_norms2[k]));
        }
        if (domain) {
            const auto locus = check_reflection_locus(traj, *domain, locus_tol);
            s.locus_events = locus.events;
            s.locus_single = locus.single_touch;
        }
    });

    bool all_completed = true;
    double worst_identity = 0.0;
    std::vector<double> qv_means(dirs.size(), 0.0);
    std::vector<double> endpoints0;
    std::size_t events = 0, single = 0;
    for (const auto& s : summaries) {
        all_completed = all_completed && s.completed;
        worst_identity = std::max(worst_identity, s.identity_error);
        for (std::size_t k = 0; k < dirs.size(); ++k) qv_means[k] += s.qv[k] / n_traj;
        endpoints0.push_back(s.endpoint[0]);
        events += s.locus_events;
        single += s.locus_single;
    }
    double worst_qv = 1.0;
    for (double q : qv_means)
        if (std::abs(q - 1.0) > std::abs(worst_qv - 1.0)) worst_qv = q;
    bool normal_ok = true;
    if (endpoints0.size() >= 8)
        normal_ok = stats::anderson_darling_normal(endpoints0) < stats::kAndersonDarling1pc;
    const double locus_fraction =
        events > 0 ? static_cast<double>(single) / static_cast<double>(events) : 1.0;
    const bool pass = all_completed && std::abs(worst_qv - 1.0) <= 0.05 && normal_ok &&
                      locus_fraction >= 0.99 && worst_identity <= 1e-9;
    return make_record("reflected-ou", domain ? domain->id() : "", params, worst_qv,
                       std::min(worst_qv, locus_fraction), std::max(worst_qv, 1.0), 1.05,
                       1.05 - std::abs(worst_qv), pass);
}

json dispatch_check(const json& check, RunContext& ctx, std::uint64_t seed) {
    const std::string name = check.at("name").get<std::string>();
    if (name == "fp-normalization") return run_fp_normalization(check, ctx);
    if (name == "staying-bound") return run_staying_bound(check, ctx, seed);
    if (name == "exit-density") return run_exit_density(check, ctx, seed);
    if (name == "band-bound") return run_band_bound(check, ctx, seed);
    if (name == "gradient-mass") return run_gradient_mass(check, ctx, seed);
    if (name == "excursion-quadratic") return run_excursion_quadratic(check, ctx, seed);
    if (name == "null-boundary") return run_null_boundary(check, ctx, seed);
    if (name == "capacity-value") return run_capacity_value(check, ctx);
    if (name == "vanishing-capacity") return run_vanishing_capacity(check, ctx, seed);
    if (name == "reflected-ou") return run_reflected_ou(check, ctx, seed);
    throw ConfigError("config line " + std::to_string(line_of(*ctx.config_text, name)) +
                      ": unknown check name '" + name + "'");
}

json parse_config(const std::string& config_text, RunContext& ctx,
                  const SuiteOverrides& overrides) {
    json config;
    try {
        config = json::parse(config_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    if (!config.is_object()) throw ConfigError("config must be a JSON object");
    require_keys(config, {"seed", "workers", "c1", "checks"}, "config", ctx);
    if (!config.contains("seed") && !overrides.seed)
        throw ConfigError("config line 1: 'seed' is mandatory (no wall-clock default)");
    ctx.seed = overrides.seed ? *overrides.seed : config.at("seed").get<std::uint64_t>();
    ctx.workers = overrides.workers ? *overrides.workers : config.value("workers", 1u);
    ctx.c1 = config.value("c1", 0.75);
    if (!config.contains("checks") || !config.at("checks").is_array())
        throw ConfigError("config line 1: 'checks' must be an array");
    for (const auto& check : config.at("checks")) {
        if (!check.is_object() || !check.contains("name"))
            throw ConfigError("every check needs a 'name'");
        require_keys(check, {"name", "domain", "params"}, "check entry", ctx);
        const std::string name = check.at("name").get<std::string>();
        const auto names = check_names();
        if (std::find(names.begin(), names.end(), name) == names.end())
            throw ConfigError("config line " + std::to_string(line_of(config_text, name)) +
                              ": unknown check name '" + name + "'");
    }
    return config;
}

void write_artifacts(const std::string& out_dir, const json& records,
                     const std::chrono::system_clock::time_point& started) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    {
        std::ofstream out(fs::path(out_dir) / "verdicts.json");
        out << records.dump(1) << "\n";
    }
    {
        std::ofstream out(fs::path(out_dir) / "summary.csv");
        out << "check,domain,estimate,ci_lo,ci_hi,bound,slack,pass\n";
        for (const auto& rec : records) {
            const auto num = [](const json& v) {
                std::ostringstream ss;
                if (v.is_number()) ss << std::setprecision(17) << v.get<double>();
                else ss << v.get<std::string>();
                return ss.str();
            };
            out << rec.at("check").get<std::string>() << ','
                << rec.at("domain").get<std::string>() << ',' << num(rec.at("estimate")) << ','
                << num(rec.at("ci")[0]) << ',' << num(rec.at("ci")[1]) << ','
                << num(rec.at("bound")) << ',' << num(rec.at("slack")) << ','
                << (rec.at("pass").get<bool>() ? "true" : "false") << "\n";
        }
    }
    {
        // timestamps live apart from the numeric artifacts so reruns stay
        // byte-identical
        const auto to_string = [](std::chrono::system_clock::time_point tp) {
            const std::time_t t = std::chrono::system_clock::to_time_t(tp);
            char buf[32];
            std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
            return std::string(buf);
        };
        json meta;
        meta["started"] = to_string(started);
        meta["finished"] = to_string(std::chrono::system_clock::now());
        std::ofstream out(fs::path(out_dir) / "metadata.json");
        out << meta.dump(1) << "\n";
    }
}

}  // namespace

std::vector<std::string> check_names() {
    return {"fp-normalization", "staying-bound",       "exit-density",
            "band-bound",       "gradient-mass",       "excursion-quadratic",
            "null-boundary",    "capacity-value",      "vanishing-capacity",
            "reflected-ou"};
}

std::string catalog_text() {
    std::ostringstream out;
    out << "domains:\n";
    for (const auto& id : catalog_ids()) out << "  " << id << "\n";
    out << "checks:\n";
    for (const auto& name : check_names()) out << "  " << name << "\n";
    return out.str();
}

int run_suite(const std::string& config_text, const std::string& out_dir,
              const SuiteOverrides& overrides, std::ostream& log) {
    const auto started = std::chrono::system_clock::now();
    RunContext ctx;
    ctx.config_text = &config_text;
    const json config = parse_config(config_text, ctx, overrides);

    json records = json::array();
    bool all_pass = true;
    std::size_t idx = 0;
    for (const auto& check : config.at("checks")) {
        const std::uint64_t seed = splitmix64(ctx.seed ^ (0x1000ULL + idx));
        const json rec = dispatch_check(check, ctx, seed);
        const bool pass = rec.at("pass").get<bool>();
        all_pass = all_pass && pass;
        log << (pass ? "PASS " : "FAIL ") << rec.at("check").get<std::string>();
        if (!rec.at("domain").get<std::string>().empty())
            log << " [" << rec.at("domain").get<std::string>() << "]";
        log << " estimate=" << rec.at("estimate").dump() << " bound=" << rec.at("bound").dump()
            << "\n";
        records.push_back(rec);
        ++idx;
    }
    write_artifacts(out_dir, records, started);
    return all_pass ? 0 : 1;
}

int run_calibration(const std::string& config_text, const std::string& out_dir,
                    const SuiteOverrides& overrides, std::ostream& log) {
    RunContext ctx;
    ctx.config_text = &config_text;
    const json config = parse_config(config_text, ctx, overrides);
    bool found = false;
    std::size_t idx = 0;
    for (const auto& check : config.at("checks")) {
        const std::uint64_t seed = splitmix64(ctx.seed ^ (0x1000ULL + idx));
        if (check.at("name").get<std::string>() == "exit-density") {
            dispatch_check(check, ctx, seed);
            found = true;
        }
        ++idx;
    }
    if (!found) throw ConfigError("calibrate-c1: config contains no exit-density check");
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    json result;
    result["c1"] = ctx.c1;
    result["c2"] = 4.0 * ctx.c1 + 2.0;
    std::ofstream out(fs::path(out_dir) / "c1.json");
    out << result.dump(1) << "\n";
    log << "calibrated c1=" << ctx.c1 << " c2=" << 4.0 * ctx.c1 + 2.0 << "\n";
    return 0;
}

}  // namespace rousk
