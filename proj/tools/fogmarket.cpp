// Command-line front end: solve one scenario, run parameter sweeps, audit a
// solution against the brute-force oracles, or generate scenario files.
// Every run writes a manifest with the inputs, seed, and overrides needed to
// reproduce it.
#include <CLI11.hpp>

#include <chrono>
#include <cstdint>
#include <ctime>
#include <exception>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include "fogmarket/fogmarket.hpp"

namespace fs = std::filesystem;
using fogmarket::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInvalidInput = 1;
constexpr int kExitNotConverged = 2;
constexpr int kExitSweepDegraded = 3;

std::string iso_utc_now() {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

// Apply "dotted.path=value" overrides onto a JSON document. The path must
// address an existing node so typos fail loudly.
void apply_overrides(json& doc, const std::vector<std::string>& sets) {
    for (const std::string& s : sets) {
        const auto eq = s.find('=');
        if (eq == std::string::npos || eq == 0)
            throw std::invalid_argument("--set expects KEY=VALUE, got '" + s + "'");
        const std::string path = s.substr(0, eq);
        const std::string raw = s.substr(eq + 1);
        json* node = &doc;
        std::size_t start = 0;
        std::vector<std::string> keys;
        while (true) {
            const auto dot = path.find('.', start);
            keys.push_back(path.substr(start, dot == std::string::npos ? dot : dot - start));
            if (dot == std::string::npos) break;
            start = dot + 1;
        }
        for (std::size_t i = 0; i + 1 < keys.size(); ++i) {
            if (!node->is_object() || node->find(keys[i]) == node->end())
                throw std::invalid_argument("--set path not found: '" + path + "'");
            node = &(*node)[keys[i]];
        }
        if (!node->is_object() || node->find(keys.back()) == node->end())
            throw std::invalid_argument("--set path not found: '" + path + "'");
        json value;
        try {
            value = json::parse(raw);
        } catch (const json::parse_error&) {
            value = raw;  // unquoted strings
        }
        (*node)[keys.back()] = value;
    }
}

json make_manifest(const std::string& command, const json& inputs,
                   const std::vector<std::string>& sets, std::uint64_t seed) {
    return json{{"command", command},
                {"inputs", inputs},
                {"overrides", sets},
                {"seed", seed},
                {"rng_algorithm", fogmarket::kRngAlgorithm},
                {"version", fogmarket::kToolVersion},
                {"timestamp", iso_utc_now()}};
}

void write_outputs(const fs::path& out_dir, const json& manifest) {
    fs::create_directories(out_dir);
    fogmarket::write_json((out_dir / "manifest.json").string(), manifest);
}

std::string solve_summary_csv(const fogmarket::equilibrium_report& rep) {
    std::ostringstream os;
    os << "schema,scenario_digest,n_users,m_types,c_star,p_star,active_k,offload_count,"
          "f_e,f_rsu,u_rsu,u_mec,user_utility_sum,mec_energy,mec_energy_cost,converged,"
          "iterations\r\n";
    os << fogmarket::kReportSchema << "," << fogmarket::scenario_digest(rep.input) << ","
       << rep.input.users.size() << "," << rep.input.population.types() << ","
       << fogmarket::csv_num(rep.c_star) << ","
       << fogmarket::csv_num(rep.stage2.active_k > 0 ? rep.stage2.p : 0.0) << ","
       << rep.stage2.active_k << "," << rep.offload_count << ","
       << fogmarket::csv_num(rep.stage2.f_e) << "," << fogmarket::csv_num(rep.stage2.f_rsu)
       << "," << fogmarket::csv_num(rep.rsu_utility_value) << ","
       << fogmarket::csv_num(rep.mec_utility_value) << ","
       << fogmarket::csv_num(rep.user_utility_sum) << ","
       << fogmarket::csv_num(rep.mec_energy_value) << ","
       << fogmarket::csv_num(rep.mec_energy_cost_value) << "," << (rep.converged ? 1 : 0)
       << "," << rep.iterations << "\r\n";
    return os.str();
}

struct common_opts {
    std::string out_dir = "out";
    std::vector<std::string> sets;
    std::uint64_t seed = 1;
    int max_iters = -1;
    double eps = -1.0;
};

void add_common(CLI::App* cmd, common_opts& o) {
    cmd->add_option("--out", o.out_dir, "Output directory");
    cmd->add_option("--set", o.sets, "Override a config field: dotted.path=value")
        ->take_all();
    cmd->add_option("--seed", o.seed, "Manifest seed");
    cmd->add_option("--max-iters", o.max_iters, "Stage-1 iteration cap");
    cmd->add_option("--eps", o.eps, "Stage-1 stopping tolerance");
}

fogmarket::stage1_config solver_with_flags(fogmarket::stage1_config cfg,
                                           const common_opts& o) {
    if (o.max_iters > 0) cfg.max_iters = o.max_iters;
    if (o.eps > 0.0) cfg.eps = o.eps;
    return cfg;
}

int cmd_solve(const std::string& scenario_path, const common_opts& o) {
    json sj = fogmarket::read_json(scenario_path);
    apply_overrides(sj, o.sets);
    const fogmarket::scenario sc = fogmarket::scenario_from_json(sj);
    fogmarket::stage1_config cfg = solver_with_flags({}, o);

    fogmarket::log_info("solving scenario " + scenario_path + " (" +
                        std::to_string(sc.users.size()) + " users)");
    const auto rep = fogmarket::solve_game(sc, cfg);

    const fs::path out(o.out_dir);
    json manifest = make_manifest(
        "solve",
        json{{"scenario", scenario_path},
             {"scenario_digest", fogmarket::scenario_digest(sc)},
             {"solver", fogmarket::to_json(cfg)}},
        o.sets, o.seed);
    write_outputs(out, manifest);
    fogmarket::write_json((out / "equilibrium_report.json").string(),
                          fogmarket::report_to_json(rep));
    fogmarket::write_text((out / "summary.csv").string(), solve_summary_csv(rep));
    fogmarket::log_info("report written to " + (out / "equilibrium_report.json").string());
    return rep.converged ? kExitOk : kExitNotConverged;
}

int cmd_gen_scenario(const common_opts& o) {
    json cj = fogmarket::to_json(fogmarket::scenario_config{});
    apply_overrides(cj, o.sets);
    const fogmarket::scenario_config cfg = fogmarket::config_from_json(cj, "config");
    const fogmarket::scenario sc = fogmarket::generate_scenario(cfg, o.seed);

    const fs::path out(o.out_dir);
    json manifest = make_manifest("gen-scenario",
                                  json{{"config", cj},
                                       {"scenario_digest", fogmarket::scenario_digest(sc)}},
                                  o.sets, o.seed);
    write_outputs(out, manifest);
    fogmarket::write_json((out / "scenario.json").string(), fogmarket::to_json(sc));
    fogmarket::log_info("scenario written to " + (out / "scenario.json").string());
    return kExitOk;
}

fogmarket::sweep_spec sweep_from_json(const json& j) {
    fogmarket::sweep_spec spec;
    spec.variable = fogmarket::field_or<std::string>(j, "variable", "sweep", spec.variable);
    spec.values = fogmarket::field<std::vector<double>>(j, "values", "sweep");
    spec.seeds =
        fogmarket::field_or<std::vector<std::uint64_t>>(j, "seeds", "sweep", spec.seeds);
    spec.base = fogmarket::config_from_json(fogmarket::require(j, "base", "sweep"),
                                            "sweep.base");
    if (j.contains("solver"))
        spec.solver = fogmarket::solver_from_json(j["solver"], "sweep.solver");
    if (j.contains("uas")) {
        spec.uas_f_rsu_av =
            fogmarket::field_or(j["uas"], "f_rsu_av", "sweep.uas", spec.uas_f_rsu_av);
        spec.uas_f_mec_av =
            fogmarket::field_or(j["uas"], "f_mec_av", "sweep.uas", spec.uas_f_mec_av);
    }
    return spec;
}

json plotdata_from_sweep(const fogmarket::sweep_spec& spec,
                         const fogmarket::sweep_result& res) {
    using fogmarket::mean_by_value;
    const auto xs_of = [](const auto& series) {
        std::vector<double> xs;
        for (const auto& [x, y] : series) xs.push_back(x);
        return xs;
    };
    const auto ys_of = [](const auto& series) {
        std::vector<double> ys;
        for (const auto& [x, y] : series) ys.push_back(y);
        return ys;
    };
    json out = json::object();
    const auto rsu = mean_by_value(res, [](const auto& r) { return r.u_rsu; });
    const auto mec = mean_by_value(res, [](const auto& r) { return r.u_mec; });
    const auto energy = mean_by_value(res, [](const auto& r) { return r.mec_energy; });
    const auto offload =
        mean_by_value(res, [](const auto& r) { return static_cast<double>(r.offload_count); });
    const auto ras = mean_by_value(res, [](const auto& r) { return r.ras_energy; });
    const auto uas = mean_by_value(res, [](const auto& r) { return r.uas_energy; });
    if (spec.variable == "n_users") {
        out["fig6_rsu_vs_N"] =
            json{{"x", xs_of(rsu)}, {"u_rsu", ys_of(rsu)}, {"u_mec", ys_of(mec)}};
    }
    if (spec.variable == "energy_a") {
        out["fig8_energy_vs_a"] = json{{"x", xs_of(energy)}, {"mec_energy", ys_of(energy)}};
        out["fig9_offload_vs_a"] =
            json{{"x", xs_of(offload)}, {"offload_count", ys_of(offload)}};
    }
    out["fig10_energy_schemes"] = json{{"x", xs_of(energy)},
                                       {"mechanism", ys_of(energy)},
                                       {"ras", ys_of(ras)},
                                       {"uas", ys_of(uas)}};
    return out;
}

int cmd_sweep(const std::string& spec_path, const common_opts& o) {
    json sj = fogmarket::read_json(spec_path);
    apply_overrides(sj, o.sets);
    fogmarket::sweep_spec spec = sweep_from_json(sj);
    spec.solver = solver_with_flags(spec.solver, o);

    fogmarket::log_info("sweeping " + spec.variable + " over " +
                        std::to_string(spec.values.size()) + " values x " +
                        std::to_string(spec.seeds.size()) + " seeds");
    const auto res = fogmarket::run_sweep(spec);

    const fs::path out(o.out_dir);
    json manifest = make_manifest("sweep",
                                  json{{"spec", spec_path},
                                       {"variable", spec.variable},
                                       {"rows", res.rows.size()},
                                       {"ok_fraction", res.ok_fraction}},
                                  o.sets, o.seed);
    write_outputs(out, manifest);
    fogmarket::write_text((out / "results.csv").string(), fogmarket::sweep_to_csv(res));
    fogmarket::write_json((out / "plotdata.json").string(), plotdata_from_sweep(spec, res));
    fogmarket::log_info("sweep ok fraction: " + std::to_string(res.ok_fraction));
    return res.ok_fraction >= 0.9 ? kExitOk : kExitSweepDegraded;
}

int cmd_audit(const std::string& scenario_path, const common_opts& o, bool force) {
    json sj = fogmarket::read_json(scenario_path);
    apply_overrides(sj, o.sets);
    const fogmarket::scenario sc = fogmarket::scenario_from_json(sj);
    const std::size_t n = sc.users.size();
    const std::size_t m = sc.population.types();
    if (!force && (n > 8 || m > 3)) {
        std::cerr << "audit: scenario too large for the brute-force oracles (" << n
                  << " users, " << m << " types; limits 8 and 3). Use --force to override.\n";
        return kExitInvalidInput;
    }
    const fogmarket::stage1_config cfg = solver_with_flags({}, o);
    const auto rep = fogmarket::solve_game(sc, cfg);

    json checks = json::array();
    bool all_pass = true;
    const auto push = [&](const std::string& name, bool ran, bool pass, json details) {
        checks.push_back(
            json{{"name", name}, {"ran", ran}, {"pass", pass}, {"details", details}});
        if (ran && !pass) all_pass = false;
    };

    // Stationarity residuals at the stage-2 decision.
    if (rep.kkt_available) {
        const double kkt_max = rep.kkt.max_abs();
        push("stage2_kkt", true, kkt_max < 1e-8, json{{"max_abs", kkt_max}});
    } else {
        push("stage2_kkt", false, true, json{{"reason", "no active users"}});
    }

    // Closed-form stage-2 decision vs the grid oracle at the chosen price.
    // The search floor keeps the grid inside the model's decision space:
    // users dropped by the band rule stay out, so the oracle may not chase
    // prices below the first dropped user's cutoff.
    if (rep.stage2.active_k > 0 && rep.stage2.prefix_consistent &&
        rep.stage2.f_rsu > 0.0) {
        const auto k = static_cast<std::size_t>(rep.stage2.active_k);
        const double p_floor = k < rep.market.cutoff.size() ? rep.market.cutoff[k] : 0.0;
        const auto g = fogmarket::oracle::grid_stage2(sc.params, sc.users, rep.c_star,
                                                      2000, 400, 3, p_floor);
        const double slack = 1e-4 * std::max(1.0, std::abs(g.utility));
        push("stage2_grid", true, rep.stage2.utility >= g.utility - slack,
             json{{"closed_form", rep.stage2.utility}, {"grid", g.utility}});
    } else {
        const char* reason = rep.stage2.active_k == 0          ? "no trade"
                             : !rep.stage2.prefix_consistent   ? "prefix inconsistent"
                                                               : "purchase clamped to zero";
        push("stage2_grid", false, true, json{{"reason", reason}});
    }

    // Contract design vs the grid oracle.
    if (m <= 3) {
        const auto g = fogmarket::oracle::grid_contract(sc.params, sc.population, sc.users);
        const double slack = std::max(1e-3 * std::max(1.0, std::abs(g.utility)),
                                      10.0 * g.c_step + 10.0 * g.f_step);
        push("stage1_grid", true, rep.stage1.utility >= g.utility - slack,
             json{{"closed_form", rep.stage1.utility}, {"grid", g.utility}});
    } else {
        push("stage1_grid", false, true, json{{"reason", "more than 3 types"}});
    }

    // Contract feasibility.
    push("contract_feasibility", true, rep.contract_feasibility.feasible(1e-9),
         fogmarket::to_json(rep.contract_feasibility));

    // Analytic rental-price gradient vs finite differences on the winning band.
    if (rep.stage1.selected >= 0) {
        const auto& band =
            rep.stage1.candidates[static_cast<std::size_t>(rep.stage1.selected)];
        const auto i = static_cast<std::size_t>(band.k) - 1;
        const double tau_k = rep.market.tau_sum[i];
        const double delta_k = rep.market.delta_sum[i];
        const auto mpars = sc.params;
        const double eta = band.eta, beta = band.beta;
        const bool bind = band.capacity_binding;
        const auto lagr = [&](double c) {
            const double demand = std::sqrt(tau_k * delta_k / c) - delta_k;
            const double fe = bind ? mpars.f_e_max : c / (2.0 * mpars.k_e());
            return -c * (demand - fe) + eta * (demand - fe) + beta * (c * fe - c * demand);
        };
        const double analytic = fogmarket::stage1_dldc(tau_k, delta_k, mpars.k_e(),
                                                       mpars.f_e_max, band.c, eta, beta, bind);
        const double rel = fogmarket::oracle::finite_diff_check(lagr, band.c, analytic,
                                                                1e-5 * band.c);
        push("stage1_gradient", true, rel < 1e-5, json{{"rel_error", rel}});
    } else {
        push("stage1_gradient", false, true, json{{"reason", "no trade"}});
    }

    const fs::path out(o.out_dir);
    json manifest = make_manifest(
        "audit", json{{"scenario", scenario_path}, {"force", force}}, o.sets, o.seed);
    write_outputs(out, manifest);
    fogmarket::write_json((out / "audit.json").string(),
                          json{{"schema", "fogmarket-audit/1"},
                               {"scenario_digest", fogmarket::scenario_digest(sc)},
                               {"all_pass", all_pass},
                               {"checks", checks}});
    return all_pass ? kExitOk : kExitInvalidInput;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"fogmarket: three-stage offloading market solver"};
    app.require_subcommand(1);

    common_opts solve_o, sweep_o, audit_o, gen_o;
    std::string scenario_path, spec_path, audit_path;
    bool force = false;

    auto* solve = app.add_subcommand("solve", "Solve one scenario to equilibrium");
    solve->add_option("--scenario", scenario_path, "Scenario JSON file")->required();
    add_common(solve, solve_o);

    auto* sweep = app.add_subcommand("sweep", "Run a parameter sweep");
    sweep->add_option("--spec", spec_path, "Sweep spec JSON file")->required();
    add_common(sweep, sweep_o);

    auto* audit = app.add_subcommand("audit", "Audit a solution with brute-force oracles");
    audit->add_option("--scenario", audit_path, "Scenario JSON file")->required();
    audit->add_flag("--force", force, "Audit scenarios beyond the size guard");
    add_common(audit, audit_o);

    auto* gen = app.add_subcommand("gen-scenario", "Generate a scenario file");
    add_common(gen, gen_o);

    CLI11_PARSE(app, argc, argv);
    try {
        if (solve->parsed()) return cmd_solve(scenario_path, solve_o);
        if (sweep->parsed()) return cmd_sweep(spec_path, sweep_o);
        if (audit->parsed()) return cmd_audit(audit_path, audit_o, force);
        if (gen->parsed()) return cmd_gen_scenario(gen_o);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInvalidInput;
    } catch (const fogmarket::error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInvalidInput;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInvalidInput;
    }
    return kExitInvalidInput;
}
