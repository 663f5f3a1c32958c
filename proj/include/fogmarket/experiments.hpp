// Experiment harness: baseline allocation schemes for comparison, parameter
// sweeps with per-row error isolation, and RFC-4180 CSV output.
#pragma once

#include <cmath>
#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include "fogmarket/log.hpp"
#include "fogmarket/orchestrator.hpp"
#include "fogmarket/rng.hpp"
#include "fogmarket/scenario.hpp"

namespace fogmarket {

// Random allocation scheme: every offloading user's equilibrium demand is
// split between server compute and pooled vehicle compute at an independent
// uniform ratio. Prices and demands are taken from the mechanism equilibrium;
// only the sourcing is randomized.
struct ras_result {
    double f_e = 0.0;
    double pooled = 0.0;
    double energy = 0.0;       // physical server energy
    double energy_cost = 0.0;  // monetised server energy
    bool f_e_capped = false;
    bool pool_capped = false;
};

inline ras_result run_ras(const equilibrium_report& rep, std::uint64_t seed) {
    rng_stream stream(seed, "ras");
    ras_result r;
    double own = 0.0, pooled = 0.0;
    for (const auto& resp : rep.responses) {
        if (!resp.chi) continue;
        const double share = stream.next_unit();
        own += share * resp.f;
        pooled += (1.0 - share) * resp.f;
    }
    const auto& mp = rep.input.params;
    r.f_e_capped = own > mp.f_e_max;
    r.f_e = std::min(own, mp.f_e_max);
    double pool_cap = 0.0;
    for (std::size_t m = 0; m < rep.input.population.types(); ++m)
        pool_cap += rep.input.population.count[m] * rep.menu.f[m];
    r.pool_capped = pooled > pool_cap;
    r.pooled = std::min(pooled, pool_cap);
    r.energy = mec_energy(mp, r.f_e);
    r.energy_cost = mec_energy_cost(mp, r.f_e);
    return r;
}

// Uniform allocation scheme: every user receives the same fixed server share
// and pooled share, with no pricing and no participation decision.
struct uas_result {
    double f_e = 0.0;
    double pooled = 0.0;
    double energy = 0.0;
    double energy_cost = 0.0;
    bool server_feasible = true;  // N * f_mec_av fits the server capacity
    bool pool_feasible = true;    // N * f_rsu_av fits the contracted supply
};

inline uas_result run_uas(const equilibrium_report& rep, double f_rsu_av, double f_mec_av) {
    if (!(f_rsu_av >= 0.0) || !(f_mec_av >= 0.0))
        throw std::invalid_argument("uniform shares must be >= 0");
    const auto& mp = rep.input.params;
    const double n = static_cast<double>(rep.input.users.size());
    uas_result r;
    r.f_e = n * f_mec_av;
    r.pooled = n * f_rsu_av;
    r.server_feasible = r.f_e <= mp.f_e_max * (1.0 + 1e-12);
    double pool_cap = 0.0;
    for (std::size_t m = 0; m < rep.input.population.types(); ++m)
        pool_cap += rep.input.population.count[m] * rep.menu.f[m];
    r.pool_feasible = r.pooled <= pool_cap * (1.0 + 1e-12);
    r.energy = mec_energy(mp, r.f_e);
    r.energy_cost = mec_energy_cost(mp, r.f_e);
    return r;
}

struct sweep_spec {
    std::string variable = "n_users";  // n_users | energy_a | seed
    std::vector<double> values;
    std::vector<std::uint64_t> seeds = {1};  // replications per value
    scenario_config base;
    stage1_config solver;
    double uas_f_rsu_av = 0.1;
    double uas_f_mec_av = 3.0;
};

struct sweep_row {
    std::string variable;
    double value = 0.0;
    std::uint64_t seed = 0;
    bool ok = false;
    std::string error;
    int n_users = 0;
    double energy_a = 0.0;
    double c_star = 0.0;
    double p_star = 0.0;
    double f_e = 0.0;
    double f_rsu = 0.0;
    int active_k = 0;
    int offload_count = 0;
    double u_rsu = 0.0;
    double u_mec = 0.0;
    double user_utility_sum = 0.0;
    double mec_energy = 0.0;
    double mec_energy_cost = 0.0;
    double ras_energy = 0.0;
    bool ras_capped = false;
    double uas_energy = 0.0;
    bool uas_feasible = false;
    bool converged = false;
    int iterations = 0;
};

struct sweep_result {
    std::vector<sweep_row> rows;
    double ok_fraction = 0.0;
};

inline sweep_result run_sweep(const sweep_spec& spec) {
    if (spec.values.empty()) throw std::invalid_argument("sweep needs at least one value");
    if (spec.seeds.empty()) throw std::invalid_argument("sweep needs at least one seed");
    if (spec.variable != "n_users" && spec.variable != "energy_a" && spec.variable != "seed")
        throw std::invalid_argument("unknown sweep variable '" + spec.variable + "'");
    sweep_result out;
    int ok_count = 0;
    for (const double value : spec.values) {
        for (const std::uint64_t seed : spec.seeds) {
            sweep_row row;
            row.variable = spec.variable;
            row.value = value;
            scenario_config cfg = spec.base;
            std::uint64_t row_seed = seed;
            if (spec.variable == "n_users")
                cfg.n_users = static_cast<int>(value);
            else if (spec.variable == "energy_a")
                cfg.params.energy_a = value;
            else
                row_seed = static_cast<std::uint64_t>(value);
            row.seed = row_seed;
            row.n_users = cfg.n_users;
            row.energy_a = cfg.params.energy_a;
            try {
                const scenario sc = generate_scenario(cfg, row_seed);
                const equilibrium_report rep = solve_game(sc, spec.solver);
                const ras_result ras = run_ras(rep, row_seed);
                const uas_result uas = run_uas(rep, spec.uas_f_rsu_av, spec.uas_f_mec_av);
                row.ok = true;
                row.c_star = rep.c_star;
                row.p_star = rep.stage2.active_k > 0 ? rep.stage2.p : 0.0;
                row.f_e = rep.stage2.f_e;
                row.f_rsu = rep.stage2.f_rsu;
                row.active_k = rep.stage2.active_k;
                row.offload_count = rep.offload_count;
                row.u_rsu = rep.rsu_utility_value;
                row.u_mec = rep.mec_utility_value;
                row.user_utility_sum = rep.user_utility_sum;
                row.mec_energy = rep.mec_energy_value;
                row.mec_energy_cost = rep.mec_energy_cost_value;
                row.ras_energy = ras.energy;
                row.ras_capped = ras.f_e_capped;
                row.uas_energy = uas.energy;
                row.uas_feasible = uas.server_feasible && uas.pool_feasible;
                row.converged = rep.converged;
                row.iterations = rep.iterations;
                ++ok_count;
            } catch (const std::exception& e) {
                row.ok = false;
                row.error = e.what();
                log_error("sweep row failed (" + spec.variable + "=" +
                          std::to_string(value) + ", seed=" + std::to_string(row_seed) +
                          "): " + e.what());
            }
            out.rows.push_back(std::move(row));
        }
    }
    out.ok_fraction =
        out.rows.empty() ? 0.0 : static_cast<double>(ok_count) / static_cast<double>(out.rows.size());
    return out;
}

// RFC-4180 CSV: CRLF record separators, quotes only where required.
inline std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string out = "\"";
    for (const char ch : s) {
        if (ch == '"') out += "\"\"";
        else out += ch;
    }
    out += "\"";
    return out;
}

inline std::string csv_num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

inline const std::vector<std::string>& sweep_csv_columns() {
    static const std::vector<std::string> cols = {
        "schema",       "variable",      "value",          "seed",
        "ok",           "error",         "n_users",        "energy_a",
        "c_star",       "p_star",        "f_e",            "f_rsu",
        "active_k",     "offload_count", "u_rsu",          "u_mec",
        "user_utility_sum", "mec_energy", "mec_energy_cost", "ras_energy",
        "ras_capped",   "uas_energy",    "uas_feasible",   "converged",
        "iterations"};
    return cols;
}

inline constexpr const char* kSweepSchemaName = "fogmarket-sweep/1";

inline std::string sweep_to_csv(const sweep_result& res) {
    std::ostringstream os;
    const auto& cols = sweep_csv_columns();
    for (std::size_t i = 0; i < cols.size(); ++i) os << (i ? "," : "") << cols[i];
    os << "\r\n";
    for (const auto& r : res.rows) {
        os << kSweepSchemaName << "," << csv_escape(r.variable) << "," << csv_num(r.value)
           << "," << r.seed << "," << (r.ok ? 1 : 0) << "," << csv_escape(r.error) << ","
           << r.n_users << "," << csv_num(r.energy_a) << "," << csv_num(r.c_star) << ","
           << csv_num(r.p_star) << "," << csv_num(r.f_e) << "," << csv_num(r.f_rsu) << ","
           << r.active_k << "," << r.offload_count << "," << csv_num(r.u_rsu) << ","
           << csv_num(r.u_mec) << "," << csv_num(r.user_utility_sum) << ","
           << csv_num(r.mec_energy) << "," << csv_num(r.mec_energy_cost) << ","
           << csv_num(r.ras_energy) << "," << (r.ras_capped ? 1 : 0) << ","
           << csv_num(r.uas_energy) << "," << (r.uas_feasible ? 1 : 0) << ","
           << (r.converged ? 1 : 0) << "," << r.iterations << "\r\n";
    }
    return os.str();
}

// Mean of a row field over replications, per sweep value, in value order.
template <class Getter>
std::vector<std::pair<double, double>> mean_by_value(const sweep_result& res, Getter&& get) {
    std::vector<std::pair<double, double>> out;
    for (const auto& r : res.rows) {
        if (!r.ok) continue;
        bool found = false;
        for (auto& [v, acc] : out)
            if (v == r.value) { found = true; break; }
        if (!found) out.emplace_back(r.value, 0.0);
    }
    for (auto& [v, acc] : out) {
        double sum = 0.0;
        int n = 0;
        for (const auto& r : res.rows)
            if (r.ok && r.value == v) {
                sum += get(r);
                ++n;
            }
        acc = n > 0 ? sum / n : 0.0;
    }
    return out;
}

// Fraction of adjacent pairs of a series that move in the given direction.
inline double monotone_fraction(const std::vector<std::pair<double, double>>& series,
                                bool increasing) {
    if (series.size() < 2) return 1.0;
    int good = 0;
    for (std::size_t i = 1; i < series.size(); ++i) {
        const bool up = series[i].second >= series[i - 1].second;
        if (up == increasing) ++good;
    }
    return static_cast<double>(good) / static_cast<double>(series.size() - 1);
}

}  // namespace fogmarket
