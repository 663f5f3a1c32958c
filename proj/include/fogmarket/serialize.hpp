// JSON bindings for scenarios, reports, and run manifests. Keys are emitted
// sorted and doubles use shortest round-trip form, so identical inputs
// produce byte-identical files.
#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "fogmarket/market.hpp"
#include "fogmarket/orchestrator.hpp"
#include "fogmarket/scenario.hpp"

namespace fogmarket {

using nlohmann::json;

inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr const char* kScenarioSchema = "fogmarket-scenario/1";
inline constexpr const char* kReportSchema = "fogmarket-report/1";
inline constexpr const char* kSweepSchema = "fogmarket-sweep/1";

// Field access that reports the offending key on failure.
inline const json& require(const json& j, const char* key, const char* where) {
    auto it = j.find(key);
    if (it == j.end())
        throw std::invalid_argument(std::string(where) + ": missing field '" + key + "'");
    return *it;
}

template <class T>
T field(const json& j, const char* key, const char* where) {
    try {
        return require(j, key, where).get<T>();
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string(where) + ": field '" + key + "': " + e.what());
    }
}

template <class T>
T field_or(const json& j, const char* key, const char* where, T fallback) {
    if (j.find(key) == j.end()) return fallback;
    return field<T>(j, key, where);
}

inline json to_json(const market_params& mp) {
    return json{{"delta", mp.delta},       {"big_c", mp.big_c},
                {"k", mp.k},               {"energy_a", mp.energy_a},
                {"f_e_max", mp.f_e_max},   {"f_v_max", mp.f_v_max}};
}

inline market_params params_from_json(const json& j, const char* where = "params") {
    market_params mp;
    mp.delta = field_or(j, "delta", where, mp.delta);
    mp.big_c = field_or(j, "big_c", where, mp.big_c);
    // No silent defaults for the energy coefficient or the server capacity;
    // the reference-setup constants (delta, big_c, energy_a, f_v_max) may be
    // omitted.
    mp.k = field<double>(j, "k", where);
    mp.energy_a = field_or(j, "energy_a", where, mp.energy_a);
    mp.f_e_max = field<double>(j, "f_e_max", where);
    mp.f_v_max = field_or(j, "f_v_max", where, mp.f_v_max);
    validate(mp);
    return mp;
}

inline json to_json(const user_profile& u) {
    return json{{"id", u.id},     {"cycles", u.cycles},   {"data", u.data},
                {"rate", u.rate}, {"f_local", u.f_local}, {"t_max", u.t_max}};
}

inline user_profile user_from_json(const json& j, const char* where = "user") {
    user_profile u;
    u.id = field<int>(j, "id", where);
    u.cycles = field<double>(j, "cycles", where);
    u.data = field<double>(j, "data", where);
    u.rate = field<double>(j, "rate", where);
    u.f_local = field<double>(j, "f_local", where);
    u.t_max = field<double>(j, "t_max", where);
    validate(u);
    return u;
}

inline json to_json(const scenario& sc) {
    json users = json::array();
    for (const auto& u : sc.users) users.push_back(to_json(u));
    return json{{"schema", kScenarioSchema},
                {"seed", sc.seed},
                {"rng", json{{"algorithm", kRngAlgorithm}, {"seed", sc.seed}}},
                {"params", to_json(sc.params)},
                {"users", users},
                {"population",
                 json{{"theta", sc.population.theta}, {"count", sc.population.count}}}};
}

inline scenario scenario_from_json(const json& j) {
    const char* where = "scenario";
    const std::string schema = field<std::string>(j, "schema", where);
    if (schema != kScenarioSchema)
        throw std::invalid_argument("scenario: unsupported schema '" + schema + "'");
    scenario sc;
    sc.seed = field_or<std::uint64_t>(j, "seed", where, 0);
    sc.params = params_from_json(require(j, "params", where), "scenario.params");
    const json& users = require(j, "users", where);
    if (!users.is_array() || users.empty())
        throw std::invalid_argument("scenario: 'users' must be a nonempty array");
    for (const auto& uj : users) sc.users.push_back(user_from_json(uj, "scenario.users[]"));
    const json& pop = require(j, "population", where);
    sc.population.theta = field<std::vector<double>>(pop, "theta", "scenario.population");
    sc.population.count = field<std::vector<double>>(pop, "count", "scenario.population");
    validate(sc.population);
    return sc;
}

inline std::string hex64(std::uint64_t v) {
    std::ostringstream os;
    os << std::hex;
    os.width(16);
    os.fill('0');
    os << v;
    return os.str();
}

// Digest of the canonical (sorted-key) scenario serialization.
inline std::string scenario_digest(const scenario& sc) {
    return hex64(fnv1a64(to_json(sc).dump()));
}

inline json to_json(const contract_menu& menu) {
    return json{{"f", menu.f}, {"p", menu.p}};
}

inline const char* capacity_case_name(capacity_case c) {
    switch (c) {
        case capacity_case::own_capacity_ample: return "own_capacity_ample";
        case capacity_case::own_capacity_binds: return "own_capacity_binds";
        case capacity_case::mixed: return "mixed";
    }
    return "unknown";
}

inline json to_json(const stage2_solution& s) {
    json j{{"c", s.c},
           {"active_k", s.active_k},
           {"f_e", s.f_e},
           {"f_rsu", s.f_rsu},
           {"demand", s.demand},
           {"utility", s.utility},
           {"regime", capacity_case_name(s.regime)},
           {"f_e_clamped", s.f_e_clamped},
           {"c9_residual", s.c9_residual},
           {"prefix_consistent", s.prefix_consistent}};
    if (s.active_k > 0)
        j["p"] = s.p;
    else
        j["p"] = nullptr;  // no service price when nobody is served
    return j;
}

inline json to_json(const subproblem_result& r) {
    return json{{"k", r.k},
                {"lo", r.lo},
                {"hi", r.hi},
                {"capacity_binding", r.capacity_binding},
                {"c", r.c},
                {"eta", r.eta},
                {"beta", r.beta},
                {"purchase", r.purchase},
                {"supply", r.supply},
                {"utility", r.feasible ? r.utility : 0.0},
                {"feasible", r.feasible},
                {"converged", r.converged},
                {"iterations", r.iterations},
                {"residuals",
                 json{{"supply_gap", r.residuals.supply_gap},
                      {"c11_gap", r.residuals.c11_gap},
                      {"ir1_gap", r.residuals.ir1_gap},
                      {"max_ldic_gap", r.residuals.max_ldic_gap}}}};
}

inline json to_json(const oracle::kkt_residuals& k) {
    return json{{"stat_p", k.stat_p},
                {"stat_f_e", k.stat_f_e},
                {"stat_f_rsu", k.stat_f_rsu},
                {"primal_demand", k.primal_demand},
                {"comp_capacity", k.comp_capacity},
                {"comp_price", k.comp_price},
                {"comp_f_e", k.comp_f_e},
                {"comp_f_rsu", k.comp_f_rsu},
                {"dual_violation", k.dual_violation},
                {"max_abs", k.max_abs()}};
}

inline json to_json(const feasibility_report& r) {
    return json{{"max_ir_violation", r.max_ir_violation},
                {"max_ic_violation", r.max_ic_violation},
                {"ir1_activeness", r.ir1_activeness},
                {"max_ldic_activeness", r.max_ldic_activeness},
                {"f_monotone", r.f_monotone},
                {"p_monotone", r.p_monotone},
                {"within_cap", r.within_cap},
                {"feasible", r.feasible()}};
}

inline json report_to_json(const equilibrium_report& rep) {
    json users = json::array();
    for (std::size_t i = 0; i < rep.market.size(); ++i) {
        const auto& u = rep.market.users[i];
        const auto& r = rep.responses[i];
        users.push_back(json{{"id", u.id}, {"chi", r.chi}, {"f", r.f}, {"utility", r.utility}});
    }
    json bands = json::array();
    for (const auto& cand : rep.stage1.candidates) bands.push_back(to_json(cand));
    return json{
        {"schema", kReportSchema},
        {"scenario_digest", scenario_digest(rep.input)},
        {"params", to_json(rep.input.params)},
        {"population",
         json{{"theta", rep.input.population.theta}, {"count", rep.input.population.count}}},
        {"c_star", rep.c_star},
        {"contract", to_json(rep.menu)},
        {"stage2", to_json(rep.stage2)},
        {"users", users},
        {"excluded_user_ids", rep.market.excluded_ids},
        {"utilities",
         json{{"rsu", rep.rsu_utility_value},
              {"mec", rep.mec_utility_value},
              {"user_sum", rep.user_utility_sum},
              {"per_type", rep.type_utilities}}},
        {"offload_count", rep.offload_count},
        {"mec_energy", rep.mec_energy_value},
        {"mec_energy_cost", rep.mec_energy_cost_value},
        {"converged", rep.converged},
        {"iterations", rep.iterations},
        {"diagnostics",
         json{{"kkt", rep.kkt_available ? to_json(rep.kkt) : json(nullptr)},
              {"contract_feasibility", to_json(rep.contract_feasibility)},
              {"gamma_ir1", rep.stage1.gamma_ir1},
              {"no_trade", rep.stage1.no_trade},
              {"cross",
               json{{"offload_count_matches_active_k",
                     rep.checks.offload_count_matches_active_k},
                    {"demand_gap", rep.checks.demand_gap},
                    {"clearing_residual", rep.checks.clearing_residual},
                    {"supply_covers_purchase", rep.checks.supply_covers_purchase},
                    {"prefix_consistent", rep.checks.prefix_consistent}}},
              {"bands", bands}}}};
}

inline json to_json(const range& r) { return json{{"lo", r.lo}, {"hi", r.hi}}; }

inline range range_from_json(const json& j, const char* where) {
    range r;
    r.lo = field<double>(j, "lo", where);
    r.hi = field<double>(j, "hi", where);
    return r;
}

inline json to_json(const stay_time_model& m) {
    const char* type = m.type == stay_time_model::kind::exponential ? "exponential"
                       : m.type == stay_time_model::kind::uniform  ? "uniform"
                                                                   : "empirical";
    return json{{"type", type},   {"mean", m.mean},       {"lo", m.lo},
                {"hi", m.hi},     {"values", m.values},   {"weights", m.weights}};
}

inline stay_time_model stay_model_from_json(const json& j, const char* where) {
    stay_time_model m;
    const std::string type = field_or<std::string>(j, "type", where, "exponential");
    if (type == "exponential")
        m.type = stay_time_model::kind::exponential;
    else if (type == "uniform")
        m.type = stay_time_model::kind::uniform;
    else if (type == "empirical")
        m.type = stay_time_model::kind::empirical;
    else
        throw std::invalid_argument(std::string(where) + ": unknown stay model '" + type + "'");
    m.mean = field_or(j, "mean", where, m.mean);
    m.lo = field_or(j, "lo", where, m.lo);
    m.hi = field_or(j, "hi", where, m.hi);
    m.values = field_or(j, "values", where, m.values);
    m.weights = field_or(j, "weights", where, m.weights);
    return m;
}

inline json to_json(const scenario_config& cfg) {
    return json{{"n_users", cfg.n_users},
                {"m_types", cfg.m_types},
                {"total_vehicles", cfg.total_vehicles},
                {"type_interval_minutes", cfg.type_interval_minutes},
                {"elapsed_stay", cfg.elapsed_stay},
                {"stay", to_json(cfg.stay)},
                {"cycles", to_json(cfg.cycles)},
                {"data", to_json(cfg.data)},
                {"rate", to_json(cfg.rate)},
                {"t_max", to_json(cfg.t_max)},
                {"f_local", to_json(cfg.f_local)},
                {"params", to_json(cfg.params)}};
}

inline scenario_config config_from_json(const json& j, const char* where = "config") {
    scenario_config cfg;
    cfg.n_users = field_or(j, "n_users", where, cfg.n_users);
    cfg.m_types = field_or(j, "m_types", where, cfg.m_types);
    cfg.total_vehicles = field_or(j, "total_vehicles", where, cfg.total_vehicles);
    cfg.type_interval_minutes =
        field_or(j, "type_interval_minutes", where, cfg.type_interval_minutes);
    cfg.elapsed_stay = field_or(j, "elapsed_stay", where, cfg.elapsed_stay);
    if (j.contains("stay")) cfg.stay = stay_model_from_json(j["stay"], "config.stay");
    if (j.contains("cycles")) cfg.cycles = range_from_json(j["cycles"], "config.cycles");
    if (j.contains("data")) cfg.data = range_from_json(j["data"], "config.data");
    if (j.contains("rate")) cfg.rate = range_from_json(j["rate"], "config.rate");
    if (j.contains("t_max")) cfg.t_max = range_from_json(j["t_max"], "config.t_max");
    if (j.contains("f_local")) cfg.f_local = range_from_json(j["f_local"], "config.f_local");
    cfg.params = params_from_json(require(j, "params", where), "config.params");
    validate(cfg);
    return cfg;
}

inline json to_json(const stage1_config& cfg) {
    json j{{"max_iters", cfg.max_iters},
           {"eps", cfg.eps},
           {"patience", cfg.patience},
           {"q", cfg.q},
           {"proj_eps_rel", cfg.proj_eps_rel}};
    if (cfg.eta0) j["eta0"] = *cfg.eta0;
    return j;
}

inline stage1_config solver_from_json(const json& j, const char* where = "solver") {
    stage1_config cfg;
    cfg.max_iters = field_or(j, "max_iters", where, cfg.max_iters);
    cfg.eps = field_or(j, "eps", where, cfg.eps);
    cfg.patience = field_or(j, "patience", where, cfg.patience);
    cfg.q = field_or(j, "q", where, cfg.q);
    cfg.proj_eps_rel = field_or(j, "proj_eps_rel", where, cfg.proj_eps_rel);
    if (j.contains("eta0")) cfg.eta0 = field<double>(j, "eta0", where);
    if (cfg.max_iters < 1 || !(cfg.eps > 0.0) || cfg.patience < 1 || !(cfg.q > 0.0))
        throw std::invalid_argument(std::string(where) + ": invalid solver settings");
    return cfg;
}

inline void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << text;
    if (!out) throw std::runtime_error("write failed: " + path);
}

inline void write_json(const std::string& path, const json& j) {
    write_text(path, j.dump(2) + "\n");
}

inline json read_json(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::invalid_argument("cannot open: " + path);
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(path + ": " + e.what());
    }
}

}  // namespace fogmarket
