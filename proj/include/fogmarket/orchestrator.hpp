// Backward-induction orchestration of the full game: design the contract and
// rental price (stage 1), resolve the server's reaction (stage 2), collect
// user responses (stage 3), then cross-check that the three stages agree and
// assemble one equilibrium report.
#pragma once

#include <chrono>
#include <cmath>
#include <cstddef>
#include <vector>

#include "fogmarket/market.hpp"
#include "fogmarket/oracle.hpp"
#include "fogmarket/scenario.hpp"
#include "fogmarket/stage1.hpp"
#include "fogmarket/stage2.hpp"
#include "fogmarket/stage3.hpp"

namespace fogmarket {

struct cross_checks {
    bool offload_count_matches_active_k = true;
    double demand_gap = 0.0;           // stage-3 total demand minus stage-2 demand
    double clearing_residual = 0.0;    // demand minus (f_e + f_rsu)
    bool supply_covers_purchase = true;
    bool prefix_consistent = true;
};

struct equilibrium_report {
    scenario input;                  // scenario the game was solved for
    sorted_market market;
    stage1_result stage1;
    stage2_solution stage2;
    std::vector<user_response> responses;  // aligned with market.users
    double c_star = 0.0;
    contract_menu menu;
    double rsu_utility_value = 0.0;
    double mec_utility_value = 0.0;
    double user_utility_sum = 0.0;
    std::vector<double> type_utilities;
    int offload_count = 0;
    double mec_energy_value = 0.0;
    double mec_energy_cost_value = 0.0;
    bool converged = true;
    int iterations = 0;
    cross_checks checks;
    feasibility_report contract_feasibility;
    oracle::kkt_residuals kkt;
    bool kkt_available = false;
};

// Solve the whole game for one scenario. When no user can gain from
// offloading at any price there is nothing to design for; the report comes
// back as a zero-trade equilibrium instead of an error.
inline equilibrium_report solve_game(const scenario& sc, const stage1_config& cfg = {}) {
    validate(sc.params);
    equilibrium_report rep;
    rep.input = sc;
    try {
        rep.market = sort_users(sc.params, sc.users);
    } catch (const all_users_never_offload&) {
        rep.stage1.no_trade = true;
        rep.stage1.selected = -1;
        rep.stage1.gamma_ir1 = make_contract_weights(sc.params, sc.population).gamma_ir1;
        rep.stage1.menu.f.assign(sc.population.types(), 0.0);
        rep.stage1.menu.p.assign(sc.population.types(), 0.0);
        rep.menu = rep.stage1.menu;
        rep.type_utilities.assign(sc.population.types(), 0.0);
        rep.contract_feasibility =
            verify_contract_feasibility(sc.params, sc.population, rep.menu);
        return rep;
    }
    rep.stage1 = solve_stage1(sc.params, sc.population, rep.market, cfg);
    rep.c_star = rep.stage1.c_star;
    rep.menu = rep.stage1.menu;
    rep.converged = rep.stage1.converged;
    rep.iterations = rep.stage1.iterations;

    rep.stage2 = solve_stage2(sc.params, rep.market, rep.c_star);
    rep.responses = prefix_responses(sc.params, rep.market, rep.stage2);

    double demand3 = 0.0;
    for (const auto& r : rep.responses) {
        if (r.chi) ++rep.offload_count;
        demand3 += r.f;
        rep.user_utility_sum += r.utility;
    }

    rep.checks.offload_count_matches_active_k = rep.offload_count == rep.stage2.active_k;
    rep.checks.demand_gap = demand3 - rep.stage2.demand;
    rep.checks.clearing_residual = demand3 - rep.stage2.f_e - rep.stage2.f_rsu;
    rep.checks.prefix_consistent = rep.stage2.prefix_consistent;

    double supply = 0.0;
    for (std::size_t m = 0; m < sc.population.types(); ++m)
        supply += sc.population.count[m] * rep.menu.f[m];
    rep.checks.supply_covers_purchase = supply + 1e-9 * std::max(1.0, rep.stage2.f_rsu) >=
                                        rep.stage2.f_rsu;

    rep.mec_utility_value = rep.stage2.utility;
    rep.rsu_utility_value =
        rsu_utility(sc.population, rep.menu, rep.c_star, rep.stage2.f_rsu);
    rep.type_utilities.resize(sc.population.types());
    for (std::size_t m = 0; m < sc.population.types(); ++m)
        rep.type_utilities[m] =
            vehicle_utility(sc.params, sc.population.theta[m], rep.menu.f[m], rep.menu.p[m]);
    rep.mec_energy_value = mec_energy(sc.params, rep.stage2.f_e);
    rep.mec_energy_cost_value = mec_energy_cost(sc.params, rep.stage2.f_e);
    rep.contract_feasibility =
        verify_contract_feasibility(sc.params, sc.population, rep.menu);
    if (rep.stage2.active_k >= 1) {
        rep.kkt = oracle::kkt_check_stage2(sc.params, rep.market, rep.stage2);
        rep.kkt_available = true;
    }
    return rep;
}

struct scaling_point {
    std::size_t size = 0;
    double seconds = 0.0;
};

struct scaling_fit {
    std::vector<scaling_point> points;
    double slope = 0.0;  // least-squares slope of log(seconds) vs log(size)
};

inline double fit_loglog_slope(const std::vector<scaling_point>& pts) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(pts.size());
    for (const auto& p : pts) {
        const double x = std::log(static_cast<double>(p.size));
        const double y = std::log(std::max(p.seconds, 1e-12));
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

// Wall-clock scaling probe for the stage-2 pipeline (sort + closed form) and
// the per-iteration cost of the stage-1 loop as the type count grows.
template <class F>
scaling_point time_reps(std::size_t size, int reps, F&& body) {
    const auto t0 = std::chrono::steady_clock::now();
    for (int r = 0; r < reps; ++r) body();
    const auto t1 = std::chrono::steady_clock::now();
    return {size, std::chrono::duration<double>(t1 - t0).count() / std::max(reps, 1)};
}

}  // namespace fogmarket
