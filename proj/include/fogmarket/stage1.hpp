// Stage 1: the roadside unit's contract menu and rental price. Screening
// constraints reduce to a per-type closed form parametrized by one supply
// multiplier eta; the price c is found by a projected-gradient/dual-ascent
// loop per rental-price band, and the winning band is the one with the best
// recovered (exactly supply-feasible) objective.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <vector>

#include "fogmarket/market.hpp"
#include "fogmarket/stage2.hpp"

namespace fogmarket {

// Cumulative screening weights: mu[m] for m = 2..M aggregates the counts of
// type m and everyone above it, discounted by adjacent type ratios.
// mu[0] and mu[1] are unused padding.
inline std::vector<double> mu_recursion(const vehicle_population& pop) {
    validate(pop);
    const std::size_t mm = pop.types();
    std::vector<double> mu(mm + 1, 0.0);
    if (mm < 2) return mu;
    mu[mm] = pop.count[mm - 1];
    for (std::size_t m = mm - 1; m >= 2; --m)
        mu[m] = mu[m + 1] * pop.theta[m] / pop.theta[m - 1] + pop.count[m - 1];
    return mu;
}

// Per-type linear coefficients w with f_m(eta) = eta * w[m] before capping.
struct contract_weights {
    std::vector<double> w;     // size M, 0-based
    std::vector<double> mu;    // from mu_recursion
    double gamma_ir1 = 0.0;    // multiplier of the lowest type's zero-profit constraint
};

inline contract_weights make_contract_weights(const market_params& mp,
                                              const vehicle_population& pop) {
    validate(mp);
    const std::size_t mm = pop.types();
    contract_weights cw;
    cw.mu = mu_recursion(pop);
    cw.w.assign(mm, 0.0);
    const double two_kv = 2.0 * mp.k_v();
    cw.w[mm - 1] = 1.0 / two_kv;
    if (mm == 1) {
        cw.gamma_ir1 = -pop.count[0];
        return cw;
    }
    for (std::size_t m = mm - 1; m >= 2; --m) {
        const double denom = two_kv * (cw.mu[m] - cw.mu[m + 1]);
        // denom == 0 only for a zero-count type tied in theta with its
        // successor; give it the successor's item so the menu stays monotone.
        cw.w[m - 1] = denom > 0.0 ? pop.count[m - 1] / denom : cw.w[m];
    }
    const double denom1 =
        two_kv * (pop.count[0] + cw.mu[2] * (pop.theta[1] - pop.theta[0]) / pop.theta[0]);
    cw.w[0] = denom1 > 0.0 ? pop.count[0] / denom1 : cw.w[1];
    cw.gamma_ir1 = -pop.count[0] - cw.mu[2] * pop.theta[1] / pop.theta[0];
    return cw;
}

// Menu at supply multiplier eta: compute levels from the weights capped to
// the vehicle limit, rewards priced so the lowest type earns exactly zero and
// each higher type is exactly indifferent to the item below its own.
inline contract_menu contract_from_eta(const market_params& mp, const vehicle_population& pop,
                                       const contract_weights& cw, double eta) {
    if (!(eta >= 0.0)) throw std::invalid_argument("eta must be >= 0");
    const std::size_t mm = pop.types();
    contract_menu menu;
    menu.f.resize(mm);
    menu.p.resize(mm);
    for (std::size_t m = 0; m < mm; ++m)
        menu.f[m] = std::clamp(eta * cw.w[m], 0.0, mp.f_v_max);
    const double kv = mp.k_v();
    menu.p[0] = kv * menu.f[0] * menu.f[0] / pop.theta[0];
    for (std::size_t m = 1; m < mm; ++m)
        menu.p[m] = menu.p[m - 1] +
                    kv * (menu.f[m] * menu.f[m] - menu.f[m - 1] * menu.f[m - 1]) / pop.theta[m];
    return menu;
}

inline contract_menu contract_from_eta(const market_params& mp, const vehicle_population& pop,
                                       double eta) {
    return contract_from_eta(mp, pop, make_contract_weights(mp, pop), eta);
}

// Contracted aggregate supply at multiplier eta, with per-vehicle caps.
inline double contracted_supply(const market_params& mp, const vehicle_population& pop,
                                const contract_weights& cw, double eta) {
    double s = 0.0;
    for (std::size_t m = 0; m < pop.types(); ++m)
        s += pop.count[m] * std::clamp(eta * cw.w[m], 0.0, mp.f_v_max);
    return s;
}

// Smallest eta whose contracted supply meets `target`; nullopt when even the
// fully capped menu cannot. Piecewise-linear, solved exactly per segment.
inline std::optional<double> eta_for_supply(const market_params& mp,
                                            const vehicle_population& pop,
                                            const contract_weights& cw, double target) {
    if (target <= 0.0) return 0.0;
    struct seg {
        double brk;    // eta where this type's item hits the cap
        double slope;  // count * weight
    };
    std::vector<seg> segs;
    double slope = 0.0;
    for (std::size_t m = 0; m < pop.types(); ++m) {
        if (cw.w[m] > 0.0 && pop.count[m] > 0.0) {
            segs.push_back({mp.f_v_max / cw.w[m], pop.count[m] * cw.w[m]});
            slope += pop.count[m] * cw.w[m];
        }
    }
    if (slope == 0.0) return std::nullopt;
    std::sort(segs.begin(), segs.end(), [](const seg& a, const seg& b) { return a.brk < b.brk; });
    double eta = 0.0, supply = 0.0;
    for (const auto& s : segs) {
        const double at_brk = supply + slope * (s.brk - eta);
        if (at_brk >= target) return eta + (target - supply) / slope;
        supply = at_brk;
        eta = s.brk;
        slope -= s.slope;
    }
    return std::nullopt;  // all items capped and still short
}

struct multiplier_state {
    double eta = 0.0;   // supply-coverage multiplier
    double beta = 0.0;  // positive-trade multiplier
    double c = 0.0;     // rental price iterate
};

// d(dual objective)/dc on a band where the active prefix has aggregates
// (tau_k, delta_k). `capacity_binding` selects the server's sourcing branch.
inline double stage1_dldc(double tau_k, double delta_k, double k_e, double f_e_max,
                          double c, double eta, double beta, bool capacity_binding) {
    const double s = std::sqrt(tau_k * delta_k);
    const double demand = s / std::sqrt(c) - delta_k;
    const double d_demand = -0.5 * s / (c * std::sqrt(c));
    const double fe = capacity_binding ? f_e_max : c / (2.0 * k_e);
    const double d_fe = capacity_binding ? 0.0 : 1.0 / (2.0 * k_e);
    return (1.0 + beta) * (-(demand - fe) - c * (d_demand - d_fe)) +
           eta * (d_demand - d_fe);
}

// One multiplier step: projected subgradient ascent with step `step`.
inline void update_multipliers(multiplier_state& st, double step, double demand_minus_fe,
                               double supply, double c) {
    st.eta = std::max(0.0, st.eta + step * (demand_minus_fe - supply));
    st.beta = std::max(0.0, st.beta + step * (c * (-demand_minus_fe)));
}

// One projected-gradient step on the rental price, kept inside (lo, hi).
inline void update_price_c(multiplier_state& st, double step, double grad, double lo,
                           double hi, double proj_eps) {
    if (lo + proj_eps >= hi - proj_eps) {  // band thinner than the projection margin
        st.c = 0.5 * (lo + hi);
        return;
    }
    st.c = std::clamp(st.c - step * grad, lo + proj_eps, hi - proj_eps);
}

struct stage1_config {
    int max_iters = 50000;
    double eps = 1e-6;        // relative objective change per iteration
    int patience = 10;        // consecutive small changes required to stop
    double q = 0.05;          // step constant; step at iteration l is q/sqrt(l)
    double proj_eps_rel = 1e-9;
    std::optional<double> eta0;  // default 0.1 * 2 k_v f_v_max
};

struct subproblem_residuals {
    double supply_gap = 0.0;    // contracted supply minus required purchase
    double c11_gap = 0.0;       // demand minus server own-compute (>= 0 wanted)
    double ir1_gap = 0.0;       // lowest type's utility (0 wanted)
    double max_ldic_gap = 0.0;  // worst adjacent indifference violation
};

struct subproblem_result {
    int k = 0;                // active prefix size on this band
    double lo = 0.0, hi = 0.0;  // rental-price band
    bool capacity_binding = false;
    double c = 0.0;
    double eta = 0.0;
    double beta = 0.0;
    contract_menu menu;
    double purchase = 0.0;    // server's rented amount at c
    double supply = 0.0;      // contracted aggregate supply
    double utility = 0.0;     // roadside-unit profit
    bool feasible = false;    // supply can cover the purchase
    bool converged = false;
    int iterations = 0;
    subproblem_residuals residuals;
};

namespace detail {

inline double payout(const vehicle_population& pop, const contract_menu& menu) {
    double s = 0.0;
    for (std::size_t m = 0; m < pop.types(); ++m)
        s += pop.count[m] * pop.theta[m] * menu.p[m];
    return s;
}

inline subproblem_residuals menu_residuals(const market_params& mp,
                                           const vehicle_population& pop,
                                           const contract_menu& menu, double supply,
                                           double purchase, double demand, double fe) {
    subproblem_residuals r;
    r.supply_gap = supply - purchase;
    r.c11_gap = demand - fe;
    r.ir1_gap = vehicle_utility(mp, pop.theta[0], menu.f[0], menu.p[0]);
    r.max_ldic_gap = 0.0;
    for (std::size_t m = 1; m < pop.types(); ++m) {
        const double own = vehicle_utility(mp, pop.theta[m], menu.f[m], menu.p[m]);
        const double down = vehicle_utility(mp, pop.theta[m], menu.f[m - 1], menu.p[m - 1]);
        r.max_ldic_gap = std::max(r.max_ldic_gap, std::abs(own - down));
    }
    return r;
}

// Exactly supply-feasible candidate at rental price c: the cheapest menu
// covering the server's purchase, or an infeasible marker when even fully
// capped vehicles cannot cover it.
inline subproblem_result recovered_candidate(const market_params& mp,
                                             const vehicle_population& pop,
                                             const contract_weights& cw,
                                             const sorted_market& market, int k, double c,
                                             bool capacity_binding) {
    subproblem_result cand;
    cand.k = k;
    cand.capacity_binding = capacity_binding;
    cand.c = c;
    const double demand = prefix_demand(market, k, c);
    const double fe = capacity_binding ? mp.f_e_max : c / (2.0 * mp.k_e());
    cand.purchase = std::max(demand - fe, 0.0);
    const auto eta = eta_for_supply(mp, pop, cw, cand.purchase);
    if (!eta) {
        cand.feasible = false;
        cand.eta = 0.0;
        cand.menu = contract_from_eta(mp, pop, cw, 0.0);
        cand.supply = 0.0;
        cand.utility = -std::numeric_limits<double>::infinity();
        cand.residuals = menu_residuals(mp, pop, cand.menu, 0.0, cand.purchase, demand, fe);
        return cand;
    }
    cand.feasible = true;
    cand.eta = *eta;
    cand.menu = contract_from_eta(mp, pop, cw, cand.eta);
    cand.supply = contracted_supply(mp, pop, cw, cand.eta);
    cand.utility = c * cand.purchase - payout(pop, cand.menu);
    cand.residuals = menu_residuals(mp, pop, cand.menu, cand.supply, cand.purchase, demand, fe);
    return cand;
}

}  // namespace detail

// Dual-decomposition loop on one rental-price band [lo, hi) with k active
// users. Multiplier and price iterates follow diminishing subgradient steps;
// the reported candidate is the best exactly-feasible point seen.
inline subproblem_result solve_subproblem_k(const market_params& mp,
                                            const vehicle_population& pop,
                                            const contract_weights& cw,
                                            const sorted_market& market, int k, double lo,
                                            double hi, bool capacity_binding,
                                            const stage1_config& cfg) {
    if (!(lo < hi)) throw std::invalid_argument("solve_subproblem_k: empty band");
    const double tau_k = market.tau_sum[static_cast<std::size_t>(k) - 1];
    const double delta_k = market.delta_sum[static_cast<std::size_t>(k) - 1];
    const double proj_eps = cfg.proj_eps_rel * hi;

    multiplier_state st;
    st.eta = cfg.eta0.value_or(0.1 * 2.0 * mp.k_v() * mp.f_v_max);
    st.beta = 0.0;
    st.c = 0.5 * (lo + hi);

    subproblem_result best = detail::recovered_candidate(mp, pop, cw, market, k, st.c,
                                                         capacity_binding);
    best.lo = lo;
    best.hi = hi;

    double prev_u = 0.0;
    int calm = 0;
    int l = 1;
    bool converged = false;
    for (; l <= cfg.max_iters; ++l) {
        const double step = cfg.q / std::sqrt(static_cast<double>(l));
        const contract_menu menu = contract_from_eta(mp, pop, cw, st.eta);
        const double supply = contracted_supply(mp, pop, cw, st.eta);
        const double demand = prefix_demand(market, k, st.c);
        const double fe = capacity_binding ? mp.f_e_max : st.c / (2.0 * mp.k_e());
        const double purchase = std::max(demand - fe, 0.0);
        const double u_iter = st.c * purchase - detail::payout(pop, menu);

        auto cand = detail::recovered_candidate(mp, pop, cw, market, k, st.c,
                                                capacity_binding);
        if (cand.utility > best.utility || !best.feasible) {
            cand.lo = lo;
            cand.hi = hi;
            best = cand;
        }

        if (l > 1) {
            const double rel = std::abs(u_iter - prev_u) / std::max(1.0, std::abs(u_iter));
            calm = rel < cfg.eps ? calm + 1 : 0;
            if (calm >= cfg.patience) {
                converged = true;
                break;
            }
        }
        prev_u = u_iter;

        update_multipliers(st, step, demand - fe, supply, st.c);
        const double grad = stage1_dldc(tau_k, delta_k, mp.k_e(), mp.f_e_max, st.c, st.eta,
                                        st.beta, capacity_binding);
        update_price_c(st, step, grad, lo, hi, proj_eps);
    }

    best.beta = st.beta;
    best.converged = converged;
    best.iterations = std::min(l, cfg.max_iters);
    return best;
}

struct stage1_result {
    std::vector<subproblem_result> candidates;
    int selected = -1;          // index into candidates; -1 means no trade
    double c_star = 0.0;
    contract_menu menu;         // all-zero menu when no trade
    double eta_star = 0.0;
    double utility = 0.0;
    bool converged = true;      // convergence flag of the selected band
    int iterations = 0;
    double gamma_ir1 = 0.0;
    bool no_trade = false;
};

// Enumerate every nonempty rental-price band (prefix size x capacity branch),
// solve each, and keep the best feasible candidate. Bands are delimited by
// the per-prefix viability thresholds; the capacity branch splits a band when
// the server's own-compute cap activates inside it.
inline stage1_result solve_stage1(const market_params& mp, const vehicle_population& pop,
                                  const sorted_market& market, const stage1_config& cfg) {
    const contract_weights cw = make_contract_weights(mp, pop);
    const std::size_t n = market.size();
    const double split = 2.0 * mp.k_e() * mp.f_e_max;

    stage1_result out;
    out.gamma_ir1 = cw.gamma_ir1;
    out.menu.f.assign(pop.types(), 0.0);
    out.menu.p.assign(pop.types(), 0.0);

    double suffix_hi = 0.0;  // max of T_j over prefixes longer than k
    for (std::size_t k = n; k >= 1; --k) {
        const double lo = suffix_hi;
        const double hi = market.threshold_t[k - 1];
        suffix_hi = std::max(suffix_hi, hi);
        if (!(lo < hi)) continue;  // band empty: longer prefixes dominate it
        const double mid = std::clamp(split, lo, hi);
        if (mid > lo)
            out.candidates.push_back(solve_subproblem_k(mp, pop, cw, market,
                                                        static_cast<int>(k), lo, mid, false,
                                                        cfg));
        if (mid < hi)
            out.candidates.push_back(solve_subproblem_k(mp, pop, cw, market,
                                                        static_cast<int>(k), mid, hi, true,
                                                        cfg));
    }

    for (std::size_t i = 0; i < out.candidates.size(); ++i) {
        const auto& cand = out.candidates[i];
        if (!cand.feasible) continue;
        if (out.selected < 0 || cand.utility > out.utility) {
            out.selected = static_cast<int>(i);
            out.utility = cand.utility;
        }
    }
    if (out.selected >= 0 && out.utility > 0.0) {
        const auto& win = out.candidates[static_cast<std::size_t>(out.selected)];
        out.c_star = win.c;
        out.menu = win.menu;
        out.eta_star = win.eta;
        out.converged = win.converged;
        out.iterations = win.iterations;
    } else {
        // No band yields positive profit: publish no menu and price the
        // rental above every viability threshold so the server buys nothing.
        out.selected = -1;
        out.no_trade = true;
        out.c_star = market.threshold_t.empty()
                         ? 1.0
                         : *std::max_element(market.threshold_t.begin(),
                                             market.threshold_t.end());
        out.utility = 0.0;
        out.eta_star = 0.0;
    }
    return out;
}

// Screening-constraint audit of an arbitrary menu against a population.
struct feasibility_report {
    double max_ir_violation = 0.0;   // worst negative own-item utility
    double max_ic_violation = 0.0;   // worst gain from taking another item
    double ir1_activeness = 0.0;     // |lowest type's utility|
    double max_ldic_activeness = 0.0;  // worst adjacent indifference gap
    bool f_monotone = true;
    bool p_monotone = true;
    bool within_cap = true;

    bool feasible(double tol = 1e-9) const {
        return max_ir_violation <= tol && max_ic_violation <= tol && within_cap;
    }
};

inline feasibility_report verify_contract_feasibility(const market_params& mp,
                                                      const vehicle_population& pop,
                                                      const contract_menu& menu) {
    validate(pop);
    const std::size_t mm = pop.types();
    if (menu.f.size() != mm || menu.p.size() != mm)
        throw std::invalid_argument("contract menu size does not match population");
    feasibility_report r;
    for (std::size_t a = 0; a < mm; ++a) {
        const double own = vehicle_utility(mp, pop.theta[a], menu.f[a], menu.p[a]);
        r.max_ir_violation = std::max(r.max_ir_violation, -own);
        for (std::size_t b = 0; b < mm; ++b) {
            if (a == b) continue;
            const double other = vehicle_utility(mp, pop.theta[a], menu.f[b], menu.p[b]);
            r.max_ic_violation = std::max(r.max_ic_violation, other - own);
        }
        if (menu.f[a] < -1e-15 || menu.f[a] > mp.f_v_max * (1.0 + 1e-12)) r.within_cap = false;
        if (a > 0) {
            if (menu.f[a] < menu.f[a - 1] - 1e-12) r.f_monotone = false;
            if (menu.p[a] < menu.p[a - 1] - 1e-12) r.p_monotone = false;
        }
    }
    r.ir1_activeness = std::abs(vehicle_utility(mp, pop.theta[0], menu.f[0], menu.p[0]));
    for (std::size_t m = 1; m < mm; ++m) {
        const double own = vehicle_utility(mp, pop.theta[m], menu.f[m], menu.p[m]);
        const double down = vehicle_utility(mp, pop.theta[m], menu.f[m - 1], menu.p[m - 1]);
        r.max_ldic_activeness = std::max(r.max_ldic_activeness, std::abs(own - down));
    }
    return r;
}

}  // namespace fogmarket
