// Independent verification tools: brute-force grid optimizers that never call
// the closed-form solvers, stationarity/complementarity residuals for the
// stage-2 decision, and a central finite-difference probe. These exist to
// confirm the analytic results by a second route, so they intentionally
// duplicate small pieces of algebra instead of reusing solver code.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "fogmarket/market.hpp"
#include "fogmarket/stage2.hpp"
#include "fogmarket/stage3.hpp"

namespace fogmarket::oracle {

struct grid_point {
    double f = 0.0;
    double utility = 0.0;
};

// Exhaustive scan of one user's choice set {0} U (threshold, f_hi] at price p.
inline grid_point grid_best_response(const market_params& mp, const user_profile& u,
                                     double p, std::size_t n_points) {
    if (!(p > 0.0)) throw std::invalid_argument("service price p must be > 0");
    if (n_points < 2) throw std::invalid_argument("grid needs at least 2 points");
    grid_point best{0.0, user_utility(mp, u, 0.0, p)};
    const auto thresh = offload_threshold(u);
    if (!thresh) return best;
    const double lo = *thresh;
    const double hi = std::max({2.0 * tau(mp, u) / p, 10.0 * lo, lo + 1.0});
    const double step = (hi - lo) / static_cast<double>(n_points);
    for (std::size_t i = 1; i <= n_points; ++i) {
        const double f = lo + step * static_cast<double>(i);
        const double val = user_utility(mp, u, f, p);
        if (val > best.utility) best = {f, val};
    }
    return best;
}

struct stage2_grid_result {
    double p = 0.0;
    double f_e = 0.0;
    double f_rsu = 0.0;
    double demand = 0.0;
    double utility = 0.0;
    double p_step = 0.0;    // final-level grid resolution in p
    double f_e_step = 0.0;  // final-level grid resolution in f_e
};

// Brute-force server decision at rental price c: scan (p, f_e) with the
// purchased amount implied by market clearing, refining the window around the
// incumbent a few times. Demand is summed from exact per-user best responses,
// so no prefix structure is assumed.
// p_min > 0 restricts the price search to [p_min, ...). Callers use it to
// compare against the model's own decision space: the solver never prices
// below the first dropped user's cutoff, while a raw argmax happily would.
inline stage2_grid_result grid_stage2(const market_params& mp,
                                      const std::vector<user_profile>& users, double c,
                                      std::size_t n_p = 2000, std::size_t n_fe = 400,
                                      int levels = 3, double p_min = 0.0) {
    if (!(c > 0.0)) throw std::invalid_argument("rental price c must be > 0");
    double cut_hi = 0.0;
    for (const auto& u : users) {
        const auto cut = participation_cutoff(mp, u);
        if (cut) cut_hi = std::max(cut_hi, *cut);
    }
    stage2_grid_result best;  // p = f_e = 0: serve nobody, utility 0
    if (cut_hi == 0.0) return best;

    const auto demand_at = [&](double p) {
        double d = 0.0;
        for (const auto& u : users) d += best_response(mp, u, p).f;
        return d;
    };

    double p_lo = std::max(cut_hi * 1e-4, p_min);
    double p_hi = std::max(cut_hi * 1.02, p_lo * 1.02);
    double fe_lo = 0.0;
    double fe_hi = mp.f_e_max;
    for (int level = 0; level < levels; ++level) {
        const double p_step = (p_hi - p_lo) / static_cast<double>(n_p);
        const double fe_step = (fe_hi - fe_lo) / static_cast<double>(n_fe);
        stage2_grid_result level_best = best;
        for (std::size_t i = 0; i <= n_p; ++i) {
            const double p = p_lo + p_step * static_cast<double>(i);
            if (!(p > 0.0)) continue;
            const double d = demand_at(p);
            const double fe_cap = std::min(mp.f_e_max, d);
            for (std::size_t j = 0; j <= n_fe; ++j) {
                const double fe = std::min(fe_lo + fe_step * static_cast<double>(j), fe_cap);
                const double u = mec_utility(mp, p, d, fe, c, d - fe);
                if (u > level_best.utility) level_best = {p, fe, d - fe, d, u, p_step, fe_step};
                if (fe >= fe_cap) break;
            }
        }
        best = level_best;
        if (best.p == 0.0) break;  // serving nobody stayed optimal
        p_lo = std::max({best.p - 2.0 * best.p_step, cut_hi * 1e-6, p_min});
        p_hi = best.p + 2.0 * best.p_step;
        fe_lo = std::max(best.f_e - 2.0 * best.f_e_step, 0.0);
        fe_hi = std::min(best.f_e + 2.0 * best.f_e_step, mp.f_e_max);
        if (fe_hi <= fe_lo) fe_hi = fe_lo + best.f_e_step + 1e-12;
    }
    return best;
}

// First-order and complementarity residuals of the server's constrained
// problem at a candidate decision. Multipliers are reconstructed from the
// active-constraint pattern; at a true optimum every entry vanishes.
struct kkt_residuals {
    double stat_p = 0.0;       // stationarity in the service price
    double stat_f_e = 0.0;     // stationarity in own compute
    double stat_f_rsu = 0.0;   // stationarity in purchased compute
    double primal_demand = 0.0;  // demand - f_e - f_rsu
    double comp_capacity = 0.0;  // capacity multiplier x slack
    double comp_price = 0.0;     // price-positivity multiplier x p
    double comp_f_e = 0.0;       // own-compute-positivity multiplier x f_e
    double comp_f_rsu = 0.0;     // purchase-positivity multiplier x f_rsu
    double dual_violation = 0.0; // most negative reconstructed multiplier

    double max_abs() const {
        return std::max({std::abs(stat_p), std::abs(stat_f_e), std::abs(stat_f_rsu),
                         std::abs(primal_demand), std::abs(comp_capacity),
                         std::abs(comp_price), std::abs(comp_f_e), std::abs(comp_f_rsu),
                         std::abs(dual_violation)});
    }
};

inline kkt_residuals kkt_check_stage2(const market_params& mp, const sorted_market& m,
                                      const stage2_solution& s) {
    if (s.active_k < 1) throw std::invalid_argument("kkt_check_stage2 needs a served prefix");
    const auto i = static_cast<std::size_t>(s.active_k) - 1;
    const double tau_k = m.tau_sum[i];
    const double delta_k = m.delta_sum[i];
    const double ke = mp.k_e();

    const double nu = s.f_rsu > 0.0 ? 0.0 : s.c - 2.0 * ke * s.f_e;
    const double alpha = s.c - nu;  // multiplier of the market-clearing equality
    const double gamma = s.f_e_clamped ? alpha - 2.0 * ke * s.f_e : 0.0;

    kkt_residuals r;
    r.stat_p = delta_k - alpha * tau_k / (s.p * s.p);
    r.stat_f_e = 2.0 * ke * s.f_e - alpha + gamma;
    r.stat_f_rsu = s.c - alpha - nu;
    r.primal_demand = s.demand - s.f_e - s.f_rsu;
    r.comp_capacity = gamma * (s.f_e - mp.f_e_max);
    r.comp_price = 0.0;   // p > 0 at any served prefix, multiplier fixed to zero
    r.comp_f_e = 0.0;     // f_e > 0 whenever c > 0, multiplier fixed to zero
    r.comp_f_rsu = nu * s.f_rsu;
    r.dual_violation = std::min({0.0, gamma, nu});
    return r;
}

// Central finite difference of a scalar function.
template <class F>
double fd_central(F&& fn, double x, double h) {
    if (!(h > 0.0)) throw std::invalid_argument("fd step h must be > 0");
    return (fn(x + h) - fn(x - h)) / (2.0 * h);
}

// Relative disagreement between an analytic derivative and its central
// finite-difference estimate.
template <class F>
double finite_diff_check(F&& fn, double x, double analytic, double h) {
    const double fd = fd_central(fn, x, h);
    const double scale = std::max({1.0, std::abs(analytic), std::abs(fd)});
    return std::abs(fd - analytic) / scale;
}

struct contract_grid_result {
    contract_menu menu;
    double c = 0.0;
    double utility = 0.0;
    double f_step = 0.0;
    double c_step = 0.0;
};

// Payments that leave the lowest type at zero utility and make every type
// indifferent to the item one step below. Duplicated from the solver on
// purpose; the oracle must not share its algebra.
inline std::vector<double> oracle_payments(const market_params& mp,
                                           const std::vector<double>& theta,
                                           const std::vector<double>& f) {
    std::vector<double> p(f.size());
    const double kv = mp.k_v();
    p[0] = kv * f[0] * f[0] / theta[0];
    for (std::size_t m = 1; m < f.size(); ++m)
        p[m] = p[m - 1] + kv * (f[m] * f[m] - f[m - 1] * f[m - 1]) / theta[m];
    return p;
}

inline bool oracle_menu_incentive_ok(const market_params& mp, const vehicle_population& pop,
                                     const std::vector<double>& f,
                                     const std::vector<double>& p, double tol = 1e-12) {
    const std::size_t mm = pop.types();
    for (std::size_t a = 0; a < mm; ++a) {
        const double own = vehicle_utility(mp, pop.theta[a], f[a], p[a]);
        if (own < -tol) return false;
        for (std::size_t b = 0; b < mm; ++b)
            if (own + tol < vehicle_utility(mp, pop.theta[a], f[b], p[b])) return false;
    }
    return true;
}

// Brute-force roadside-unit design for small markets: scan the rental price c
// and the per-type compute levels on grids, price the menu with the
// active-constraint payments, and keep the best feasible combination. The
// server's reaction to each c is the stage-2 solver itself: the leader
// optimizes against the follower's actual behavior, and that behavior is
// validated separately against raw enumeration in its own checks. Swapping
// in a raw-argmax follower here would score the leader against reactions
// the modeled server never plays.
inline contract_grid_result grid_contract(const market_params& mp,
                                          const vehicle_population& pop,
                                          const std::vector<user_profile>& users,
                                          std::size_t n_c = 160, std::size_t n_f = 60,
                                          int levels = 3) {
    const std::size_t mm = pop.types();
    if (mm > 3) throw std::invalid_argument("grid_contract supports at most 3 types");

    // Rental prices above every per-prefix viability threshold yield no trade.
    const sorted_market sm = sort_users(mp, users);
    double c_cap = 0.0;
    {
        c_cap = *std::max_element(sm.threshold_t.begin(), sm.threshold_t.end());
    }

    contract_grid_result best;
    best.menu.f.assign(mm, 0.0);
    best.menu.p.assign(mm, 0.0);

    double c_lo = c_cap * 1e-4;
    double c_hi = c_cap * (1.0 - 1e-9);
    std::vector<double> f_lo(mm, 0.0), f_hi(mm, mp.f_v_max);
    for (int level = 0; level < levels; ++level) {
        const double c_step = (c_hi - c_lo) / static_cast<double>(n_c);
        const double f_step = (f_hi[0] - f_lo[0]) / static_cast<double>(n_f);
        contract_grid_result level_best = best;
        for (std::size_t ic = 0; ic <= n_c; ++ic) {
            const double c = c_lo + c_step * static_cast<double>(ic);
            if (!(c > 0.0)) continue;
            const double bought = solve_stage2(mp, sm, c).f_rsu;
            const double revenue = c * bought;
            if (revenue <= level_best.utility) continue;  // payouts only lower it

            std::vector<std::size_t> idx(mm, 0);
            std::vector<double> f(mm), p(mm);
            while (true) {
                for (std::size_t m = 0; m < mm; ++m)
                    f[m] = f_lo[m] +
                           (f_hi[m] - f_lo[m]) / static_cast<double>(n_f) *
                               static_cast<double>(idx[m]);
                bool monotone = true;
                for (std::size_t m = 1; m < mm; ++m)
                    if (f[m] < f[m - 1]) monotone = false;
                if (monotone) {
                    double supply = 0.0;
                    for (std::size_t m = 0; m < mm; ++m) supply += pop.count[m] * f[m];
                    if (supply + 1e-9 >= bought) {
                        p = oracle_payments(mp, pop.theta, f);
                        if (oracle_menu_incentive_ok(mp, pop, f, p)) {
                            double payout = 0.0;
                            for (std::size_t m = 0; m < mm; ++m)
                                payout += pop.count[m] * pop.theta[m] * p[m];
                            const double u = revenue - payout;
                            if (u > level_best.utility) {
                                level_best.menu.f = f;
                                level_best.menu.p = p;
                                level_best.c = c;
                                level_best.utility = u;
                                level_best.f_step = f_step;
                                level_best.c_step = c_step;
                            }
                        }
                    }
                }
                std::size_t d = 0;
                while (d < mm && ++idx[d] > n_f) idx[d++] = 0;
                if (d == mm) break;
            }
        }
        best = level_best;
        if (best.c == 0.0) break;  // nothing beat the empty design
        c_lo = std::max(best.c - 2.0 * best.c_step, c_cap * 1e-6);
        c_hi = std::min(best.c + 2.0 * best.c_step, c_cap * (1.0 - 1e-9));
        for (std::size_t m = 0; m < mm; ++m) {
            const double w = (f_hi[m] - f_lo[m]) / static_cast<double>(n_f);
            f_lo[m] = std::max(best.menu.f[m] - 2.0 * w, 0.0);
            f_hi[m] = std::min(best.menu.f[m] + 2.0 * w, mp.f_v_max);
        }
    }
    return best;
}

}  // namespace fogmarket::oracle
