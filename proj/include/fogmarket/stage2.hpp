// Stage 2: the MEC server's price and sourcing decision against a known
// population of stage-3 responders. Users are ranked by descending
// participation cutoff; for every prefix size k there is a rental-price
// threshold T_k below which serving exactly that prefix is profitable, and on
// each band of rental prices the optimal service price, demand, and sourcing
// split have closed forms.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <vector>

#include "fogmarket/market.hpp"
#include "fogmarket/stage3.hpp"

namespace fogmarket {

// Users able to offload, sorted by descending cutoff (ties by ascending id),
// with the prefix aggregates the closed forms are built from.
struct sorted_market {
    std::vector<user_profile> users;     // sorted; never-offload users removed
    std::vector<int> excluded_ids;       // users that can never offload
    std::vector<double> cutoff;          // cutoff[i] for users[i]
    std::vector<double> tau_sum;         // tau_sum[k-1] = sum of tau over first k
    std::vector<double> delta_sum;       // delta_sum[k-1] = delta * sum of f_local
    std::vector<double> threshold_t;     // threshold_t[k-1] = T_k

    std::size_t size() const { return users.size(); }
};

enum class capacity_case {
    own_capacity_ample,   // server capacity never binds on any band
    own_capacity_binds,   // server capacity binds on every band
    mixed,                // capacity binds only for rental prices above a split point
};

struct stage2_solution {
    double c = 0.0;            // rental price the solution was computed for
    int active_k = 0;          // number of served users (prefix length)
    double p = 0.0;            // service price; meaningless when active_k == 0
    double f_e = 0.0;          // server compute devoted to users, GHz
    double f_rsu = 0.0;        // compute bought from the roadside unit, GHz
    double demand = 0.0;       // total prefix demand at p
    double utility = 0.0;      // server profit at this decision
    capacity_case regime = capacity_case::own_capacity_ample;
    bool f_e_clamped = false;  // own-compute first-order optimum exceeded capacity
    // demand - f_e - f_rsu. Zero whenever f_rsu > 0; negative when the
    // purchase bracket clamps to zero and f_e = c/(2k_e) overshoots demand.
    double c9_residual = 0.0;
    // True iff the set of users who actually offload at price p is exactly
    // the chosen prefix. Can be false for profiles whose cutoff order differs
    // from their demand-intensity order; the closed forms assume it.
    bool prefix_consistent = true;
};

inline sorted_market sort_users(const market_params& mp,
                                const std::vector<user_profile>& users) {
    validate(mp);
    sorted_market m;
    std::vector<std::pair<double, const user_profile*>> able;
    able.reserve(users.size());
    for (const auto& u : users) {
        validate(u);
        const auto cut = participation_cutoff(mp, u);
        if (cut)
            able.emplace_back(*cut, &u);
        else
            m.excluded_ids.push_back(u.id);
    }
    if (able.empty()) throw all_users_never_offload{};
    std::sort(able.begin(), able.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second->id < b.second->id;
    });

    const std::size_t n = able.size();
    m.users.reserve(n);
    m.cutoff.reserve(n);
    m.tau_sum.resize(n);
    m.delta_sum.resize(n);
    m.threshold_t.resize(n);
    double ts = 0.0, ds = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const user_profile& u = *able[i].second;
        m.users.push_back(u);
        m.cutoff.push_back(able[i].first);
        ts += tau(mp, u);
        ds += mp.delta * u.f_local;
        m.tau_sum[i] = ts;
        m.delta_sum[i] = ds;
        m.threshold_t[i] = able[i].first * able[i].first * ds / ts;
    }
    return m;
}

// Rental-price threshold: serving the k-user prefix is viable iff c < T_k.
inline double participation_threshold_t(const sorted_market& m, int k) {
    if (k < 1 || static_cast<std::size_t>(k) > m.size())
        throw std::invalid_argument("participation_threshold_t: k out of range");
    return m.threshold_t[static_cast<std::size_t>(k) - 1];
}

// Revenue-optimal service price when exactly the first k users are served.
inline double prefix_price(const sorted_market& m, int k, double c) {
    const auto i = static_cast<std::size_t>(k) - 1;
    return std::sqrt(c * m.tau_sum[i] / m.delta_sum[i]);
}

// Total demand of the first k users at the prefix-optimal price.
inline double prefix_demand(const sorted_market& m, int k, double c) {
    const auto i = static_cast<std::size_t>(k) - 1;
    return std::sqrt(m.tau_sum[i] * m.delta_sum[i] / c) - m.delta_sum[i];
}

// Largest prefix size k with c < T_k; 0 when no prefix is viable.
inline int active_set(const sorted_market& m, double c) {
    if (!(c >= 0.0)) throw std::invalid_argument("rental price c must be >= 0");
    for (std::size_t k = m.size(); k >= 1; --k)
        if (c < m.threshold_t[k - 1]) return static_cast<int>(k);
    return 0;
}

inline capacity_case classify_capacity(const market_params& mp, const sorted_market& m) {
    const double split = 2.0 * mp.k_e() * mp.f_e_max;
    if (split >= m.threshold_t.front()) return capacity_case::own_capacity_ample;
    if (split <= m.threshold_t.back()) return capacity_case::own_capacity_binds;
    return capacity_case::mixed;
}

inline stage2_solution solve_stage2(const market_params& mp, const sorted_market& m,
                                    double c) {
    if (!(c >= 0.0)) throw std::invalid_argument("rental price c must be >= 0");
    stage2_solution s;
    s.c = c;
    s.regime = classify_capacity(mp, m);
    s.active_k = active_set(m, c);
    if (s.active_k == 0) return s;  // no viable prefix: the server serves nobody
    if (c == 0.0) throw degenerate_zero_price{};

    s.p = prefix_price(m, s.active_k, c);
    s.demand = prefix_demand(m, s.active_k, c);
    const double f_e_unclamped = c / (2.0 * mp.k_e());
    s.f_e = std::min(f_e_unclamped, mp.f_e_max);
    s.f_e_clamped = f_e_unclamped > mp.f_e_max;
    s.f_rsu = std::max(s.demand - s.f_e, 0.0);
    s.c9_residual = s.demand - s.f_e - s.f_rsu;
    s.utility = mec_utility(mp, s.p, s.demand, s.f_e, c, s.f_rsu);

    s.prefix_consistent = true;
    for (std::size_t i = 0; i < m.size(); ++i) {
        const bool in_prefix = i < static_cast<std::size_t>(s.active_k);
        if (best_response(mp, m.users[i], s.p).chi != in_prefix) {
            s.prefix_consistent = false;
            break;
        }
    }
    return s;
}

// Per-user responses at the stage-2 price (empty prefix: everyone local).
inline std::vector<user_response> prefix_responses(const market_params& mp,
                                                   const sorted_market& m,
                                                   const stage2_solution& s) {
    std::vector<user_response> out;
    out.reserve(m.size());
    for (std::size_t i = 0; i < m.size(); ++i) {
        if (s.active_k == 0) {
            user_response r;
            r.utility = m.users[i].t_max > 0 ? tau(mp, m.users[i]) * std::log(mp.delta) : 0.0;
            out.push_back(r);
        } else {
            out.push_back(best_response(mp, m.users[i], s.p));
        }
    }
    return out;
}

}  // namespace fogmarket
