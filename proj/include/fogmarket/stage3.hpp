// Stage 3: each user's best response to the MEC server's posted price p.
// The log-utility maximizer has a closed form; a user offloads only when the
// price is strictly below its participation cutoff, and at the cutoff or
// above it stays local.
#pragma once

#include <cmath>
#include <optional>

#include "fogmarket/market.hpp"

namespace fogmarket {

struct user_response {
    bool chi = false;      // true iff the user offloads
    double f = 0.0;        // purchased compute, GHz
    double utility = 0.0;  // utility at this response
};

// Highest price at which the user still offloads. Users that can never gain
// from offloading (upload delay >= local completion time) have no cutoff.
inline std::optional<double> participation_cutoff(const market_params& mp,
                                                  const user_profile& u) {
    const auto thresh = offload_threshold(u);
    if (!thresh) return std::nullopt;
    return tau(mp, u) / (u.f_local * mp.delta + *thresh);
}

// Closed-form utility maximizer over {0} U (threshold, inf) at price p > 0.
inline user_response best_response(const market_params& mp, const user_profile& u, double p) {
    if (!(p > 0.0)) throw std::invalid_argument("service price p must be > 0");
    user_response r;
    const auto cutoff = participation_cutoff(mp, u);
    if (cutoff && p < *cutoff) {
        r.chi = true;
        r.f = tau(mp, u) / p - u.f_local * mp.delta;
        r.utility = user_utility(mp, u, r.f, p);
    } else {
        r.chi = false;
        r.f = 0.0;
        r.utility = user_utility(mp, u, 0.0, p);
    }
    return r;
}

}  // namespace fogmarket
