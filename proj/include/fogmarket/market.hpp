// Core data model for a three-stage vehicular fog computing market:
// user task profiles, global market parameters, the vehicle-type population
// served by the roadside unit, contract menus, and the utility functions of
// every participant (user, MEC server, roadside unit, parked vehicle).
//
// Unit conventions used throughout the library:
//   compute     GHz  (1e9 cycles/s)   task size in Gcycles
//   time        seconds               data in Mbit, rate in Mbit/s
//   money       dimensionless
#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace fogmarket {

struct error : std::runtime_error {
    explicit error(const std::string& what) : std::runtime_error(what) {}
};

// Raised when every user in a scenario has a non-positive offload time budget,
// i.e. nobody can ever benefit from offloading.
struct all_users_never_offload : error {
    all_users_never_offload() : error("no user in the market can ever offload") {}
};

// Raised when the roadside unit price is zero while the market still has
// active buyers; the server's revenue-optimal demand is unbounded there.
struct degenerate_zero_price : error {
    degenerate_zero_price() : error("rental price c = 0 with a non-empty active set") {}
};

// Raised by stay-time models evaluated past the end of their support.
struct support_exhausted : error {
    explicit support_exhausted(const std::string& what) : error(what) {}
};

// One vehicular user and its computation task.
struct user_profile {
    int id = 0;
    double cycles = 1.0;    // task size, Gcycles
    double data = 0.5;      // task input data, Mbit
    double rate = 5.0;      // uplink rate, Mbit/s
    double f_local = 1.0;   // on-board CPU frequency, GHz
    double t_max = 1.0;     // delay tolerance, seconds
};

// Global market constants shared by all three stages.
struct market_params {
    double delta = 1.0;      // offset inside the log utility, >= 1
    double big_c = 100.0;    // satisfaction scale; tau_i = big_c / t_max_i
    double k = 1e-2;         // energy coefficient per GHz^2
    double energy_a = 60.0;  // unit energy price, applies to server and vehicles
    double f_e_max = 300.0;  // MEC server compute capacity, GHz
    double f_v_max = 1.0;    // per-vehicle contractible compute cap, GHz

    double k_e() const { return energy_a * k; }  // server energy cost weight
    double k_v() const { return energy_a * k; }  // vehicle energy cost weight
};

// Parked-vehicle population grouped into discrete stay-time types.
// theta[m] is the type's usable stay duration (hours), count[m] the expected
// number of vehicles of that type (fractional counts are fine).
struct vehicle_population {
    std::vector<double> theta;
    std::vector<double> count;

    std::size_t types() const { return theta.size(); }
};

// Contract menu published by the roadside unit: one (compute, reward) pair
// per vehicle type. reward p[m] is the per-hour payment rate, so a type-m
// vehicle collects theta[m] * p[m] over its stay.
struct contract_menu {
    std::vector<double> f;  // contracted compute, GHz
    std::vector<double> p;  // reward rate
};

// Resolved decisions of the upper two stages, used for report assembly.
struct stage_decisions {
    double c = 0.0;      // roadside unit's unit rental price
    double p = 0.0;      // MEC server's unit service price
    double f_e = 0.0;    // server's own compute devoted to users, GHz
    double f_rsu = 0.0;  // compute rented from the roadside unit, GHz
};

inline void validate(const market_params& mp) {
    if (!(mp.delta >= 1.0)) throw std::invalid_argument("market_params.delta must be >= 1");
    if (!(mp.big_c > 0.0)) throw std::invalid_argument("market_params.big_c must be > 0");
    if (!(mp.k > 0.0)) throw std::invalid_argument("market_params.k must be > 0");
    if (!(mp.energy_a > 0.0)) throw std::invalid_argument("market_params.energy_a must be > 0");
    if (!(mp.f_e_max > 0.0)) throw std::invalid_argument("market_params.f_e_max must be > 0");
    if (!(mp.f_v_max > 0.0)) throw std::invalid_argument("market_params.f_v_max must be > 0");
}

inline void validate(const user_profile& u) {
    if (!(u.cycles > 0.0)) throw std::invalid_argument("user.cycles must be > 0");
    if (!(u.data > 0.0)) throw std::invalid_argument("user.data must be > 0");
    if (!(u.rate > 0.0)) throw std::invalid_argument("user.rate must be > 0");
    if (!(u.f_local > 0.0)) throw std::invalid_argument("user.f_local must be > 0");
    if (!(u.t_max > 0.0)) throw std::invalid_argument("user.t_max must be > 0");
}

inline void validate(const vehicle_population& pop) {
    if (pop.theta.empty()) throw std::invalid_argument("vehicle_population has no types");
    if (pop.theta.size() != pop.count.size())
        throw std::invalid_argument("vehicle_population theta/count size mismatch");
    for (std::size_t m = 0; m < pop.theta.size(); ++m) {
        if (!(pop.theta[m] > 0.0)) throw std::invalid_argument("vehicle type theta must be > 0");
        if (!(pop.count[m] >= 0.0)) throw std::invalid_argument("vehicle type count must be >= 0");
        if (m > 0 && !(pop.theta[m] >= pop.theta[m - 1]))
            throw std::invalid_argument("vehicle types must be sorted by ascending theta");
    }
}

// Completion time if the task runs entirely on the user's own CPU.
inline double local_completion_time(const user_profile& u) {
    if (!(u.f_local > 0.0)) throw std::invalid_argument("f_local must be > 0");
    return u.cycles / u.f_local;
}

// Completion time if the task is offloaded and served with f GHz:
// upload delay plus remote execution.
inline double offload_completion_time(const user_profile& u, double f) {
    if (!(f > 0.0)) throw std::invalid_argument("offload rate f must be > 0");
    if (!(u.rate > 0.0)) throw std::invalid_argument("user.rate must be > 0");
    return u.data / u.rate + u.cycles / f;
}

// Delay-sensitivity weight: users with tighter deadlines value service more.
inline double tau(const market_params& mp, const user_profile& u) {
    if (!(u.t_max > 0.0)) throw std::invalid_argument("user.t_max must be > 0");
    return mp.big_c / u.t_max;
}

// Minimum offload rate at which offloading matches the local completion time.
// Users whose upload delay already exceeds their local completion time can
// never gain from offloading; for them the threshold does not exist.
inline std::optional<double> offload_threshold(const user_profile& u) {
    const double slack = local_completion_time(u) - u.data / u.rate;
    if (!(slack > 0.0)) return std::nullopt;
    return u.cycles / slack;
}

// User satisfaction net of the service fee. f = 0 means "not offloading".
inline double user_utility(const market_params& mp, const user_profile& u, double f, double p) {
    if (f < 0.0) throw std::invalid_argument("offload rate f must be >= 0");
    const double t = tau(mp, u);
    if (f == 0.0) return t * std::log(mp.delta);
    return t * std::log(f / u.f_local + mp.delta) - p * f;
}

// MEC server profit: service revenue minus own energy cost minus rental fee.
inline double mec_utility(const market_params& mp, double p, double served, double f_e,
                          double c, double f_rsu) {
    return p * served - mp.k_e() * f_e * f_e - c * f_rsu;
}

// Roadside unit profit: rental revenue minus expected contract payouts.
inline double rsu_utility(const vehicle_population& pop, const contract_menu& menu, double c,
                          double f_rsu) {
    if (menu.f.size() != pop.types() || menu.p.size() != pop.types())
        throw std::invalid_argument("contract menu size does not match population");
    double payout = 0.0;
    for (std::size_t m = 0; m < pop.types(); ++m)
        payout += pop.count[m] * pop.theta[m] * menu.p[m];
    return c * f_rsu - payout;
}

// Utility of one parked vehicle of stay type theta accepting item (f, p).
inline double vehicle_utility(const market_params& mp, double theta, double f, double p) {
    return theta * p - mp.k_v() * f * f;
}

// Physical energy drawn by the server compute, and its monetised cost.
inline double mec_energy(const market_params& mp, double f_e) { return mp.k * f_e * f_e; }
inline double mec_energy_cost(const market_params& mp, double f_e) {
    return mp.k_e() * f_e * f_e;
}

// 64-bit FNV-1a, used for scenario digests and rng stream derivation.
inline std::uint64_t fnv1a64(const void* data, std::size_t n) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    std::uint64_t h = 1469598103934665603ull;
    for (std::size_t i = 0; i < n; ++i) {
        h ^= bytes[i];
        h *= 1099511628211ull;
    }
    return h;
}

inline std::uint64_t fnv1a64(const std::string& s) { return fnv1a64(s.data(), s.size()); }

}  // namespace fogmarket
