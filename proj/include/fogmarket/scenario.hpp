// Scenario synthesis: parked-vehicle stay-time models, discretization of the
// continuous stay distribution into contract types, and seeded generation of
// user populations. A scenario is the full, self-contained input of one game.
#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "fogmarket/market.hpp"
#include "fogmarket/rng.hpp"

namespace fogmarket {

// Distribution of a vehicle's total parking duration, in hours.
struct stay_time_model {
    enum class kind { exponential, uniform, empirical };
    kind type = kind::exponential;
    double mean = 2.0;            // exponential mean
    double lo = 0.0, hi = 4.0;    // uniform support
    std::vector<double> values;   // empirical atoms, hours
    std::vector<double> weights;  // empirical atom weights, nonneg

    // Survival P(stay >= x). For the continuous families this equals 1 - F(x);
    // the closed inequality is what lets a histogram atom sitting exactly on a
    // bin edge land in the bin it opens instead of the one below.
    double survival(double x) const {
        if (x <= 0.0) return 1.0;
        switch (type) {
            case kind::exponential:
                if (!(mean > 0.0)) throw std::invalid_argument("exponential mean must be > 0");
                return std::exp(-x / mean);
            case kind::uniform:
                if (!(hi > lo)) throw std::invalid_argument("uniform support must be nonempty");
                if (x <= lo) return 1.0;
                if (x >= hi) return 0.0;
                return (hi - x) / (hi - lo);
            case kind::empirical: {
                if (values.empty() || values.size() != weights.size())
                    throw std::invalid_argument(
                        "empirical model needs matching, nonempty values/weights");
                double total = 0.0, above = 0.0;
                for (std::size_t i = 0; i < values.size(); ++i) {
                    if (!(weights[i] >= 0.0))
                        throw std::invalid_argument("empirical weights must be >= 0");
                    total += weights[i];
                    if (values[i] >= x) above += weights[i];
                }
                if (!(total > 0.0))
                    throw std::invalid_argument("empirical model needs positive total weight");
                return above / total;
            }
        }
        throw std::invalid_argument("unknown stay-time model");
    }
};

// Probability that a vehicle already parked for `elapsed` hours stays at
// least `ahead` more hours.
inline double continue_stay_probability(const stay_time_model& model, double elapsed,
                                        double ahead) {
    if (!(elapsed >= 0.0)) throw std::invalid_argument("elapsed stay must be >= 0");
    if (!(ahead >= 0.0)) throw std::invalid_argument("look-ahead must be >= 0");
    const double base = model.survival(elapsed);
    if (base <= 0.0)
        throw support_exhausted("stay-time model has no mass beyond the elapsed stay");
    return model.survival(elapsed + ahead) / base;
}

struct type_grid {
    std::vector<double> theta;  // hours, ascending: m * interval
    std::vector<double> prob;   // conditional type probabilities, sums to 1
};

// Split the conditional remaining-stay distribution into m_types buckets at
// multiples of `interval_minutes`. A vehicle of type m commits to theta[m]
// hours; the top bucket absorbs the tail. The masses are renormalized by the
// probability of staying at least one interval, so vehicles too short-lived
// to take any contract are excluded up front.
inline type_grid discretize_types(const stay_time_model& model, double elapsed, int m_types,
                                  double interval_minutes) {
    if (m_types < 1) throw std::invalid_argument("m_types must be >= 1");
    if (!(interval_minutes > 0.0)) throw std::invalid_argument("interval must be > 0");
    type_grid g;
    g.theta.resize(static_cast<std::size_t>(m_types));
    g.prob.resize(static_cast<std::size_t>(m_types));
    const double dt = interval_minutes / 60.0;
    for (int m = 1; m <= m_types; ++m)
        g.theta[static_cast<std::size_t>(m - 1)] = static_cast<double>(m) * dt;

    const double base = model.survival(elapsed + g.theta.front());
    if (base <= 0.0)
        throw support_exhausted("no vehicle survives the first contract interval");
    for (int m = 1; m <= m_types; ++m) {
        const double lo_s = model.survival(elapsed + g.theta[static_cast<std::size_t>(m - 1)]);
        const double hi_s = m == m_types
                                ? 0.0
                                : model.survival(elapsed + g.theta[static_cast<std::size_t>(m)]);
        g.prob[static_cast<std::size_t>(m - 1)] = (lo_s - hi_s) / base;
    }
    return g;
}

struct range {
    double lo = 0.0, hi = 1.0;
};

// Everything needed to synthesize one market instance.
struct scenario_config {
    int n_users = 100;
    int m_types = 10;
    double total_vehicles = 1000.0;       // expected vehicles in the lot
    double type_interval_minutes = 20.0;  // contract stay granularity
    double elapsed_stay = 0.0;            // hours already parked when recruited
    stay_time_model stay;
    range cycles = {0.5, 2.0};   // Gcycles
    range data = {0.2, 1.0};     // Mbit
    range rate = {2.0, 10.0};    // Mbit/s
    range t_max = {0.5, 2.0};    // seconds
    range f_local = {1.0, 1.0};  // GHz
    market_params params;
};

struct scenario {
    std::uint64_t seed = 0;
    market_params params;
    std::vector<user_profile> users;
    vehicle_population population;
};

inline void validate(const scenario_config& cfg) {
    validate(cfg.params);
    if (cfg.n_users < 1) throw std::invalid_argument("scenario needs at least one user");
    if (cfg.m_types < 1) throw std::invalid_argument("scenario needs at least one type");
    if (!(cfg.total_vehicles >= 0.0))
        throw std::invalid_argument("total_vehicles must be >= 0");
    for (const range* r : {&cfg.cycles, &cfg.data, &cfg.rate, &cfg.t_max, &cfg.f_local})
        if (!(r->lo <= r->hi) || !(r->lo > 0.0))
            throw std::invalid_argument("scenario ranges must be positive with lo <= hi");
}

// Draw one market instance. All draws come from the "scenario" substream of
// the seed, in a fixed field order, so the result is platform-independent.
inline scenario generate_scenario(const scenario_config& cfg, std::uint64_t seed) {
    validate(cfg);
    scenario sc;
    sc.seed = seed;
    sc.params = cfg.params;

    rng_stream stream(seed, "scenario");
    sc.users.reserve(static_cast<std::size_t>(cfg.n_users));
    for (int i = 0; i < cfg.n_users; ++i) {
        user_profile u;
        u.id = i;
        u.cycles = stream.uniform(cfg.cycles.lo, cfg.cycles.hi);
        u.data = stream.uniform(cfg.data.lo, cfg.data.hi);
        u.rate = stream.uniform(cfg.rate.lo, cfg.rate.hi);
        u.t_max = stream.uniform(cfg.t_max.lo, cfg.t_max.hi);
        u.f_local = stream.uniform(cfg.f_local.lo, cfg.f_local.hi);
        sc.users.push_back(u);
    }

    const type_grid g =
        discretize_types(cfg.stay, cfg.elapsed_stay, cfg.m_types, cfg.type_interval_minutes);
    sc.population.theta = g.theta;
    sc.population.count.resize(g.prob.size());
    for (std::size_t m = 0; m < g.prob.size(); ++m)
        sc.population.count[m] = g.prob[m] * cfg.total_vehicles;
    validate(sc.population);
    return sc;
}

}  // namespace fogmarket
