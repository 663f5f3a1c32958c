// Minimal end-to-end walkthrough: build a three-user market by hand, solve
// the full game, and print every stage's decision.
#include <cstdio>

#include "fogmarket/fogmarket.hpp"

int main() {
    using namespace fogmarket;

    market_params mp;
    mp.k = 0.01;
    mp.energy_a = 60.0;

    std::vector<user_profile> users = {
        {0, 1.2, 0.3, 12.0, 1.0, 0.6},
        {1, 0.8, 0.4, 15.0, 1.0, 1.1},
        {2, 1.6, 0.25, 10.0, 1.0, 1.7},
    };

    vehicle_population pop;
    pop.theta = {1.0 / 3.0, 2.0 / 3.0, 1.0};
    pop.count = {40.0, 25.0, 15.0};

    scenario sc;
    sc.params = mp;
    sc.users = users;
    sc.population = pop;

    const equilibrium_report rep = solve_game(sc);

    std::printf("rental price c* = %.6f (converged: %s, %d iterations)\n", rep.c_star,
                rep.converged ? "yes" : "no", rep.iterations);
    std::printf("contract menu (per type):\n");
    for (std::size_t m = 0; m < pop.types(); ++m)
        std::printf("  theta %.3f h: f = %.4f GHz, reward rate = %.6f (utility %.6f)\n",
                    pop.theta[m], rep.menu.f[m], rep.menu.p[m], rep.type_utilities[m]);
    std::printf("server: price p* = %.6f, own compute %.4f GHz, rented %.4f GHz\n",
                rep.stage2.p, rep.stage2.f_e, rep.stage2.f_rsu);
    std::printf("served users: %d of %zu\n", rep.offload_count, users.size());
    for (std::size_t i = 0; i < rep.market.size(); ++i)
        std::printf("  user %d: %s f = %.4f GHz, utility %.4f\n", rep.market.users[i].id,
                    rep.responses[i].chi ? "offloads" : "stays local", rep.responses[i].f,
                    rep.responses[i].utility);
    std::printf("profits: roadside unit %.6f, server %.6f, users %.6f\n",
                rep.rsu_utility_value, rep.mec_utility_value, rep.user_utility_sum);
    return 0;
}
