#include <catch2/catch_amalgamated.hpp>

#include <thread>
#include <vector>

#include "divq/agent.hpp"
#include "divq/env.hpp"
#include "divq/harness.hpp"

using namespace divq;

// Calibration reference for the desk-scale experiments: a plain DQN must
// reliably learn catcher_lite within the default budget.
TEST_CASE("dqn reaches at least 8 of 10 on catcher_lite over 5 seeds") {
    const std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
    std::vector<double> finals(seeds.size(), 0.0);

    auto run_seed = [&](std::size_t k) {
        AgentConfig cfg;
        cfg.algorithm = Algorithm::dqn;
        cfg.ensemble_size = 1;
        CatcherLite env({}, derive_seed(seeds[k], 101));
        EnsembleAgent agent(cfg, env.observation_dim(), env.action_count(), seeds[k]);
        const TrainingRecord record = agent.train(env, 200000, 10000);
        finals[k] = final_window_mean(record, 5);
    };

    std::vector<std::thread> pool;
    for (std::size_t k = 0; k < seeds.size(); ++k) pool.emplace_back(run_seed, k);
    for (auto& t : pool) t.join();

    double mean = 0.0;
    for (double f : finals) mean += f;
    mean /= static_cast<double>(finals.size());
    INFO("per-seed final-window returns: " << finals[0] << " " << finals[1] << " "
                                           << finals[2] << " " << finals[3] << " "
                                           << finals[4]);
    CHECK(mean >= 8.0);
}
