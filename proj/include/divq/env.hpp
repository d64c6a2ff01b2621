#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <utility>
#include <vector>

#include "divq/errors.hpp"
#include "divq/rng.hpp"
#include "divq/tensor.hpp"

namespace divq {

struct StepResult {
    std::vector<double> observation;
    double reward = 0.0;
    bool terminal = false;
};

// Stateful episodic MDP. reset() starts an episode; stepping a terminal
// environment is a contract violation.
class Environment {
public:
    virtual ~Environment() = default;
    virtual std::vector<double> reset() = 0;
    virtual StepResult step(int action) = 0;
    virtual int action_count() const = 0;
    virtual int observation_dim() const = 0;
    virtual bool terminal() const = 0;
    virtual long step_index() const = 0;
    // Fresh instance with the same configuration and a new RNG stream.
    virtual std::unique_ptr<Environment> fork(std::uint64_t seed) const = 0;
};

// Catch-the-fruit on a width-cell track. One fruit at a time falls from
// the top row; it lands when it reaches row 0, where it is caught iff the
// paddle is on its column (+1, else -1). The episode ends after
// fruit_budget fruits, or at the first miss when end_on_miss is set.
// A paddle moving 1 cell/step can always reach the landing column, so the
// optimal return equals fruit_budget.
class CatcherLite final : public Environment {
public:
    struct Config {
        int width = 10;
        int drop_height = 10;  // fruit spawns at row drop_height - 1
        int fruit_budget = 10;
        bool end_on_miss = false;
    };

    enum Action { kLeft = 0, kStay = 1, kRight = 2 };

    CatcherLite(Config cfg, std::uint64_t seed) : cfg_(cfg), seed_(seed), rng_(seed) {
        if (cfg_.width < 2 || cfg_.drop_height < 2 || cfg_.fruit_budget < 1)
            throw domain_error("catcher_lite: invalid configuration");
    }

    std::vector<double> reset() override {
        paddle_ = cfg_.width / 2;
        fruit_x_ = static_cast<int>(rng_.uniform_index(static_cast<std::size_t>(cfg_.width)));
        fruit_y_ = cfg_.drop_height - 1;
        fruits_done_ = 0;
        terminal_ = false;
        step_index_ = 0;
        return observation();
    }

    StepResult step(int action) override {
        if (terminal_) throw contract_error("catcher_lite: step on terminal state");
        if (action < 0 || action > 2) throw domain_error("catcher_lite: action out of range");
        ++step_index_;
        paddle_ = std::clamp(paddle_ + (action - 1), 0, cfg_.width - 1);
        fruit_y_ -= 1;
        double reward = 0.0;
        if (fruit_y_ == 0) {
            const bool caught = paddle_ == fruit_x_;
            reward = caught ? 1.0 : -1.0;
            ++fruits_done_;
            terminal_ = fruits_done_ >= cfg_.fruit_budget || (!caught && cfg_.end_on_miss);
            if (!terminal_) {
                fruit_x_ = static_cast<int>(
                    rng_.uniform_index(static_cast<std::size_t>(cfg_.width)));
                fruit_y_ = cfg_.drop_height - 1;
            }
        }
        return StepResult{observation(), reward, terminal_};
    }

    int action_count() const override { return 3; }
    int observation_dim() const override { return 3; }
    bool terminal() const override { return terminal_; }
    long step_index() const override { return step_index_; }

    std::unique_ptr<Environment> fork(std::uint64_t seed) const override {
        return std::make_unique<CatcherLite>(cfg_, seed);
    }

    int paddle_column() const { return paddle_; }
    int fruit_column() const { return fruit_x_; }
    int fruit_row() const { return fruit_y_; }

private:
    std::vector<double> observation() const {
        return {static_cast<double>(paddle_) / (cfg_.width - 1),
                static_cast<double>(fruit_x_) / (cfg_.width - 1),
                static_cast<double>(fruit_y_) / (cfg_.drop_height - 1)};
    }

    Config cfg_;
    std::uint64_t seed_;
    Rng rng_;
    int paddle_ = 0;
    int fruit_x_ = 0;
    int fruit_y_ = 0;
    int fruits_done_ = 0;
    bool terminal_ = true;
    long step_index_ = 0;
};

// Two-state maximization-bias diagnostic. From the start state, action 0
// terminates with reward 0 and every other action moves to the noisy
// state with reward 0; from there any action terminates with
// Normal(mu, sigma) reward. The optimal policy takes action 0 immediately,
// so the true start-state value is 0.
class MaxbiasChain final : public Environment {
public:
    struct Config {
        int noisy_actions = 8;
        double mu = -0.1;
        double sigma = 1.0;
    };

    MaxbiasChain(Config cfg, std::uint64_t seed) : cfg_(cfg), rng_(seed) {
        if (cfg_.noisy_actions < 2) throw domain_error("maxbias_chain: need >= 2 actions");
    }

    std::vector<double> reset() override {
        at_start_ = true;
        terminal_ = false;
        step_index_ = 0;
        return observation();
    }

    StepResult step(int action) override {
        if (terminal_) throw contract_error("maxbias_chain: step on terminal state");
        if (action < 0 || action >= cfg_.noisy_actions)
            throw domain_error("maxbias_chain: action out of range");
        ++step_index_;
        if (at_start_) {
            if (action == 0) {
                terminal_ = true;
                return StepResult{observation(), 0.0, true};
            }
            at_start_ = false;
            return StepResult{observation(), 0.0, false};
        }
        terminal_ = true;
        return StepResult{observation(), rng_.normal(cfg_.mu, cfg_.sigma), true};
    }

    int action_count() const override { return cfg_.noisy_actions; }
    int observation_dim() const override { return 2; }
    bool terminal() const override { return terminal_; }
    long step_index() const override { return step_index_; }

    std::unique_ptr<Environment> fork(std::uint64_t seed) const override {
        return std::make_unique<MaxbiasChain>(cfg_, seed);
    }

    bool at_start() const { return at_start_; }

    static std::vector<double> start_observation() { return {1.0, 0.0}; }

private:
    std::vector<double> observation() const {
        return at_start_ ? std::vector<double>{1.0, 0.0} : std::vector<double>{0.0, 1.0};
    }

    Config cfg_;
    Rng rng_;
    bool at_start_ = true;
    bool terminal_ = true;
    long step_index_ = 0;
};

// n points x ~ U[-2pi, 2pi] with targets sin(x), as (n x 1) tensors.
inline std::pair<Tensor, Tensor> sine_dataset(std::size_t n, std::uint64_t seed) {
    if (n < 2) throw domain_error("sine_dataset: n must be >= 2");
    Rng rng(seed);
    Tensor x({n, 1});
    Tensor y({n, 1});
    constexpr double kTwoPi = 6.283185307179586476925286766559;
    for (std::size_t i = 0; i < n; ++i) {
        x[i] = rng.uniform(-kTwoPi, kTwoPi);
        y[i] = std::sin(x[i]);
    }
    return {std::move(x), std::move(y)};
}

}  // namespace divq
