#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "divq/autodiff.hpp"
#include "divq/env.hpp"
#include "divq/errors.hpp"
#include "divq/inequality.hpp"
#include "divq/nn.hpp"
#include "divq/optim.hpp"
#include "divq/replay.hpp"
#include "divq/rng.hpp"

namespace divq {

enum class Algorithm { dqn, ddqn, ensemble, maxmin };
enum class SeedPolicy { independent, identical_layers };
enum class OptimKind { sgd, adam };

inline const char* to_string(Algorithm a) {
    switch (a) {
        case Algorithm::dqn: return "dqn";
        case Algorithm::ddqn: return "ddqn";
        case Algorithm::ensemble: return "ensemble";
        case Algorithm::maxmin: return "maxmin";
    }
    return "dqn";
}

inline Algorithm algorithm_from_string(const std::string& s) {
    if (s == "dqn") return Algorithm::dqn;
    if (s == "ddqn") return Algorithm::ddqn;
    if (s == "ensemble") return Algorithm::ensemble;
    if (s == "maxmin") return Algorithm::maxmin;
    throw domain_error("unknown algorithm: " + s);
}

inline const char* to_string(SeedPolicy p) {
    return p == SeedPolicy::independent ? "independent" : "identical_layers";
}

inline SeedPolicy seed_policy_from_string(const std::string& s) {
    if (s == "independent") return SeedPolicy::independent;
    if (s == "identical_layers") return SeedPolicy::identical_layers;
    throw domain_error("unknown seed policy: " + s);
}

inline const char* to_string(OptimKind k) { return k == OptimKind::sgd ? "sgd" : "adam"; }

inline OptimKind optim_from_string(const std::string& s) {
    if (s == "sgd") return OptimKind::sgd;
    if (s == "adam") return OptimKind::adam;
    throw domain_error("unknown optimizer: " + s);
}

struct AgentConfig {
    Algorithm algorithm = Algorithm::maxmin;
    int ensemble_size = 2;
    double gamma = 0.99;
    double eps_start = 1.0;
    double eps_end = 0.01;
    long eps_decay_steps = 0;  // 0: first 10% of total steps
    double lambda = 0.0;
    Regularizer regularizer = Regularizer::none;
    double atkinson_eps = 0.5;
    bool atkinson_paper_eps1 = false;
    bool unsquared_norms = false;  // ablation: l_i = ||psi_i|| instead of ||psi_i||^2
    double learning_rate = 1e-4;
    OptimKind optimizer = OptimKind::adam;
    int batch_size = 32;
    std::size_t buffer_capacity = 10000;
    long exploration_steps = 1000;
    double grad_clip = 5.0;  // global grad norm; -1 disables
    long target_sync = 200;  // updates between target refreshes
    int eval_episodes = 10;
    std::vector<int> hidden = {64, 64};
    SeedPolicy seed_policy = SeedPolicy::independent;

    void validate() const {
        if (ensemble_size < 1) throw domain_error("agent: ensemble_size must be >= 1");
        if ((algorithm == Algorithm::dqn || algorithm == Algorithm::ddqn) && ensemble_size != 1)
            throw domain_error("agent: dqn/ddqn require ensemble_size = 1");
        if (gamma < 0.0 || gamma > 1.0) throw domain_error("agent: gamma must be in [0, 1]");
        if (lambda < 0.0) throw domain_error("agent: lambda must be >= 0");
        if (eps_start < 0.0 || eps_start > 1.0 || eps_end < 0.0 || eps_end > 1.0)
            throw domain_error("agent: epsilon bounds must be in [0, 1]");
        if (batch_size < 1) throw domain_error("agent: batch_size must be >= 1");
        if (atkinson_eps < 0.0) throw domain_error("agent: atkinson_eps must be >= 0");
        if (learning_rate <= 0.0) throw domain_error("agent: learning rate must be > 0");
        if (target_sync < 1) throw domain_error("agent: target_sync must be >= 1");
        if (eval_episodes < 1) throw domain_error("agent: eval_episodes must be >= 1");
    }
};

// Elementwise minimum over member Q-value vectors.
inline std::vector<double> q_min(const std::vector<std::vector<double>>& members) {
    if (members.empty()) throw domain_error("q_min: empty ensemble");
    std::vector<double> out = members[0];
    for (std::size_t i = 1; i < members.size(); ++i) {
        if (members[i].size() != out.size()) throw shape_error("q_min: ragged member outputs");
        for (std::size_t a = 0; a < out.size(); ++a) out[a] = std::min(out[a], members[i][a]);
    }
    return out;
}

// Elementwise mean over member Q-value vectors.
inline std::vector<double> q_ens(const std::vector<std::vector<double>>& members) {
    if (members.empty()) throw domain_error("q_ens: empty ensemble");
    std::vector<double> out(members[0].size(), 0.0);
    for (const auto& m : members) {
        if (m.size() != out.size()) throw shape_error("q_ens: ragged member outputs");
        for (std::size_t a = 0; a < out.size(); ++a) out[a] += m[a];
    }
    for (double& v : out) v /= static_cast<double>(members.size());
    return out;
}

// Argmax with ties broken toward the lowest index.
inline int argmax_lowest(std::span<const double> values) {
    if (values.empty()) throw domain_error("argmax of empty vector");
    int best = 0;
    for (int i = 1; i < static_cast<int>(values.size()); ++i)
        if (values[i] > values[best]) best = i;
    return best;
}

struct EvalPoint {
    long step = 0;
    double return_mean = 0.0;
    double return_std = 0.0;
    double loss = 0.0;
    double reg_value = 0.0;
    std::vector<double> norms;  // l_1 .. l_N at this point
};

using TrainingRecord = std::vector<EvalPoint>;

// Value of the configured measure for logging at evaluation points.
// MeanVector depends on the member index, so its log value is averaged
// over members; the four symmetric measures ignore the index.
inline double logged_inequality(Regularizer kind, std::span<const double> l,
                                const InequalityOptions& opt) {
    if (kind == Regularizer::none) return 0.0;
    if (kind == Regularizer::meanvector) {
        double s = 0.0;
        for (std::size_t i = 0; i < l.size(); ++i) s += inequality_value(kind, l, i, opt);
        return s / static_cast<double>(l.size());
    }
    return inequality_value(kind, l, 0, opt);
}

// DQN-family learner over an ensemble of MLP Q-functions, with the
// inequality measures wired into the per-member loss as
//   mean((Q_i(s,a) - Y)^2) - lambda * I(l_i, l).
class EnsembleAgent {
public:
    EnsembleAgent(AgentConfig cfg, int observation_dim, int n_actions, std::uint64_t seed)
        : cfg_(std::move(cfg)),
          obs_dim_(observation_dim),
          n_actions_(n_actions),
          seed_(seed),
          rng_(derive_seed(seed, 1)),
          buffer_(cfg_.buffer_capacity, derive_seed(seed, 2)) {
        cfg_.validate();
        if (observation_dim < 1 || n_actions < 1)
            throw domain_error("agent: bad environment dimensions");
        const std::uint64_t shared_layer_seed = derive_seed(seed, 3);
        for (int i = 0; i < cfg_.ensemble_size; ++i) {
            Mlp net(static_cast<std::size_t>(obs_dim_), cfg_.hidden,
                    static_cast<std::size_t>(n_actions_));
            std::vector<std::uint64_t> layer_seeds(net.layer_count());
            for (std::size_t l = 0; l < layer_seeds.size(); ++l) {
                layer_seeds[l] = cfg_.seed_policy == SeedPolicy::identical_layers
                                     ? shared_layer_seed
                                     : derive_seed(seed, 16 + 64 * i + l);
            }
            net.init(layer_seeds);
            online_.push_back(net);
            target_.push_back(net);  // targets start as exact copies
            optimizers_.emplace_back(AdamConfig{cfg_.learning_rate});
        }
    }

    const AgentConfig& config() const { return cfg_; }
    int member_count() const { return cfg_.ensemble_size; }
    int action_count() const { return n_actions_; }
    int observation_dim() const { return obs_dim_; }
    std::uint64_t seed() const { return seed_; }
    long updates_done() const { return updates_; }

    const Mlp& member(int i) const { return online_[i]; }
    Mlp& member(int i) { return online_[i]; }
    const Mlp& target_member(int i) const { return target_[i]; }
    const ReplayBuffer& replay() const { return buffer_; }
    ReplayBuffer& replay() { return buffer_; }

    InequalityOptions inequality_options() const {
        return InequalityOptions{cfg_.atkinson_eps, cfg_.atkinson_paper_eps1};
    }

    // Current norm list l (squared L2 by default).
    std::vector<double> norm_list() const {
        std::vector<double> l;
        l.reserve(online_.size());
        for (const Mlp& net : online_) {
            const double sq = net.squared_param_norm();
            l.push_back(cfg_.unsquared_norms ? std::sqrt(sq) : sq);
        }
        return l;
    }

    std::vector<std::vector<double>> member_values(const std::vector<double>& obs) const {
        std::vector<std::vector<double>> out;
        out.reserve(online_.size());
        for (const Mlp& net : online_) out.push_back(net.evaluate(obs));
        return out;
    }

    // The algorithm's action-selection proxy over the online networks.
    std::vector<double> proxy_values(const std::vector<double>& obs) const {
        switch (cfg_.algorithm) {
            case Algorithm::dqn:
            case Algorithm::ddqn: return online_[0].evaluate(obs);
            case Algorithm::ensemble: return q_ens(member_values(obs));
            case Algorithm::maxmin: return q_min(member_values(obs));
        }
        return online_[0].evaluate(obs);
    }

    int greedy_action(const std::vector<double>& obs) const {
        return argmax_lowest(proxy_values(obs));
    }

    int select_action(const std::vector<double>& obs, double eps) {
        if (eps < 0.0 || eps > 1.0) throw domain_error("select_action: eps must be in [0, 1]");
        if (rng_.uniform() < eps)
            return static_cast<int>(rng_.uniform_index(static_cast<std::size_t>(n_actions_)));
        return greedy_action(obs);
    }

    double epsilon_at(long step, long total_steps) const {
        const long decay = cfg_.eps_decay_steps > 0
                               ? cfg_.eps_decay_steps
                               : std::max<long>(1, total_steps / 10);
        const double frac = std::min(1.0, static_cast<double>(step) / static_cast<double>(decay));
        return cfg_.eps_start + frac * (cfg_.eps_end - cfg_.eps_start);
    }

    // Bootstrap targets from the target copies; no gradient flows here.
    std::vector<double> compute_targets(const std::vector<Transition>& batch) const {
        if (batch.empty()) throw domain_error("compute_targets: empty batch");
        const std::size_t b = batch.size();
        Tensor next({b, static_cast<std::size_t>(obs_dim_)});
        for (std::size_t r = 0; r < b; ++r)
            for (int c = 0; c < obs_dim_; ++c) next.at(r, c) = batch[r].s_next[c];

        std::vector<double> bootstrap(b, 0.0);
        const std::size_t a_count = static_cast<std::size_t>(n_actions_);
        if (cfg_.algorithm == Algorithm::ddqn) {
            const Tensor q_online = online_[0].forward(next);
            const Tensor q_target = target_[0].forward(next);
            for (std::size_t r = 0; r < b; ++r) {
                std::span<const double> row(q_online.data().data() + r * a_count, a_count);
                bootstrap[r] = q_target.at(r, argmax_lowest(row));
            }
        } else {
            // proxy = single / mean / min over target members, then max_a
            std::vector<Tensor> outs;
            outs.reserve(target_.size());
            for (const Mlp& net : target_) outs.push_back(net.forward(next));
            for (std::size_t r = 0; r < b; ++r) {
                double best = -std::numeric_limits<double>::infinity();
                for (std::size_t a = 0; a < a_count; ++a) {
                    double v = 0.0;
                    if (cfg_.algorithm == Algorithm::ensemble) {
                        for (const Tensor& o : outs) v += o.at(r, a);
                        v /= static_cast<double>(outs.size());
                    } else if (cfg_.algorithm == Algorithm::maxmin) {
                        v = outs[0].at(r, a);
                        for (std::size_t k = 1; k < outs.size(); ++k)
                            v = std::min(v, outs[k].at(r, a));
                    } else {
                        v = outs[0].at(r, a);
                    }
                    best = std::max(best, v);
                }
                bootstrap[r] = best;
            }
        }

        std::vector<double> y(b);
        for (std::size_t r = 0; r < b; ++r)
            y[r] = batch[r].done ? batch[r].r : batch[r].r + cfg_.gamma * bootstrap[r];
        return y;
    }

    // Builds the member-i loss on a fresh tape:
    //   mean((Q_i(s,a) - Y)^2) - lambda * I(l_i, l)
    // with l recomputed from the current online parameters. With
    // with_backward the member's grad buffers receive d(loss)/d(psi_i);
    // without it this is a pure evaluation (used by gradient checks).
    double member_loss(int i, const std::vector<Transition>& batch, bool with_backward) {
        if (i < 0 || i >= cfg_.ensemble_size) throw domain_error("member_loss: bad index");
        const std::vector<double> y = compute_targets(batch);

        const std::size_t b = batch.size();
        Tensor states({b, static_cast<std::size_t>(obs_dim_)});
        std::vector<std::size_t> actions(b);
        for (std::size_t r = 0; r < b; ++r) {
            for (int c = 0; c < obs_dim_; ++c) states.at(r, c) = batch[r].s[c];
            actions[r] = static_cast<std::size_t>(batch[r].a);
        }

        Tape tape;
        std::vector<Tape::Var> pvars;
        const Tape::Var x = tape.constant(std::move(states));
        const Tape::Var q_all = online_[i].forward_tape(tape, x, &pvars);
        const Tape::Var q_sa = tape.pick(q_all, std::move(actions));
        const Tape::Var target = tape.constant(Tensor({b}, y));
        const Tape::Var td = tape.mean(tape.square(tape.sub(q_sa, target)));

        Tape::Var loss = td;
        last_reg_value_ = 0.0;
        if (cfg_.regularizer != Regularizer::none) {
            Tape::Var norm_node = tape.squared_l2(pvars);
            if (cfg_.unsquared_norms) {
                const double sq = std::max(tape.value(norm_node)[0], ineq::kNormFloor);
                const double root = std::sqrt(sq);
                norm_node = tape.chain_scalar(norm_node, root, 0.5 / root);
            }
            std::vector<double> l = norm_list();
            l[static_cast<std::size_t>(i)] = tape.value(norm_node)[0];
            const InequalityOptions opt = inequality_options();
            const double value = inequality_value(cfg_.regularizer, l, i, opt);
            const double dvalue = inequality_grad(cfg_.regularizer, l, i, opt);
            const Tape::Var reg = tape.chain_scalar(norm_node, value, dvalue);
            loss = tape.add_scaled(td, reg, -cfg_.lambda);
            last_reg_value_ = value;
        }
        if (with_backward) tape.backward(loss);
        return tape.value(loss)[0];
    }

    // One optimizer step on member i; other members stay untouched.
    double update_member(int i, const std::vector<Transition>& batch) {
        std::vector<Tensor*> params = online_[i].params();
        zero_grads(params);
        last_loss_ = member_loss(i, batch, true);
        if (cfg_.grad_clip > 0.0) clip_grad_norm(params, cfg_.grad_clip);
        if (cfg_.optimizer == OptimKind::adam) {
            optimizers_[i].step(params);
        } else {
            sgd_step(params, cfg_.learning_rate);
        }
        for (const Tensor* p : params)
            if (!p->all_finite())
                throw numeric_error("update_member: non-finite parameter after step");
        return last_loss_;
    }

    void sync_targets() {
        for (std::size_t i = 0; i < online_.size(); ++i)
            target_[i].copy_parameters_from(online_[i]);
    }

    double play_greedy_episode(Environment& env) const {
        std::vector<double> obs = env.reset();
        double ret = 0.0;
        while (true) {
            const StepResult res = env.step(greedy_action(obs));
            ret += res.reward;
            if (res.terminal) break;
            obs = res.observation;
        }
        return ret;
    }

    EvalPoint evaluate(Environment& eval_env, long step) const {
        std::vector<double> returns;
        returns.reserve(cfg_.eval_episodes);
        for (int e = 0; e < cfg_.eval_episodes; ++e)
            returns.push_back(play_greedy_episode(eval_env));
        double mean = 0.0;
        for (double r : returns) mean += r;
        mean /= returns.size();
        double var = 0.0;
        for (double r : returns) var += (r - mean) * (r - mean);
        EvalPoint pt;
        pt.step = step;
        pt.return_mean = mean;
        pt.return_std = std::sqrt(var / returns.size());
        pt.loss = last_loss_;
        pt.norms = norm_list();
        pt.reg_value = logged_inequality(cfg_.regularizer, pt.norms, inequality_options());
        return pt;
    }

    using CheckpointHook = std::function<void(long step, const EnsembleAgent&)>;

    // Interaction loop: act, store, update one uniformly chosen member per
    // step once past the pure-exploration phase, refresh targets every
    // target_sync updates, and evaluate greedily every eval_every steps.
    TrainingRecord train(Environment& env, long total_steps, long eval_every,
                         const CheckpointHook& hook = {}, long hook_every = 0) {
        if (eval_every < 1) throw domain_error("train: eval_every must be >= 1");
        TrainingRecord record;
        if (total_steps <= 0) return record;

        std::vector<double> obs = env.reset();
        for (long step = 1; step <= total_steps; ++step) {
            int action;
            if (step <= cfg_.exploration_steps) {
                action = static_cast<int>(
                    rng_.uniform_index(static_cast<std::size_t>(n_actions_)));
            } else {
                action = select_action(obs, epsilon_at(step, total_steps));
            }
            const StepResult res = env.step(action);
            buffer_.push(Transition{obs, action, res.reward, res.observation, res.terminal});
            obs = res.terminal ? env.reset() : res.observation;

            if (step > cfg_.exploration_steps &&
                buffer_.size() >= static_cast<std::size_t>(cfg_.batch_size)) {
                const int i = static_cast<int>(
                    rng_.uniform_index(static_cast<std::size_t>(cfg_.ensemble_size)));
                update_member(i, buffer_.sample(static_cast<std::size_t>(cfg_.batch_size)));
                ++updates_;
                if (updates_ % cfg_.target_sync == 0) sync_targets();
            }

            if (step % eval_every == 0) {
                auto eval_env = env.fork(derive_seed(seed_, 4096 + static_cast<std::uint64_t>(
                                                                      record.size())));
                record.push_back(evaluate(*eval_env, step));
            }
            if (hook && hook_every > 0 && step % hook_every == 0) hook(step, *this);
        }
        return record;
    }

private:
    AgentConfig cfg_;
    int obs_dim_;
    int n_actions_;
    std::uint64_t seed_;
    Rng rng_;
    ReplayBuffer buffer_;
    std::vector<Mlp> online_;
    std::vector<Mlp> target_;
    std::vector<Adam> optimizers_;
    long updates_ = 0;
    double last_loss_ = 0.0;
    double last_reg_value_ = 0.0;
};

}  // namespace divq
