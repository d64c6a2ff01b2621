#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <memory>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "divq/agent.hpp"
#include "divq/config.hpp"
#include "divq/csv.hpp"
#include "divq/env.hpp"
#include "divq/errors.hpp"
#include "divq/inequality.hpp"
#include "divq/similarity.hpp"

namespace divq {

struct ExperimentConfig {
    std::string environment = "catcher_lite";
    std::vector<Algorithm> algorithms = {Algorithm::maxmin};
    std::vector<Regularizer> regularizers = {
        Regularizer::none,       Regularizer::atkinson, Regularizer::gini,
        Regularizer::meanvector, Regularizer::theil,    Regularizer::vol};
    std::vector<double> lambda_sweep = {1e-5, 1e-6, 1e-7, 1e-8};
    std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
    long total_steps = 200000;
    long eval_every = 5000;
    int final_window = 5;  // eval points in the scoring window
    int jobs = 0;          // 0: hardware concurrency
    std::string out_dir = "results";

    AgentConfig agent;
    CatcherLite::Config catcher;
    MaxbiasChain::Config chain;

    void validate() const {
        if (seeds.empty()) throw domain_error("experiment: seeds must be non-empty");
        if (total_steps <= 0) throw domain_error("experiment: total_steps must be > 0");
        if (eval_every <= 0) throw domain_error("experiment: eval_every must be > 0");
        if (final_window < 1) throw domain_error("experiment: final_window must be >= 1");
        if (algorithms.empty()) throw domain_error("experiment: algorithms must be non-empty");
        if (regularizers.empty()) throw domain_error("experiment: regularizers non-empty");
        agent.validate();
    }

    static ExperimentConfig from_map(const KeyValues& kv);
    KeyValues to_map() const;
};

inline std::unique_ptr<Environment> make_env(const ExperimentConfig& cfg, std::uint64_t seed) {
    if (cfg.environment == "catcher_lite")
        return std::make_unique<CatcherLite>(cfg.catcher, seed);
    if (cfg.environment == "maxbias_chain")
        return std::make_unique<MaxbiasChain>(cfg.chain, seed);
    throw domain_error("unknown environment: " + cfg.environment);
}

// --- config <-> key/value map ---

inline ExperimentConfig ExperimentConfig::from_map(const KeyValues& kv) {
    ExperimentConfig c;
    c.environment = config_get(kv, "experiment.environment", c.environment);
    if (auto toks = config_get_list(kv, "experiment.algorithms"); !toks.empty()) {
        c.algorithms.clear();
        for (const auto& t : toks) c.algorithms.push_back(algorithm_from_string(t));
    }
    if (auto toks = config_get_list(kv, "experiment.regularizers"); !toks.empty()) {
        c.regularizers.clear();
        for (const auto& t : toks) c.regularizers.push_back(regularizer_from_string(t));
    }
    if (auto toks = config_get_list(kv, "experiment.lambda_sweep"); !toks.empty()) {
        c.lambda_sweep.clear();
        for (const auto& t : toks) c.lambda_sweep.push_back(csv_double(t, "lambda_sweep"));
    }
    if (auto toks = config_get_list(kv, "experiment.seeds"); !toks.empty()) {
        c.seeds.clear();
        for (const auto& t : toks)
            c.seeds.push_back(static_cast<std::uint64_t>(std::stoull(t)));
    }
    c.total_steps = config_get_long(kv, "experiment.total_steps", c.total_steps);
    c.eval_every = config_get_long(kv, "experiment.eval_every", c.eval_every);
    c.final_window = static_cast<int>(config_get_long(kv, "experiment.final_window",
                                                      c.final_window));
    c.jobs = static_cast<int>(config_get_long(kv, "experiment.jobs", c.jobs));
    c.out_dir = config_get(kv, "experiment.out", c.out_dir);

    AgentConfig& a = c.agent;
    a.algorithm = algorithm_from_string(config_get(kv, "agent.algorithm", to_string(a.algorithm)));
    a.ensemble_size = static_cast<int>(config_get_long(kv, "agent.ensemble_size",
                                                       a.ensemble_size));
    a.gamma = config_get_double(kv, "agent.gamma", a.gamma);
    a.eps_start = config_get_double(kv, "agent.eps_start", a.eps_start);
    a.eps_end = config_get_double(kv, "agent.eps_end", a.eps_end);
    a.eps_decay_steps = config_get_long(kv, "agent.eps_decay_steps", a.eps_decay_steps);
    a.lambda = config_get_double(kv, "agent.lambda", a.lambda);
    a.regularizer =
        regularizer_from_string(config_get(kv, "agent.regularizer", to_string(a.regularizer)));
    a.atkinson_eps = config_get_double(kv, "agent.atkinson_epsilon", a.atkinson_eps);
    a.atkinson_paper_eps1 =
        config_get_bool(kv, "agent.atkinson_paper_eps1", a.atkinson_paper_eps1);
    a.unsquared_norms = config_get_bool(kv, "agent.unsquared_norms", a.unsquared_norms);
    a.learning_rate = config_get_double(kv, "agent.learning_rate", a.learning_rate);
    a.optimizer = optim_from_string(config_get(kv, "agent.optimizer", to_string(a.optimizer)));
    a.batch_size = static_cast<int>(config_get_long(kv, "agent.batch_size", a.batch_size));
    a.buffer_capacity = static_cast<std::size_t>(
        config_get_long(kv, "agent.buffer_capacity", static_cast<long>(a.buffer_capacity)));
    a.exploration_steps = config_get_long(kv, "agent.exploration_steps", a.exploration_steps);
    a.grad_clip = config_get_double(kv, "agent.grad_clip", a.grad_clip);
    a.target_sync = config_get_long(kv, "agent.target_sync", a.target_sync);
    a.eval_episodes = static_cast<int>(config_get_long(kv, "agent.eval_episodes",
                                                       a.eval_episodes));
    if (auto toks = config_get_list(kv, "agent.hidden"); !toks.empty()) {
        a.hidden.clear();
        for (const auto& t : toks) a.hidden.push_back(static_cast<int>(std::stol(t)));
    }
    a.seed_policy =
        seed_policy_from_string(config_get(kv, "agent.seed_policy", to_string(a.seed_policy)));

    c.catcher.width = static_cast<int>(config_get_long(kv, "env.width", c.catcher.width));
    c.catcher.drop_height =
        static_cast<int>(config_get_long(kv, "env.drop_height", c.catcher.drop_height));
    c.catcher.fruit_budget =
        static_cast<int>(config_get_long(kv, "env.fruit_budget", c.catcher.fruit_budget));
    c.catcher.end_on_miss = config_get_bool(kv, "env.end_on_miss", c.catcher.end_on_miss);
    c.chain.noisy_actions =
        static_cast<int>(config_get_long(kv, "env.chain_actions", c.chain.noisy_actions));
    c.chain.mu = config_get_double(kv, "env.chain_mu", c.chain.mu);
    c.chain.sigma = config_get_double(kv, "env.chain_sigma", c.chain.sigma);
    c.validate();
    return c;
}

inline KeyValues ExperimentConfig::to_map() const {
    KeyValues kv;
    auto join = [](const std::vector<std::string>& toks) {
        std::string s;
        for (std::size_t i = 0; i < toks.size(); ++i) {
            if (i) s += " ";
            s += toks[i];
        }
        return s;
    };
    kv["experiment.environment"] = environment;
    {
        std::vector<std::string> toks;
        for (auto x : algorithms) toks.push_back(to_string(x));
        kv["experiment.algorithms"] = join(toks);
    }
    {
        std::vector<std::string> toks;
        for (auto x : regularizers) toks.push_back(to_string(x));
        kv["experiment.regularizers"] = join(toks);
    }
    {
        std::vector<std::string> toks;
        for (double x : lambda_sweep) toks.push_back(format_double(x));
        kv["experiment.lambda_sweep"] = join(toks);
    }
    {
        std::vector<std::string> toks;
        for (auto x : seeds) toks.push_back(std::to_string(x));
        kv["experiment.seeds"] = join(toks);
    }
    kv["experiment.total_steps"] = std::to_string(total_steps);
    kv["experiment.eval_every"] = std::to_string(eval_every);
    kv["experiment.final_window"] = std::to_string(final_window);
    kv["experiment.jobs"] = std::to_string(jobs);
    kv["experiment.out"] = out_dir;

    kv["agent.algorithm"] = to_string(agent.algorithm);
    kv["agent.ensemble_size"] = std::to_string(agent.ensemble_size);
    kv["agent.gamma"] = format_double(agent.gamma);
    kv["agent.eps_start"] = format_double(agent.eps_start);
    kv["agent.eps_end"] = format_double(agent.eps_end);
    kv["agent.eps_decay_steps"] = std::to_string(agent.eps_decay_steps);
    kv["agent.lambda"] = format_double(agent.lambda);
    kv["agent.regularizer"] = to_string(agent.regularizer);
    kv["agent.atkinson_epsilon"] = format_double(agent.atkinson_eps);
    kv["agent.atkinson_paper_eps1"] = agent.atkinson_paper_eps1 ? "true" : "false";
    kv["agent.unsquared_norms"] = agent.unsquared_norms ? "true" : "false";
    kv["agent.learning_rate"] = format_double(agent.learning_rate);
    kv["agent.optimizer"] = to_string(agent.optimizer);
    kv["agent.batch_size"] = std::to_string(agent.batch_size);
    kv["agent.buffer_capacity"] = std::to_string(agent.buffer_capacity);
    kv["agent.exploration_steps"] = std::to_string(agent.exploration_steps);
    kv["agent.grad_clip"] = format_double(agent.grad_clip);
    kv["agent.target_sync"] = std::to_string(agent.target_sync);
    kv["agent.eval_episodes"] = std::to_string(agent.eval_episodes);
    {
        std::vector<std::string> toks;
        for (int h : agent.hidden) toks.push_back(std::to_string(h));
        kv["agent.hidden"] = join(toks);
    }
    kv["agent.seed_policy"] = to_string(agent.seed_policy);

    kv["env.width"] = std::to_string(catcher.width);
    kv["env.drop_height"] = std::to_string(catcher.drop_height);
    kv["env.fruit_budget"] = std::to_string(catcher.fruit_budget);
    kv["env.end_on_miss"] = catcher.end_on_miss ? "true" : "false";
    kv["env.chain_actions"] = std::to_string(chain.noisy_actions);
    kv["env.chain_mu"] = format_double(chain.mu);
    kv["env.chain_sigma"] = format_double(chain.sigma);
    return kv;
}

// --- record serialization ---

inline void write_training_csv(const std::string& path, const TrainingRecord& record,
                               int ensemble_size) {
    CsvWriter w(path);
    std::vector<std::string> header = {"step", "return_mean", "return_std", "loss",
                                       "reg_value"};
    for (int i = 1; i <= ensemble_size; ++i) header.push_back("l2_norm_" + std::to_string(i));
    w.row(header);
    for (const EvalPoint& pt : record) {
        std::vector<std::string> row = {std::to_string(pt.step), format_double(pt.return_mean),
                                        format_double(pt.return_std), format_double(pt.loss),
                                        format_double(pt.reg_value)};
        for (double n : pt.norms) row.push_back(format_double(n));
        w.row(row);
    }
}

inline TrainingRecord read_training_csv(const std::string& path) {
    const CsvTable t = read_csv(path);
    const std::size_t step_col = t.column("step");
    const std::size_t mean_col = t.column("return_mean");
    const std::size_t std_col = t.column("return_std");
    const std::size_t loss_col = t.column("loss");
    const std::size_t reg_col = t.column("reg_value");
    std::vector<std::size_t> norm_cols;
    for (std::size_t i = 0; i < t.header.size(); ++i)
        if (t.header[i].rfind("l2_norm_", 0) == 0) norm_cols.push_back(i);
    TrainingRecord record;
    for (const auto& row : t.rows) {
        EvalPoint pt;
        pt.step = static_cast<long>(csv_double(row[step_col], path));
        pt.return_mean = csv_double(row[mean_col], path);
        pt.return_std = csv_double(row[std_col], path);
        pt.loss = csv_double(row[loss_col], path);
        pt.reg_value = csv_double(row[reg_col], path);
        for (std::size_t c : norm_cols) pt.norms.push_back(csv_double(row[c], path));
        record.push_back(std::move(pt));
    }
    return record;
}

// Appendix-F style log: the norm list per evaluation point plus its Gini.
inline void write_norms_csv(const std::string& path, const TrainingRecord& record,
                            int ensemble_size) {
    CsvWriter w(path);
    std::vector<std::string> header = {"step"};
    for (int i = 1; i <= ensemble_size; ++i) header.push_back("l2_norm_" + std::to_string(i));
    header.push_back("gini");
    w.row(header);
    for (const EvalPoint& pt : record) {
        std::vector<std::string> row = {std::to_string(pt.step)};
        for (double n : pt.norms) row.push_back(format_double(n));
        row.push_back(format_double(ineq::gini(pt.norms)));
        w.row(row);
    }
}

inline void write_heatmap_csv(const std::string& path, const SimilarityHeatmap& hm) {
    CsvWriter w(path);
    std::vector<std::string> header = {""};
    for (const auto& l : hm.col_labels) header.push_back(l);
    w.row(header);
    for (std::size_t r = 0; r < hm.row_labels.size(); ++r) {
        std::vector<std::string> row = {hm.row_labels[r]};
        for (std::size_t c = 0; c < hm.col_labels.size(); ++c)
            row.push_back(hm.missing(r, c) ? "" : format_double(hm.values.at(r, c)));
        w.row(row);
    }
}

inline SimilarityHeatmap read_heatmap_csv(const std::string& path) {
    const CsvTable t = read_csv(path);
    SimilarityHeatmap hm;
    for (std::size_t c = 1; c < t.header.size(); ++c) hm.col_labels.push_back(t.header[c]);
    hm.values = Tensor({t.rows.size(), hm.col_labels.size()});
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        hm.row_labels.push_back(t.rows[r][0]);
        for (std::size_t c = 0; c < hm.col_labels.size(); ++c) {
            const std::string& cell = t.rows[r][c + 1];
            hm.values.at(r, c) = cell.empty() ? std::numeric_limits<double>::quiet_NaN()
                                              : csv_double(cell, path);
        }
    }
    return hm;
}

// --- run planning and execution ---

struct RunSpec {
    std::string id;
    Algorithm algorithm = Algorithm::maxmin;
    Regularizer regularizer = Regularizer::none;
    double lambda = 0.0;
    std::uint64_t seed = 0;
    AgentConfig agent;  // resolved per-run agent configuration
};

inline std::string lambda_tag(double lambda) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", lambda);
    return buf;
}

// Expands algorithm x method x lambda x seed. The baseline (regularizer
// none) collapses the lambda sweep to a single cell; dqn/ddqn run
// unregularized with a single network, as in the paper's comparisons.
inline std::vector<RunSpec> plan_matrix(const ExperimentConfig& cfg) {
    cfg.validate();
    std::vector<RunSpec> plan;
    for (Algorithm algo : cfg.algorithms) {
        const bool single = algo == Algorithm::dqn || algo == Algorithm::ddqn;
        for (Regularizer reg : cfg.regularizers) {
            if (single && reg != Regularizer::none) continue;
            const std::vector<double> lambdas =
                reg == Regularizer::none ? std::vector<double>{0.0} : cfg.lambda_sweep;
            for (double lambda : lambdas) {
                for (std::uint64_t seed : cfg.seeds) {
                    RunSpec spec;
                    spec.algorithm = algo;
                    spec.regularizer = reg;
                    spec.lambda = lambda;
                    spec.seed = seed;
                    spec.agent = cfg.agent;
                    spec.agent.algorithm = algo;
                    spec.agent.regularizer = reg;
                    spec.agent.lambda = lambda;
                    if (single) spec.agent.ensemble_size = 1;
                    spec.id = std::string(to_string(algo)) + "_" + to_string(reg) + "_" +
                              lambda_tag(lambda) + "_s" + std::to_string(seed);
                    plan.push_back(std::move(spec));
                }
            }
        }
    }
    return plan;
}

struct RunResult {
    std::string id;
    Algorithm algorithm = Algorithm::maxmin;
    Regularizer regularizer = Regularizer::none;
    double lambda = 0.0;
    std::uint64_t seed = 0;
    std::string status = "pending";  // done | failed
    std::string message;
    std::map<std::string, std::string> artifacts;  // name -> path relative to out dir
    // summary numbers for the statistics stage
    double final_window_return = std::numeric_limits<double>::quiet_NaN();
    double mean_return_auc = std::numeric_limits<double>::quiet_NaN();
    double final_gini = std::numeric_limits<double>::quiet_NaN();
    double final_diag_cka = std::numeric_limits<double>::quiet_NaN();
};

inline double final_window_mean(const TrainingRecord& record, int final_window) {
    if (record.empty()) throw domain_error("final_window_mean: empty record");
    const std::size_t w = std::min<std::size_t>(record.size(),
                                                static_cast<std::size_t>(final_window));
    double s = 0.0;
    for (std::size_t i = record.size() - w; i < record.size(); ++i)
        s += record[i].return_mean;
    return s / static_cast<double>(w);
}

constexpr std::size_t kProbeBatchSize = 256;

// Probe states for similarity analysis: on-distribution draws from the
// run's own replay buffer, under a stream independent of training.
inline Tensor probe_from_replay(const EnsembleAgent& agent, std::uint64_t seed,
                                std::size_t n = kProbeBatchSize) {
    Rng rng(derive_seed(seed, 201));
    const auto states = agent.replay().sample_states(n, rng);
    Tensor probe({states.size(), static_cast<std::size_t>(agent.observation_dim())});
    for (std::size_t r = 0; r < states.size(); ++r)
        for (std::size_t c = 0; c < states[r].size(); ++c) probe.at(r, c) = states[r][c];
    return probe;
}

// Trains one cell and writes its artifacts under out_dir/runs/<id>/.
inline RunResult run_single(const ExperimentConfig& cfg, const RunSpec& spec) {
    namespace fs = std::filesystem;
    RunResult res;
    res.id = spec.id;
    res.algorithm = spec.algorithm;
    res.regularizer = spec.regularizer;
    res.lambda = spec.lambda;
    res.seed = spec.seed;
    const fs::path run_dir = fs::path(cfg.out_dir) / "runs" / spec.id;
    try {
        fs::create_directories(run_dir);
        auto env = make_env(cfg, derive_seed(spec.seed, 101));
        EnsembleAgent agent(spec.agent, env->observation_dim(), env->action_count(),
                            spec.seed);
        const TrainingRecord record = agent.train(*env, cfg.total_steps, cfg.eval_every);

        const std::string train_rel = ("runs" / fs::path(spec.id) / "train.csv").string();
        write_training_csv((fs::path(cfg.out_dir) / train_rel).string(), record,
                           spec.agent.ensemble_size);
        res.artifacts["train_csv"] = train_rel;

        if (spec.agent.ensemble_size >= 2) {
            const std::string norms_rel = ("runs" / fs::path(spec.id) / "norms.csv").string();
            write_norms_csv((fs::path(cfg.out_dir) / norms_rel).string(), record,
                            spec.agent.ensemble_size);
            res.artifacts["norms_csv"] = norms_rel;

            const Tensor probe = probe_from_replay(agent, spec.seed);
            const SimilarityHeatmap hm =
                cka_heatmap(agent.member(0), agent.member(1), probe);
            const std::string hm_rel = ("runs" / fs::path(spec.id) / "heatmap.csv").string();
            write_heatmap_csv((fs::path(cfg.out_dir) / hm_rel).string(), hm);
            res.artifacts["heatmap_csv"] = hm_rel;
            res.final_diag_cka = mean_corresponding_cka(hm);
            if (!record.empty()) res.final_gini = ineq::gini(record.back().norms);
        }

        if (!record.empty()) {
            res.final_window_return = final_window_mean(record, cfg.final_window);
            double auc = 0.0;
            for (const EvalPoint& pt : record) auc += pt.return_mean;
            res.mean_return_auc = auc / static_cast<double>(record.size());
        }
        res.status = "done";
    } catch (const std::exception& e) {
        res.status = "failed";
        res.message = e.what();
    }
    return res;
}

struct RunManifest {
    std::string config_snapshot;  // canonical serialized ExperimentConfig
    std::string score_metric = "final_window_mean_return";
    std::vector<RunResult> runs;

    bool all_done() const {
        for (const RunResult& r : runs)
            if (r.status != "done") return false;
        return true;
    }
};

inline nlohmann::ordered_json manifest_to_json(const RunManifest& m) {
    nlohmann::ordered_json j;
    j["config_snapshot"] = m.config_snapshot;
    j["score_metric"] = m.score_metric;
    j["runs"] = nlohmann::ordered_json::array();
    for (const RunResult& r : m.runs) {
        nlohmann::ordered_json jr;
        jr["id"] = r.id;
        jr["algorithm"] = to_string(r.algorithm);
        jr["regularizer"] = to_string(r.regularizer);
        jr["lambda"] = r.lambda;
        jr["seed"] = r.seed;
        jr["status"] = r.status;
        jr["message"] = r.message;
        jr["artifacts"] = r.artifacts;
        nlohmann::ordered_json js;
        auto put = [&js](const char* key, double v) {
            if (std::isnan(v)) {
                js[key] = nullptr;
            } else {
                js[key] = v;
            }
        };
        put("final_window_return", r.final_window_return);
        put("mean_return_auc", r.mean_return_auc);
        put("final_gini", r.final_gini);
        put("final_diag_cka", r.final_diag_cka);
        jr["summary"] = js;
        j["runs"].push_back(jr);
    }
    return j;
}

inline RunManifest manifest_from_json(const nlohmann::ordered_json& j) {
    RunManifest m;
    m.config_snapshot = j.at("config_snapshot").get<std::string>();
    m.score_metric = j.at("score_metric").get<std::string>();
    for (const auto& jr : j.at("runs")) {
        RunResult r;
        r.id = jr.at("id").get<std::string>();
        r.algorithm = algorithm_from_string(jr.at("algorithm").get<std::string>());
        r.regularizer = regularizer_from_string(jr.at("regularizer").get<std::string>());
        r.lambda = jr.at("lambda").get<double>();
        r.seed = jr.at("seed").get<std::uint64_t>();
        r.status = jr.at("status").get<std::string>();
        r.message = jr.at("message").get<std::string>();
        for (const auto& [k, v] : jr.at("artifacts").items())
            r.artifacts[k] = v.get<std::string>();
        const auto& js = jr.at("summary");
        auto get = [&js](const char* key) {
            return js.at(key).is_null() ? std::numeric_limits<double>::quiet_NaN()
                                        : js.at(key).get<double>();
        };
        r.final_window_return = get("final_window_return");
        r.mean_return_auc = get("mean_return_auc");
        r.final_gini = get("final_gini");
        r.final_diag_cka = get("final_diag_cka");
        m.runs.push_back(std::move(r));
    }
    return m;
}

inline void save_manifest(const RunManifest& m, const std::string& out_dir) {
    std::ofstream out(std::filesystem::path(out_dir) / "manifest.json");
    if (!out) throw parse_error("manifest: cannot write " + out_dir);
    out << manifest_to_json(m).dump(2) << "\n";
}

inline RunManifest load_manifest(const std::string& out_dir) {
    const auto path = std::filesystem::path(out_dir) / "manifest.json";
    std::ifstream in(path);
    if (!in) throw parse_error("manifest: cannot open " + path.string());
    nlohmann::ordered_json j;
    in >> j;
    return manifest_from_json(j);
}

// Executes the full plan, up to `jobs` runs concurrently. Every run is
// independent; failures are recorded and do not stop the matrix.
inline RunManifest run_matrix(const ExperimentConfig& cfg) {
    cfg.validate();
    namespace fs = std::filesystem;
    fs::create_directories(cfg.out_dir);

    RunManifest manifest;
    manifest.config_snapshot = serialize_config(cfg.to_map());
    {
        std::ofstream snap(fs::path(cfg.out_dir) / "config.snapshot");
        snap << manifest.config_snapshot;
    }

    const std::vector<RunSpec> plan = plan_matrix(cfg);
    manifest.runs.resize(plan.size());

    unsigned jobs = cfg.jobs > 0 ? static_cast<unsigned>(cfg.jobs)
                                 : std::max(1u, std::thread::hardware_concurrency());
    jobs = std::min<unsigned>(jobs, static_cast<unsigned>(plan.size()));

    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        while (true) {
            const std::size_t k = next.fetch_add(1);
            if (k >= plan.size()) return;
            manifest.runs[k] = run_single(cfg, plan[k]);
        }
    };
    if (jobs <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < jobs; ++t) pool.emplace_back(worker);
        for (std::thread& t : pool) t.join();
    }

    save_manifest(manifest, cfg.out_dir);
    return manifest;
}

}  // namespace divq
