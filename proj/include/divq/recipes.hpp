#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "divq/agent.hpp"
#include "divq/csv.hpp"
#include "divq/env.hpp"
#include "divq/harness.hpp"
#include "divq/similarity.hpp"
#include "divq/stats.hpp"
#include "divq/svg.hpp"

namespace divq {

// --- sine regression demo ---
// Two MLPs of different width, batch size and learning rate fit the same
// sine dataset; layer-pair CKA is captured before and after training.

struct SineDemoOptions {
    std::size_t dataset_size = 1024;
    long steps_wide = 4000;    // 64x64 net, batch 512, lr 1e-4
    long steps_narrow = 4000;  // 32x32 net, batch 128, lr 1e-3
    std::size_t probe_points = 256;
};

struct SineDemoResult {
    double pre_output_cka = 0.0;
    double post_output_cka = 0.0;
    double mse_wide = 0.0;
    double mse_narrow = 0.0;
    std::string pre_heatmap_csv;
    std::string post_heatmap_csv;
    std::string fit_csv;
};

namespace detail {

inline double regression_mse(const Mlp& net, const Tensor& x, const Tensor& y) {
    const Tensor pred = net.forward(x);
    double s = 0.0;
    for (std::size_t i = 0; i < y.numel(); ++i)
        s += (pred[i] - y[i]) * (pred[i] - y[i]);
    return s / static_cast<double>(y.numel());
}

inline void fit_regression(Mlp& net, const Tensor& x, const Tensor& y, long steps,
                           std::size_t batch, double lr, std::uint64_t seed) {
    Rng rng(seed);
    Adam adam(AdamConfig{lr});
    const std::size_t n = x.rows();
    for (long s = 0; s < steps; ++s) {
        Tensor bx({batch, 1});
        Tensor by({batch, 1});
        for (std::size_t i = 0; i < batch; ++i) {
            const std::size_t k = rng.uniform_index(n);
            bx[i] = x[k];
            by[i] = y[k];
        }
        Tape tape;
        const Tape::Var in = tape.constant(std::move(bx));
        const Tape::Var pred = net.forward_tape(tape, in);
        const Tape::Var target = tape.constant(std::move(by));
        const Tape::Var loss = tape.mean(tape.square(tape.sub(pred, target)));
        auto params = net.params();
        zero_grads(params);
        tape.backward(loss);
        adam.step(params);
    }
}

}  // namespace detail

inline SineDemoResult sine_demo(std::uint64_t seed_a, std::uint64_t seed_b,
                                const std::string& out_dir, SineDemoOptions opt = {}) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    auto [x, y] = sine_dataset(opt.dataset_size, derive_seed(seed_a, 7001));

    Mlp wide(1, {64, 64}, 1);
    Mlp narrow(1, {32, 32}, 1);
    std::vector<std::uint64_t> seeds_a(wide.layer_count());
    std::vector<std::uint64_t> seeds_b(narrow.layer_count());
    for (std::size_t l = 0; l < seeds_a.size(); ++l) seeds_a[l] = derive_seed(seed_a, 10 + l);
    for (std::size_t l = 0; l < seeds_b.size(); ++l) seeds_b[l] = derive_seed(seed_b, 10 + l);
    wide.init(seeds_a);
    narrow.init(seeds_b);

    constexpr double kTwoPi = 6.283185307179586476925286766559;
    Tensor probe({opt.probe_points, 1});
    for (std::size_t i = 0; i < opt.probe_points; ++i)
        probe[i] = -kTwoPi + 2.0 * kTwoPi * static_cast<double>(i) /
                                 static_cast<double>(opt.probe_points - 1);

    SineDemoResult res;
    const SimilarityHeatmap pre = cka_heatmap(wide, narrow, probe);
    res.pre_output_cka = pre.values.at(pre.row_labels.size() - 1, pre.col_labels.size() - 1);
    res.pre_heatmap_csv = (fs::path(out_dir) / "sine_pre_heatmap.csv").string();
    write_heatmap_csv(res.pre_heatmap_csv, pre);

    detail::fit_regression(wide, x, y, opt.steps_wide, 512, 1e-4, derive_seed(seed_a, 7002));
    detail::fit_regression(narrow, x, y, opt.steps_narrow, 128, 1e-3, derive_seed(seed_b, 7003));

    const SimilarityHeatmap post = cka_heatmap(wide, narrow, probe);
    res.post_output_cka =
        post.values.at(post.row_labels.size() - 1, post.col_labels.size() - 1);
    res.post_heatmap_csv = (fs::path(out_dir) / "sine_post_heatmap.csv").string();
    write_heatmap_csv(res.post_heatmap_csv, post);

    res.mse_wide = detail::regression_mse(wide, x, y);
    res.mse_narrow = detail::regression_mse(narrow, x, y);

    res.fit_csv = (fs::path(out_dir) / "sine_fit.csv").string();
    {
        CsvWriter w(res.fit_csv);
        w.row({"x", "sin_x", "pred_wide", "pred_narrow"});
        const Tensor pw = wide.forward(probe);
        const Tensor pn = narrow.forward(probe);
        for (std::size_t i = 0; i < probe.numel(); ++i)
            w.row({format_double(probe[i]), format_double(std::sin(probe[i])),
                   format_double(pw[i]), format_double(pn[i])});
    }
    return res;
}

// --- similarity timeline (training-graph + heatmap series) ---

struct TimelineResult {
    std::vector<long> checkpoints;
    std::vector<std::string> heatmap_paths;
    std::vector<double> mean_corresponding;  // per checkpoint
    std::string report_csv;
    TrainingRecord record;
};

// Trains a 2-member ensemble and captures a member-0 vs member-1 CKA
// heatmap every `every` steps, joined with the greedy-evaluation returns.
inline TimelineResult similarity_timeline(const ExperimentConfig& cfg, std::uint64_t seed,
                                          long every, const std::string& out_dir) {
    if (cfg.agent.ensemble_size != 2)
        throw domain_error("similarity_timeline: requires a 2-member ensemble");
    if (every <= 0) throw domain_error("similarity_timeline: every must be > 0");
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);

    auto env = make_env(cfg, derive_seed(seed, 101));
    EnsembleAgent agent(cfg.agent, env->observation_dim(), env->action_count(), seed);

    TimelineResult res;
    auto hook = [&](long step, const EnsembleAgent& a) {
        const Tensor probe = probe_from_replay(a, derive_seed(seed, 300 + res.checkpoints.size()));
        const SimilarityHeatmap hm = cka_heatmap(a.member(0), a.member(1), probe);
        char name[64];
        std::snprintf(name, sizeof(name), "heatmap_step%010ld.csv", step);
        const std::string path = (fs::path(out_dir) / name).string();
        write_heatmap_csv(path, hm);
        res.checkpoints.push_back(step);
        res.heatmap_paths.push_back(path);
        res.mean_corresponding.push_back(mean_corresponding_cka(hm));
    };
    res.record = agent.train(*env, cfg.total_steps, cfg.eval_every, hook, every);

    res.report_csv = (fs::path(out_dir) / "timeline.csv").string();
    CsvWriter w(res.report_csv);
    w.row({"checkpoint", "mean_corresponding_cka", "return_mean"});
    for (std::size_t k = 0; k < res.checkpoints.size(); ++k) {
        // most recent evaluation at or before the checkpoint
        std::string ret;
        for (const EvalPoint& pt : res.record)
            if (pt.step <= res.checkpoints[k]) ret = format_double(pt.return_mean);
        w.row({std::to_string(res.checkpoints[k]), format_double(res.mean_corresponding[k]),
               ret});
    }
    return res;
}

// --- statistics stage (z-score and Welch tables) ---

struct MethodScores {
    double chosen_lambda = 0.0;
    std::vector<double> scores;  // per seed, final-window mean returns
};

struct CellAnalysis {
    Algorithm algorithm = Algorithm::maxmin;
    std::map<std::string, MethodScores> methods;           // label -> scores
    std::map<std::string, double> averaged_z;              // label -> mean z
    std::map<std::string, std::vector<double>> per_seed_z;  // label -> z per seed
    std::map<std::string, TTestResult> welch_vs_baseline;  // label (non-baseline)
};

inline std::string method_label(Regularizer reg) {
    return reg == Regularizer::none ? "baseline" : to_string(reg);
}

// Per algorithm: pick the best lambda per method by mean final-window
// return (ties resolved toward the earlier entry in the sweep), pool all
// chosen scores into one population, z-score, average per method, and run
// Welch's t-test of each method's z-scores against the baseline's.
inline std::vector<CellAnalysis> analyze_matrix(const RunManifest& manifest) {
    std::vector<CellAnalysis> cells;

    std::vector<Algorithm> algos;
    for (const RunResult& r : manifest.runs)
        if (std::find(algos.begin(), algos.end(), r.algorithm) == algos.end())
            algos.push_back(r.algorithm);

    for (Algorithm algo : algos) {
        CellAnalysis cell;
        cell.algorithm = algo;

        // label -> lambda -> (seed-ordered scores)
        std::map<std::string, std::map<double, std::vector<double>>> by_method;
        for (const RunResult& r : manifest.runs) {
            if (r.algorithm != algo || r.status != "done") continue;
            by_method[method_label(r.regularizer)][r.lambda].push_back(
                r.final_window_return);
        }
        for (auto& [label, sweeps] : by_method) {
            MethodScores best;
            bool have = false;
            // descending lambda, so ties at the return ceiling resolve to
            // the strongest regularization
            for (auto it = sweeps.rbegin(); it != sweeps.rend(); ++it) {
                const double mean = sample_mean(it->second);
                if (!have || mean > sample_mean(best.scores)) {
                    best.chosen_lambda = it->first;
                    best.scores = it->second;
                    have = true;
                }
            }
            if (have) cell.methods[label] = std::move(best);
        }

        std::vector<ScoreSample> pooled;
        for (const auto& [label, ms] : cell.methods)
            for (std::size_t k = 0; k < ms.scores.size(); ++k)
                pooled.push_back(ScoreSample{label, k, ms.scores[k]});
        if (pooled.size() < 2) throw domain_error("analyze_matrix: too few completed runs");

        std::vector<double> values;
        values.reserve(pooled.size());
        for (const auto& s : pooled) values.push_back(s.value);
        const std::vector<double> z = z_scores(values);
        for (std::size_t k = 0; k < pooled.size(); ++k)
            cell.per_seed_z[pooled[k].label].push_back(z[k]);
        cell.averaged_z = averaged_z_scores(pooled);

        const auto base_it = cell.per_seed_z.find("baseline");
        if (base_it != cell.per_seed_z.end()) {
            for (const auto& [label, zs] : cell.per_seed_z) {
                if (label == "baseline") continue;
                if (zs.size() >= 2 && base_it->second.size() >= 2)
                    cell.welch_vs_baseline[label] = welch_t_test(zs, base_it->second);
            }
        }
        cells.push_back(std::move(cell));
    }
    return cells;
}

// Tables shaped like the paper's: rows = method (baseline first), one
// column per algorithm cell.
inline void write_stats_tables(const std::vector<CellAnalysis>& cells,
                               const std::string& environment, const std::string& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);

    std::vector<std::string> labels = {"baseline"};
    for (const CellAnalysis& cell : cells)
        for (const auto& [label, unused] : cell.methods)
            if (std::find(labels.begin(), labels.end(), label) == labels.end())
                labels.push_back(label);

    auto col_name = [&](const CellAnalysis& cell) {
        return std::string(to_string(cell.algorithm)) + "_" + environment;
    };

    {
        CsvWriter w((fs::path(out_dir) / "zscores.csv").string());
        std::vector<std::string> header = {"method"};
        for (const CellAnalysis& cell : cells) header.push_back(col_name(cell));
        w.row(header);
        for (const std::string& label : labels) {
            std::vector<std::string> row = {label};
            for (const CellAnalysis& cell : cells) {
                auto it = cell.averaged_z.find(label);
                row.push_back(it == cell.averaged_z.end() ? "" : format_double(it->second));
            }
            w.row(row);
        }
    }
    {
        CsvWriter w((fs::path(out_dir) / "pvalues.csv").string());
        std::vector<std::string> header = {"method"};
        for (const CellAnalysis& cell : cells) header.push_back(col_name(cell));
        w.row(header);
        for (const std::string& label : labels) {
            if (label == "baseline") continue;
            std::vector<std::string> row = {label};
            for (const CellAnalysis& cell : cells) {
                auto it = cell.welch_vs_baseline.find(label);
                row.push_back(it == cell.welch_vs_baseline.end()
                                  ? ""
                                  : format_double(it->second.p));
            }
            w.row(row);
        }
    }
    {
        CsvWriter w((fs::path(out_dir) / "selection.csv").string());
        w.row({"method", "algorithm", "lambda", "mean_final_window_return"});
        for (const CellAnalysis& cell : cells) {
            for (const auto& [label, ms] : cell.methods) {
                w.row({label, to_string(cell.algorithm), format_double(ms.chosen_lambda),
                       format_double(sample_mean(ms.scores))});
            }
        }
    }
}

// --- plot emission from a completed matrix ---

inline void emit_matrix_plots(const ExperimentConfig& cfg, const RunManifest& manifest,
                              const std::string& plots_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(plots_dir);
    const std::vector<CellAnalysis> cells = analyze_matrix(manifest);

    for (const CellAnalysis& cell : cells) {
        std::vector<PlotSeries> return_series;
        std::vector<PlotSeries> gini_series;
        for (const auto& [label, ms] : cell.methods) {
            std::vector<std::vector<double>> curves;
            std::vector<std::vector<double>> ginis;
            std::vector<double> grid;
            for (const RunResult& r : manifest.runs) {
                if (r.algorithm != cell.algorithm || r.status != "done") continue;
                if (method_label(r.regularizer) != label || r.lambda != ms.chosen_lambda)
                    continue;
                const auto train_it = r.artifacts.find("train_csv");
                if (train_it == r.artifacts.end()) continue;
                const TrainingRecord rec =
                    read_training_csv((fs::path(cfg.out_dir) / train_it->second).string());
                std::vector<double> xs, ys;
                for (const EvalPoint& pt : rec) {
                    xs.push_back(static_cast<double>(pt.step));
                    ys.push_back(pt.return_mean);
                }
                if (grid.empty()) grid = xs;
                if (xs == grid) curves.push_back(ys);
                const auto norms_it = r.artifacts.find("norms_csv");
                if (norms_it != r.artifacts.end()) {
                    const CsvTable t =
                        read_csv((fs::path(cfg.out_dir) / norms_it->second).string());
                    const std::size_t gcol = t.column("gini");
                    std::vector<double> g;
                    for (const auto& row : t.rows) g.push_back(csv_double(row[gcol], "gini"));
                    if (g.size() == grid.size()) ginis.push_back(g);
                }
            }
            if (!curves.empty())
                return_series.push_back(aggregate_series(label, grid, curves));
            if (!ginis.empty()) gini_series.push_back(aggregate_series(label, grid, ginis));
        }
        const std::string algo = to_string(cell.algorithm);
        if (!return_series.empty())
            write_line_chart((fs::path(plots_dir) / ("returns_" + algo + ".svg")).string(),
                             return_series, algo + " on " + cfg.environment, "step",
                             "mean return");
        if (!gini_series.empty())
            write_line_chart((fs::path(plots_dir) / ("gini_" + algo + ".svg")).string(),
                             gini_series, "norm inequality, " + algo, "step", "gini(l)");
    }
}

}  // namespace divq
