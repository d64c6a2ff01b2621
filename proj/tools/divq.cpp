// Command-line front end: train single runs, execute experiment matrices,
// and derive the similarity / statistics / plot artifacts from them.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "divq/divq.hpp"

namespace fs = std::filesystem;
using namespace divq;

namespace {

struct GlobalArgs {
    std::string config_path;
    std::string out_dir;
    long seed = -1;  // overrides the seed list with a single seed
    std::vector<std::string> overrides;
};

ExperimentConfig load_experiment(const GlobalArgs& g) {
    KeyValues kv;
    if (!g.config_path.empty()) kv = parse_config_file(g.config_path);
    for (const std::string& ov : g.overrides) {
        const auto eq = ov.find('=');
        if (eq == std::string::npos)
            throw parse_error("--set expects key=value, got '" + ov + "'");
        kv[trim(ov.substr(0, eq))] = trim(ov.substr(eq + 1));
    }
    ExperimentConfig cfg = ExperimentConfig::from_map(kv);
    if (!g.out_dir.empty()) cfg.out_dir = g.out_dir;
    if (g.seed >= 0) cfg.seeds = {static_cast<std::uint64_t>(g.seed)};
    return cfg;
}

int train_command(const GlobalArgs& g) {
    ExperimentConfig cfg = load_experiment(g);
    fs::create_directories(cfg.out_dir);
    RunSpec spec;
    spec.algorithm = cfg.agent.algorithm;
    spec.regularizer = cfg.agent.regularizer;
    spec.lambda = cfg.agent.lambda;
    spec.seed = cfg.seeds.front();
    spec.agent = cfg.agent;
    spec.id = std::string(to_string(spec.algorithm)) + "_" + to_string(spec.regularizer) +
              "_" + lambda_tag(spec.lambda) + "_s" + std::to_string(spec.seed);
    const RunResult res = run_single(cfg, spec);
    if (res.status != "done") {
        std::cerr << "run failed: " << res.message << "\n";
        return 2;
    }
    std::cout << "run " << res.id << " done\n";
    for (const auto& [name, path] : res.artifacts)
        std::cout << "  " << name << ": " << (fs::path(cfg.out_dir) / path).string() << "\n";
    if (!std::isnan(res.final_window_return))
        std::cout << "  final-window mean return: " << res.final_window_return << "\n";
    return 0;
}

int matrix_command(const GlobalArgs& g, int jobs) {
    ExperimentConfig cfg = load_experiment(g);
    if (jobs > 0) cfg.jobs = jobs;
    const RunManifest manifest = run_matrix(cfg);
    std::size_t failed = 0;
    for (const RunResult& r : manifest.runs)
        if (r.status != "done") {
            ++failed;
            std::cerr << "failed: " << r.id << ": " << r.message << "\n";
        }
    std::cout << manifest.runs.size() << " runs, " << failed << " failed; manifest at "
              << (fs::path(cfg.out_dir) / "manifest.json").string() << "\n";
    return failed == 0 ? 0 : 2;
}

int sine_demo_command(const GlobalArgs& g, std::uint64_t seed_a, std::uint64_t seed_b,
                      long steps) {
    const std::string out = g.out_dir.empty() ? "sine_demo" : g.out_dir;
    SineDemoOptions opt;
    if (steps > 0) {
        opt.steps_wide = steps;
        opt.steps_narrow = steps;
    }
    const SineDemoResult res = sine_demo(seed_a, seed_b, out, opt);
    std::printf("output-layer CKA before training: %.4f\n", res.pre_output_cka);
    std::printf("output-layer CKA after training:  %.4f\n", res.post_output_cka);
    std::printf("fit MSE: wide %.6f, narrow %.6f\n", res.mse_wide, res.mse_narrow);
    std::cout << "heatmaps: " << res.pre_heatmap_csv << ", " << res.post_heatmap_csv << "\n";
    return 0;
}

int similarity_command(const GlobalArgs& g, long every) {
    ExperimentConfig cfg = load_experiment(g);
    cfg.agent.ensemble_size = 2;
    const std::string out =
        (fs::path(cfg.out_dir) / "timeline").string();
    const TimelineResult res =
        similarity_timeline(cfg, cfg.seeds.front(), every > 0 ? every : cfg.eval_every, out);
    std::cout << res.checkpoints.size() << " checkpoints; report at " << res.report_csv
              << "\n";
    return 0;
}

int stats_command(const std::string& matrix_dir) {
    const RunManifest manifest = load_manifest(matrix_dir);
    const ExperimentConfig cfg =
        ExperimentConfig::from_map(parse_config_text(manifest.config_snapshot));
    const auto cells = analyze_matrix(manifest);
    const std::string out = (fs::path(matrix_dir) / "stats").string();
    write_stats_tables(cells, cfg.environment, out);
    std::cout << "stats tables written under " << out << "\n";
    for (const CellAnalysis& cell : cells) {
        std::cout << to_string(cell.algorithm) << ":\n";
        for (const auto& [label, z] : cell.averaged_z) {
            std::printf("  %-12s z = %+7.3f", label.c_str(), z);
            auto it = cell.welch_vs_baseline.find(label);
            if (it != cell.welch_vs_baseline.end())
                std::printf("   p vs baseline = %.4f", it->second.p);
            std::printf("\n");
        }
    }
    return 0;
}

int plot_command(const std::string& matrix_dir, const std::string& heatmap_csv,
                 const std::string& out_override) {
    if (!heatmap_csv.empty()) {
        const SimilarityHeatmap hm = read_heatmap_csv(heatmap_csv);
        const std::string out = out_override.empty()
                                    ? fs::path(heatmap_csv).replace_extension(".svg").string()
                                    : out_override;
        write_heatmap_svg(out, hm, fs::path(heatmap_csv).stem().string());
        std::cout << "wrote " << out << "\n";
        return 0;
    }
    if (matrix_dir.empty()) throw parse_error("plot: need --matrix-dir or --heatmap");
    const RunManifest manifest = load_manifest(matrix_dir);
    ExperimentConfig cfg =
        ExperimentConfig::from_map(parse_config_text(manifest.config_snapshot));
    cfg.out_dir = matrix_dir;  // artifacts are relative to the matrix dir
    const std::string out =
        out_override.empty() ? (fs::path(matrix_dir) / "plots").string() : out_override;
    emit_matrix_plots(cfg, manifest, out);
    std::cout << "plots written under " << out << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"diversity-regularized ensemble Q-learning toolkit"};
    app.require_subcommand(1);
    app.fallthrough();  // global options may follow the subcommand

    GlobalArgs g;
    app.add_option("--config", g.config_path, "configuration file (key = value sections)");
    app.add_option("--out", g.out_dir, "output directory");
    app.add_option("--seed", g.seed, "override the seed list with a single seed");
    app.add_option("--set", g.overrides, "override a config key, e.g. --set agent.lambda=1e-6")
        ->take_all();

    auto* train = app.add_subcommand("train", "train one agent and write its artifacts");

    int jobs = 0;
    auto* matrix = app.add_subcommand("matrix", "run the full experiment matrix");
    matrix->add_option("--jobs", jobs, "max concurrent runs (0 = hardware)");

    std::uint64_t seed_a = 1, seed_b = 2;
    long sine_steps = 0;
    auto* sine = app.add_subcommand("sine-demo", "sine regression CKA demonstration");
    sine->add_option("--seed-a", seed_a, "seed of the 64-wide network");
    sine->add_option("--seed-b", seed_b, "seed of the 32-wide network");
    sine->add_option("--steps", sine_steps, "training steps per network");

    long every = 0;
    auto* similarity = app.add_subcommand("similarity",
                                          "2-member training with a CKA heatmap timeline");
    similarity->add_option("--every", every, "steps between heatmap checkpoints");

    std::string matrix_dir;
    auto* stats = app.add_subcommand("stats", "z-score and Welch tables from a matrix");
    stats->add_option("--matrix-dir", matrix_dir, "completed matrix directory")->required();

    std::string plot_matrix_dir, plot_heatmap, plot_out;
    auto* plot = app.add_subcommand("plot", "SVG charts from matrix CSV artifacts");
    plot->add_option("--matrix-dir", plot_matrix_dir, "completed matrix directory");
    plot->add_option("--heatmap", plot_heatmap, "render one heatmap CSV");
    plot->add_option("--svg-out", plot_out, "output path or directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (train->parsed()) return train_command(g);
        if (matrix->parsed()) return matrix_command(g, jobs);
        if (sine->parsed()) return sine_demo_command(g, seed_a, seed_b, sine_steps);
        if (similarity->parsed()) return similarity_command(g, every);
        if (stats->parsed()) return stats_command(matrix_dir);
        if (plot->parsed()) return plot_command(plot_matrix_dir, plot_heatmap, plot_out);
    } catch (const parse_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const domain_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
