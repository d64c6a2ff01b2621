#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "divq/divq.hpp"

using namespace divq;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    REQUIRE(in);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::size_t count_occurrences(const std::string& text, const std::string& needle) {
    std::size_t n = 0, pos = 0;
    while ((pos = text.find(needle, pos)) != std::string::npos) {
        ++n;
        pos += needle.size();
    }
    return n;
}

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "divq_tests" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

// Cheap matrix setup on the chain environment.
ExperimentConfig small_matrix_config(const fs::path& out) {
    ExperimentConfig cfg;
    cfg.environment = "maxbias_chain";
    cfg.algorithms = {Algorithm::maxmin};
    cfg.regularizers = {Regularizer::none, Regularizer::gini};
    cfg.lambda_sweep = {1e-6};
    cfg.seeds = {1, 2};
    cfg.total_steps = 300;
    cfg.eval_every = 100;
    cfg.final_window = 2;
    cfg.jobs = 2;
    cfg.out_dir = out.string();
    cfg.agent.algorithm = Algorithm::maxmin;
    cfg.agent.ensemble_size = 2;
    cfg.agent.hidden = {4};
    cfg.agent.batch_size = 4;
    cfg.agent.buffer_capacity = 256;
    cfg.agent.exploration_steps = 20;
    cfg.agent.eval_episodes = 2;
    cfg.agent.target_sync = 10;
    return cfg;
}

}  // namespace

TEST_CASE("config text grammar") {
    SECTION("sections, comments and whitespace") {
        const std::string text =
            "# comment\n"
            "[experiment]\n"
            "total_steps = 500\n"
            "; another comment\n"
            "seeds = 1 2 3\n"
            "[agent]\n"
            "algorithm = ensemble\n";
        const KeyValues kv = parse_config_text(text);
        CHECK(kv.at("experiment.total_steps") == "500");
        CHECK(kv.at("experiment.seeds") == "1 2 3");
        CHECK(kv.at("agent.algorithm") == "ensemble");
    }
    SECTION("parse errors carry the line number") {
        CHECK_THROWS_WITH(parse_config_text("[experiment\nkey = 1\n"),
                          Catch::Matchers::ContainsSubstring("line 1"));
        CHECK_THROWS_WITH(parse_config_text("[a]\nnonsense\n"),
                          Catch::Matchers::ContainsSubstring("line 2"));
    }
    SECTION("parse -> serialize -> parse is the identity") {
        ExperimentConfig cfg;
        cfg.agent.lambda = 1e-6;
        cfg.agent.regularizer = Regularizer::theil;
        cfg.lambda_sweep = {1e-5, 1e-8};
        const KeyValues kv = cfg.to_map();
        const KeyValues reparsed = parse_config_text(serialize_config(kv));
        CHECK(kv == reparsed);
        const ExperimentConfig cfg2 = ExperimentConfig::from_map(reparsed);
        CHECK(cfg2.to_map() == kv);
    }
    SECTION("typed accessor errors") {
        const KeyValues kv = parse_config_text("[a]\nx = notanumber\n");
        CHECK_THROWS_AS(config_get_double(kv, "a.x", 0.0), parse_error);
        CHECK_THROWS_AS(config_get_long(kv, "a.x", 0), parse_error);
        CHECK_THROWS_AS(config_get_bool(kv, "a.x", false), parse_error);
    }
}

TEST_CASE("matrix planning") {
    SECTION("paper-style accounting: 2 algorithms x 6 methods x 5 seeds = 60") {
        ExperimentConfig cfg;
        cfg.algorithms = {Algorithm::maxmin, Algorithm::ensemble};
        cfg.lambda_sweep = {1e-6};  // one lambda per regularizer
        cfg.seeds = {1, 2, 3, 4, 5};
        CHECK(plan_matrix(cfg).size() == 60);
    }
    SECTION("lambda sweep multiplies only regularized cells") {
        ExperimentConfig cfg;
        cfg.algorithms = {Algorithm::maxmin};
        cfg.regularizers = {Regularizer::none, Regularizer::gini};
        cfg.lambda_sweep = {1e-5, 1e-6, 1e-7, 1e-8};
        cfg.seeds = {1};
        // baseline once + gini at 4 lambdas
        CHECK(plan_matrix(cfg).size() == 5);
    }
    SECTION("dqn and ddqn are planned unregularized with one network") {
        ExperimentConfig cfg;
        cfg.algorithms = {Algorithm::dqn, Algorithm::ddqn};
        cfg.seeds = {1};
        cfg.lambda_sweep = {1e-6};
        const auto plan = plan_matrix(cfg);
        REQUIRE(plan.size() == 2);
        for (const RunSpec& s : plan) {
            CHECK(s.regularizer == Regularizer::none);
            CHECK(s.agent.ensemble_size == 1);
        }
    }
}

TEST_CASE("matrix execution and manifest") {
    const fs::path out1 = fresh_dir("matrix_a");
    const ExperimentConfig cfg = small_matrix_config(out1);
    const RunManifest m1 = run_matrix(cfg);

    SECTION("all runs complete with their declared artifacts") {
        REQUIRE(m1.runs.size() == 4);  // (baseline + gini@1 lambda) x 2 seeds
        for (const RunResult& r : m1.runs) {
            REQUIRE(r.status == "done");
            CHECK(fs::exists(out1 / r.artifacts.at("train_csv")));
            CHECK(fs::exists(out1 / r.artifacts.at("norms_csv")));
            CHECK(fs::exists(out1 / r.artifacts.at("heatmap_csv")));
            CHECK_FALSE(std::isnan(r.final_window_return));
        }
        CHECK(fs::exists(out1 / "manifest.json"));
        CHECK(fs::exists(out1 / "config.snapshot"));
    }

    SECTION("rerunning the matrix reproduces every byte") {
        const fs::path out2 = fresh_dir("matrix_b");
        ExperimentConfig cfg2 = small_matrix_config(out2);
        const RunManifest m2 = run_matrix(cfg2);
        REQUIRE(m2.runs.size() == m1.runs.size());
        for (std::size_t i = 0; i < m1.runs.size(); ++i) {
            CHECK(slurp(out1 / m1.runs[i].artifacts.at("train_csv")) ==
                  slurp(out2 / m2.runs[i].artifacts.at("train_csv")));
            CHECK(slurp(out1 / m1.runs[i].artifacts.at("heatmap_csv")) ==
                  slurp(out2 / m2.runs[i].artifacts.at("heatmap_csv")));
        }
        // manifests differ only in the out path inside the snapshot
        auto ja = manifest_to_json(m1);
        auto jb = manifest_to_json(m2);
        ja["config_snapshot"] = "";
        jb["config_snapshot"] = "";
        CHECK(ja.dump(2) == jb.dump(2));
    }

    SECTION("manifest round-trips through disk") {
        const RunManifest loaded = load_manifest(out1.string());
        CHECK(manifest_to_json(loaded).dump(2) == manifest_to_json(m1).dump(2));
    }

    SECTION("training CSV schema and round-trip") {
        const CsvTable t = read_csv((out1 / m1.runs[0].artifacts.at("train_csv")).string());
        CHECK(t.header == std::vector<std::string>{"step", "return_mean", "return_std",
                                                   "loss", "reg_value", "l2_norm_1",
                                                   "l2_norm_2"});
        CHECK(t.rows.size() == 3);  // 300 steps / eval_every 100
        const TrainingRecord rec =
            read_training_csv((out1 / m1.runs[0].artifacts.at("train_csv")).string());
        REQUIRE(rec.size() == 3);
        CHECK(rec[0].step == 100);
        CHECK(rec[2].step == 300);
        CHECK(rec[0].norms.size() == 2);
    }

    SECTION("norms CSV carries a nonnegative gini column") {
        const CsvTable t = read_csv((out1 / m1.runs[0].artifacts.at("norms_csv")).string());
        const std::size_t g = t.column("gini");
        for (const auto& row : t.rows) CHECK(csv_double(row[g], "gini") >= 0.0);
    }

    SECTION("heatmap CSV round-trips with labels") {
        const SimilarityHeatmap hm =
            read_heatmap_csv((out1 / m1.runs[0].artifacts.at("heatmap_csv")).string());
        CHECK(hm.row_labels == std::vector<std::string>{"h1_pre", "h1_post", "out"});
        CHECK(hm.col_labels == hm.row_labels);
        for (std::size_t i = 0; i < hm.row_labels.size(); ++i)
            for (std::size_t j = 0; j < hm.col_labels.size(); ++j)
                if (!hm.missing(i, j)) {
                    CHECK(hm.values.at(i, j) >= -1e-9);
                    CHECK(hm.values.at(i, j) <= 1.0 + 1e-9);
                }
    }

    SECTION("statistics stage produces the paper-shaped tables") {
        const auto cells = analyze_matrix(m1);
        REQUIRE(cells.size() == 1);
        CHECK(cells[0].methods.count("baseline") == 1);
        CHECK(cells[0].methods.count("gini") == 1);
        CHECK(cells[0].welch_vs_baseline.count("gini") == 1);
        const fs::path stats_dir = out1 / "stats";
        write_stats_tables(cells, cfg.environment, stats_dir.string());
        const CsvTable z = read_csv((stats_dir / "zscores.csv").string());
        CHECK(z.header == std::vector<std::string>{"method", "maxmin_maxbias_chain"});
        REQUIRE(z.rows.size() == 2);
        CHECK(z.rows[0][0] == "baseline");
        const CsvTable p = read_csv((stats_dir / "pvalues.csv").string());
        REQUIRE(p.rows.size() == 1);
        const double pval = csv_double(p.rows[0][1], "p");
        CHECK(pval >= 0.0);
        CHECK(pval <= 1.0);
    }

    SECTION("plot emission from the matrix artifacts") {
        const fs::path plots = out1 / "plots";
        ExperimentConfig plot_cfg = cfg;
        emit_matrix_plots(plot_cfg, m1, plots.string());
        REQUIRE(fs::exists(plots / "returns_maxmin.svg"));
        REQUIRE(fs::exists(plots / "gini_maxmin.svg"));
        const std::string svg = slurp(plots / "returns_maxmin.svg");
        CHECK(count_occurrences(svg, "class=\"mean\"") == 2);  // baseline + gini
    }
}

TEST_CASE("failed runs are recorded while the matrix continues") {
    const fs::path out = fresh_dir("matrix_fail");
    ExperimentConfig cfg = small_matrix_config(out);
    cfg.lambda_sweep = {-1.0};  // invalid for regularized cells only
    const RunManifest m = run_matrix(cfg);
    int done = 0, failed = 0;
    for (const RunResult& r : m.runs) {
        if (r.status == "done") {
            ++done;
            CHECK(fs::exists(out / r.artifacts.at("train_csv")));
        } else {
            ++failed;
            CHECK(r.message.find("lambda") != std::string::npos);
        }
    }
    CHECK(done == 2);
    CHECK(failed == 2);
    CHECK_FALSE(m.all_done());
}

TEST_CASE("confidence bands") {
    SECTION("five curves: half-width is 1.96 * std / sqrt(5)") {
        const std::vector<double> x = {0, 1, 2};
        std::vector<std::vector<double>> curves;
        for (double v : {1.0, 2.0, 3.0, 4.0, 5.0})
            curves.push_back({v, 2 * v, -v});
        const PlotSeries s = aggregate_series("m", x, curves);
        CHECK(s.mean[0] == Catch::Approx(3.0));
        const double want = 1.96 * std::sqrt(2.5) / std::sqrt(5.0);
        CHECK(s.band[0] == Catch::Approx(want).epsilon(1e-12));
        CHECK(s.band[1] == Catch::Approx(2.0 * want).epsilon(1e-12));
    }
    SECTION("single curve collapses the band to the line") {
        const PlotSeries s = aggregate_series("m", {0, 1}, {{1.0, 2.0}});
        CHECK(s.band == std::vector<double>{0.0, 0.0});
        const fs::path dir = fresh_dir("plots_single");
        write_line_chart((dir / "single.svg").string(), {s}, "t", "x", "y");
        const std::string svg = slurp(dir / "single.svg");
        CHECK(count_occurrences(svg, "class=\"band\"") == 0);
        CHECK(count_occurrences(svg, "class=\"mean\"") == 1);
    }
    SECTION("heatmap SVG has one cell rect per matrix entry") {
        SimilarityHeatmap hm;
        hm.row_labels = {"a", "b", "c"};
        hm.col_labels = {"x", "y"};
        hm.values = Tensor({3, 2}, {0.1, 0.9, 0.5, std::nan(""), 1.0, 0.0});
        const fs::path dir = fresh_dir("plots_heat");
        write_heatmap_svg((dir / "h.svg").string(), hm, "h");
        const std::string svg = slurp(dir / "h.svg");
        CHECK(count_occurrences(svg, "class=\"cell\"") == 6);
    }
}

TEST_CASE("similarity timeline") {
    const fs::path out = fresh_dir("timeline");
    ExperimentConfig cfg = small_matrix_config(out / "unused");
    cfg.environment = "catcher_lite";
    cfg.total_steps = 600;
    cfg.eval_every = 200;
    const TimelineResult res = similarity_timeline(cfg, 5, 200, out.string());

    SECTION("checkpoint count is floor(total / every)") {
        CHECK(res.checkpoints == std::vector<long>{200, 400, 600});
        CHECK(res.heatmap_paths.size() == 3);
    }
    SECTION("heatmap labels are identical across checkpoints") {
        const SimilarityHeatmap h0 = read_heatmap_csv(res.heatmap_paths[0]);
        for (const std::string& p : res.heatmap_paths) {
            const SimilarityHeatmap h = read_heatmap_csv(p);
            REQUIRE(h.row_labels == h0.row_labels);
            REQUIRE(h.col_labels == h0.col_labels);
        }
    }
    SECTION("report joins checkpoints with evaluation returns") {
        const CsvTable t = read_csv(res.report_csv);
        CHECK(t.header ==
              std::vector<std::string>{"checkpoint", "mean_corresponding_cka", "return_mean"});
        REQUIRE(t.rows.size() == 3);
        for (const auto& row : t.rows) CHECK_FALSE(row[1].empty());
    }
    SECTION("requires a 2-member ensemble") {
        ExperimentConfig bad = cfg;
        bad.agent.ensemble_size = 3;
        CHECK_THROWS_AS(similarity_timeline(bad, 5, 200, (out / "x").string()), domain_error);
    }
}

#ifdef DIVQ_CLI_PATH
TEST_CASE("cli exit codes") {
    const std::string cli = DIVQ_CLI_PATH;
    auto run = [&](const std::string& args) {
        const int rc = std::system((cli + " " + args + " >/dev/null 2>&1").c_str());
        return WEXITSTATUS(rc);
    };
    SECTION("config errors exit with 1") {
        CHECK(run("train --config /nonexistent.conf") == 1);
        CHECK(run("train --set agent.algorithm=bogus") == 1);
    }
    SECTION("run failures exit with 2, success with 0") {
        const fs::path out = fresh_dir("cli_matrix");
        const std::string common =
            " --set experiment.environment=maxbias_chain"
            " --set experiment.total_steps=200 --set experiment.eval_every=100"
            " --set experiment.seeds=1 --set experiment.regularizers=\"none gini\""
            " --set agent.hidden=4 --set agent.batch_size=4"
            " --set agent.exploration_steps=20 --set agent.eval_episodes=2";
        CHECK(run("matrix --out " + (out / "ok").string() + common +
                  " --set experiment.lambda_sweep=1e-6") == 0);
        CHECK(run("matrix --out " + (out / "bad").string() + common +
                  " --set experiment.lambda_sweep=-1") == 2);
    }
}
#endif
