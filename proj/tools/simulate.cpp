#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "cpa/errors.hpp"
#include "cpa/harness.hpp"

namespace fs = std::filesystem;

int main(int argc, char** argv) {
    CLI::App app{"Two-stage coalition formation and clock-proxy auction simulator"};
    std::string config_path;
    std::uint64_t seed = 1;
    std::size_t batches = 25;
    std::size_t runs = 200;
    int windows = 1;
    std::string out_dir;
    bool trace = false;
    std::optional<double> loss;
    bool literal = false;
    unsigned threads = 0;

    app.add_option("--config", config_path, "scenario config (JSON)")->required();
    app.add_option("--seed", seed, "master seed");
    app.add_option("--batches", batches, "number of batches (>= 2)");
    app.add_option("--runs", runs, "runs per batch");
    app.add_option("--windows", windows, "auction windows per run");
    app.add_option("--out", out_dir, "output directory")->required();
    app.add_flag("--trace", trace, "export scenarios, outcomes and auction traces");
    app.add_option("--loss", loss, "message loss probability for price consensus");
    app.add_flag("--literal-capacity-eq", literal, "count every supplier at every clock price");
    app.add_option("--threads", threads, "worker threads (0 = all cores)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    cpa::ScenarioConfig config;
    try {
        config = cpa::load_config(config_path);
        config.seed = seed;
        if (loss) config.loss = *loss;
        if (literal) config.literal_capacity_eq = true;
        auto errors = cpa::validate_scenario(config);
        if (!errors.empty()) throw cpa::ConfigError(errors.front());
        if (batches < 2) throw cpa::ConfigError("--batches must be at least 2");
        if (runs < 1) throw cpa::ConfigError("--runs must be at least 1");
        if (windows < 1) throw cpa::ConfigError("--windows must be at least 1");
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    }

    try {
        fs::create_directories(fs::path(out_dir) / "runs");
        cpa::BatchOptions options;
        options.windows = windows;
        options.threads = threads;
        options.trace = trace;
        options.on_record = [&](const cpa::RunRecord& record) {
            const std::string stem = std::to_string(record.batch) + "-" + std::to_string(record.run);
            std::ofstream json(fs::path(out_dir) / "runs" / (stem + ".json"));
            json << cpa::record_json(record, trace).dump(1) << '\n';
            if (trace) {
                std::ofstream lines(fs::path(out_dir) / "runs" / (stem + ".trace.jsonl"));
                lines << record.trace_jsonl;
            }
        };

        auto t0 = std::chrono::steady_clock::now();
        auto result = cpa::run_batches(config, batches, runs, options);
        auto secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

        std::ofstream summary(fs::path(out_dir) / "summary.csv");
        cpa::write_summary_csv(summary, result.stats);
        std::ofstream per_slot(fs::path(out_dir) / "per_slot.csv");
        cpa::write_per_slot_csv(per_slot, result);

        std::cout << batches * runs << " runs in " << secs << " s\n";
        for (const auto& [name, s] : result.stats.overall) {
            std::cout << "  " << name << ": ";
            if (s) std::cout << s->mean << " +- " << s->half_width << '\n';
            else std::cout << "n/a\n";
        }
    } catch (const cpa::InvariantError& e) {
        std::cerr << "invariant violated: " << e.what() << '\n';
        return 3;
    } catch (const cpa::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
