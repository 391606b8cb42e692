#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <Eigen/Core>

#include "clnas/config.hpp"
#include "clnas/runner.hpp"

int main(int argc, char** argv) {
    if (const char* env = std::getenv("CLNAS_THREADS")) {
        const int n = std::atoi(env);
        if (n > 0) Eigen::setNbThreads(n);
    }

    CLI::App app{"continual-learning architecture search over a shared hyper-network"};
    app.require_subcommand(1);

    std::string config_path, out_dir;
    std::vector<std::string> overrides;
    CLI::App* run = app.add_subcommand("run", "run a task sequence and write its artifacts");
    run->add_option("--config", config_path, "key=value experiment file");
    run->add_option("--set", overrides, "single key=value override (repeatable)");
    run->add_option("--out", out_dir, "run directory (overrides the config's 'out')");

    std::string report_dir;
    CLI::App* report = app.add_subcommand("report", "print summary tables for a finished run");
    report->add_option("dir", report_dir, "run directory")->required();

    std::string audit_dir;
    CLI::App* audit =
        app.add_subcommand("audit", "re-verify a run directory bit-exactly (exit 1 on drift)");
    audit->add_option("dir", audit_dir, "run directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (run->parsed()) {
            clnas::ExperimentConfig cfg =
                config_path.empty() ? clnas::ExperimentConfig::parse_text("", overrides)
                                    : clnas::ExperimentConfig::parse_file(config_path, overrides);
            if (!out_dir.empty()) cfg.out = out_dir;
            const clnas::RunResult r = clnas::run_sequence(cfg);
            for (const clnas::TaskRecord& rec : r.prov.tasks)
                std::printf("task %d: test_acc=%.4f params=%lld new=%d reused_old=%d (%.1fs)\n",
                            rec.task, rec.test_acc, rec.param_count, rec.new_count,
                            rec.reused_old, rec.seconds);
            if (r.skipped_updates > 0)
                std::printf("note: %d policy update(s) skipped on non-finite gradients\n",
                            r.skipped_updates);
            for (const std::string& w : r.warnings) std::printf("warning: %s\n", w.c_str());
            if (!cfg.out.empty()) std::printf("artifacts: %s\n", cfg.out.c_str());
            return 0;
        }
        if (report->parsed()) return clnas::write_report(report_dir, std::cout);
        if (audit->parsed()) return clnas::audit_run(audit_dir, std::cout).ok ? 0 : 1;
    } catch (const clnas::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 2;
}
