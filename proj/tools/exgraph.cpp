// Command-line front end: denoising and label-propagation experiments over
// stochastically expanding graphs, plus sampling-based validation of the
// closed-form expectations and a synthetic-data writer.

#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "egf/experiments.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfigError = 1;
constexpr int kExitValidationFailure = 2;
constexpr int kExitNumericalFailure = 3;

struct CommonOptions {
    std::string config_path;
    std::string out_dir = "out";
    std::uint64_t seed = 0;
    bool seed_given = false;
    bool full_scale = false;
};

void attach_common(CLI::App* cmd, CommonOptions& opts) {
    cmd->add_option("--config", opts.config_path, "experiment config file (key = value lines)");
    cmd->add_option("--out", opts.out_dir, "output directory");
    cmd->add_option("--seed", opts.seed, "master seed override")
        ->each([&](const std::string&) { opts.seed_given = true; });
    cmd->add_flag("--full-scale", opts.full_scale, "run the full-size experiment");
}

egf::ExperimentConfig resolve_config(const CommonOptions& opts, egf::Task task) {
    egf::ExperimentConfig cfg;
    if (!opts.config_path.empty()) cfg = egf::ExperimentConfig::load(opts.config_path);
    else cfg.task = task;
    if (cfg.task != task) throw egf::InputError("config task does not match the subcommand");
    if (opts.seed_given) cfg.seed = opts.seed;
    if (opts.full_scale) cfg.apply_full_scale();
    cfg.validate();
    return cfg;
}

void print_rows(const std::vector<egf::ResultRow>& rows) {
    for (const egf::ResultRow& r : rows)
        std::printf("%s %s %s mean=%.6g std=%.6g\n", r.setting.c_str(), r.method.c_str(),
                    r.metric.c_str(), r.mean, r.stddev);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"polynomial graph-filter banks over expanding graphs"};
    app.require_subcommand(1);

    CommonOptions denoise_opts, ssl_opts, validate_opts, gen_opts;
    std::string corrupt;

    CLI::App* denoise = app.add_subcommand("denoise", "signal denoising experiment");
    attach_common(denoise, denoise_opts);
    CLI::App* ssl = app.add_subcommand("ssl", "semi-supervised node labelling experiment");
    attach_common(ssl, ssl_opts);
    CLI::App* validate =
        app.add_subcommand("validate", "check closed-form expectations against sampling");
    attach_common(validate, validate_opts);
    validate->add_option("--corrupt", corrupt,
                         "fault-injection hook: perturb one block (delta, theta, psi_in, psi_out)");
    CLI::App* gen = app.add_subcommand("gen-data", "write a synthetic graph and signal batch");
    attach_common(gen, gen_opts);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfigError;
    }

    try {
        if (denoise->parsed()) {
            const egf::ExperimentConfig cfg = resolve_config(denoise_opts, egf::Task::denoise);
            print_rows(egf::run_denoising(cfg, denoise_opts.out_dir));
        } else if (ssl->parsed()) {
            const egf::ExperimentConfig cfg = resolve_config(ssl_opts, egf::Task::ssl);
            print_rows(egf::run_ssl(cfg, ssl_opts.out_dir));
        } else if (validate->parsed()) {
            egf::ExperimentConfig cfg;
            if (!validate_opts.config_path.empty())
                cfg = egf::ExperimentConfig::load(validate_opts.config_path);
            if (validate_opts.seed_given) cfg.seed = validate_opts.seed;
            cfg.validate();
            const egf::ValidationReport report = egf::run_validation(cfg, corrupt);
            for (const egf::ValidationCheck& c : report.checks)
                std::printf("%-32s statistic=%.6g threshold=%.3g %s\n", c.name.c_str(),
                            c.statistic, c.threshold, c.pass ? "pass" : "FAIL");
            if (!report.all_pass()) return kExitValidationFailure;
        } else if (gen->parsed()) {
            egf::ExperimentConfig cfg;
            if (!gen_opts.config_path.empty())
                cfg = egf::ExperimentConfig::load(gen_opts.config_path);
            if (gen_opts.seed_given) cfg.seed = gen_opts.seed;
            if (gen_opts.full_scale) cfg.apply_full_scale();
            cfg.validate();
            egf::run_gen_data(cfg, gen_opts.out_dir);
        }
    } catch (const egf::InputError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfigError;
    } catch (const egf::UnsupportedError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfigError;
    } catch (const egf::NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kExitNumericalFailure;
    } catch (const std::exception& e) {
        std::cerr << "failure: " << e.what() << '\n';
        return kExitNumericalFailure;
    }
    return kExitOk;
}
