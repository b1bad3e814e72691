#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "egf/datasets.hpp"
#include "egf/learning.hpp"

namespace egf {

enum class GraphKind { ba, sensor, external };
enum class AttachmentKind { uniform, preferential };

/// Flat key=value experiment description. Unknown keys are rejected so typos
/// surface instead of silently running defaults.
struct ExperimentConfig {
    Task task = Task::denoise;
    GraphKind graph = GraphKind::ba;
    int n = 50;
    int ba_m = 2;
    int knn_k = 5;
    std::string edge_list;
    std::string signal_csv;
    int order_in = 4;
    int order_out = 4;
    std::vector<double> snr_db = {5.0, 10.0, 20.0};
    std::vector<double> label_fractions = {1.0, 0.5};
    int realizations = 200;
    int test_realizations = 100;
    double split = 0.7;
    int folds = 5;
    long moment_samples = 10000;
    long validate_draws = 200000;
    int bandwidth = 10;
    AttachmentKind attachment = AttachmentKind::uniform;
    double observed_fraction = 0.1;
    std::uint64_t seed = 1;

    /// Defaults overlaid with the file's key=value pairs ('#' comments).
    static ExperimentConfig load(const std::string& path);
    /// Apply one key=value override; throws on unknown keys or bad values.
    void set(const std::string& key, const std::string& value);
    /// Grow the desk-scale defaults to the full-size experiment.
    void apply_full_scale();
    void validate() const;
    /// Stable textual form: one sorted key=value per line.
    std::string canonical() const;
    /// FNV-1a of the canonical form.
    std::uint64_t hash() const;
};

struct ResultRow {
    std::string setting;  ///< "snr=20" or "frac=0.5"
    std::string method;   ///< prop | kc1 | kc2 | it
    std::string metric;   ///< nmse | nmse_plus | ssl_error
    double mean = 0.0;
    double stddev = 0.0;
    std::uint64_t config_hash = 0;
    std::uint64_t seed = 0;
};

/// ||y - t||^2 / ||t||^2; a zero-norm reference is an input error.
double nmse(const Eigen::VectorXd& y, const Eigen::VectorXd& t);

/// Percentage of sign mismatches between y and labels over the nodes where
/// eval_mask is nonzero; sign(0) counts as +1.
double ssl_error(const Eigen::VectorXd& y, const Eigen::VectorXd& labels,
                 const Eigen::VectorXd& eval_mask);

std::uint64_t fnv1a(const std::string& text);

/// Decorrelated per-stream seed derived from the master seed (splitmix64).
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

std::vector<ResultRow> run_denoising(const ExperimentConfig& cfg, const std::string& out_dir);
std::vector<ResultRow> run_ssl(const ExperimentConfig& cfg, const std::string& out_dir);

/// Materialize the configured graph and a batch of smooth signals on disk in
/// the formats load_external reads back.
void run_gen_data(const ExperimentConfig& cfg, const std::string& out_dir);

struct ValidationCheck {
    std::string name;
    double statistic = 0.0;  ///< max |z| or max relative error, per check
    double threshold = 0.0;
    bool pass = false;
};

struct ValidationReport {
    std::vector<ValidationCheck> checks;
    bool all_pass() const;
};

/// Compare every closed-form expectation against sampling on a small seeded
/// instance. `corrupt` names a block ("delta", "theta", "psi_in", "psi_out")
/// to perturb before comparison — a fault-injection hook proving the harness
/// localizes a wrong term; empty means no corruption.
ValidationReport run_validation(const ExperimentConfig& cfg, const std::string& corrupt = "");

}  // namespace egf
