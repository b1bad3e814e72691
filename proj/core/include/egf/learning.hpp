#pragma once

#include <functional>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "egf/filter_bank.hpp"
#include "egf/moments.hpp"

namespace egf {

enum class Task { denoise, ssl };

/// gamma > 0 trades fitting against regularization; alpha in (0, 1) balances
/// the two filters; beta in (0, 1) balances the two Dirichlet penalties (ssl
/// only).
struct RegularizerWeights {
    double gamma = 1.0;
    double alpha = 0.5;
    double beta = 0.5;

    void validate(Task task) const;
};

/// One training realization: the observed expanded signal, its target, the
/// sampling mask and the realized attachment vectors (kept for the
/// known-connectivity baselines and for validation-fold evaluation).
struct TrainingSample {
    ExpandedSignal signal;
    NoisyTarget target;
    SampleMask mask;
    Eigen::VectorXd b;
    Eigen::VectorXd a;
};

struct TrainingSet {
    const Graph* graph = nullptr;
    std::vector<TrainingSample> samples;

    int size() const { return static_cast<int>(samples.size()); }
};

/// Per-sample closed-form builds, cached so cross-validation folds re-average
/// instead of re-assembling.
struct SampleQuadratics {
    std::vector<QuadraticModel> quadratics;
    std::vector<DirichletPair> dirichlets;  // empty unless task == ssl
    int order_in = 0;
    int order_out = 0;

    /// Arithmetic mean over the given sample indices.
    std::pair<QuadraticModel, DirichletPair> average(const std::vector<int>& indices) const;
};

SampleQuadratics build_sample_quadratics(const TrainingSet& ts,
                                         const MomentStatistics& stats_in,
                                         const MomentStatistics& stats_out, int order_in,
                                         int order_out, Task task);

/// Mean of the per-sample closed forms over the whole training set.
std::pair<QuadraticModel, DirichletPair> average_quadratic(
    const TrainingSet& ts, const MomentStatistics& stats_in,
    const MomentStatistics& stats_out, int order_in, int order_out, Task task);

double denoising_objective(const Eigen::VectorXd& h, const QuadraticModel& qm,
                           const RegularizerWeights& reg);
Eigen::VectorXd denoising_gradient(const Eigen::VectorXd& h, const QuadraticModel& qm,
                                   const RegularizerWeights& reg);

double ssl_objective(const Eigen::VectorXd& h, const QuadraticModel& qm,
                     const DirichletPair& dirichlet, const RegularizerWeights& reg);
Eigen::VectorXd ssl_gradient(const Eigen::VectorXd& h, const QuadraticModel& qm,
                             const DirichletPair& dirichlet, const RegularizerWeights& reg);

FilterBank solve_denoising(const QuadraticModel& qm, const RegularizerWeights& reg);
FilterBank solve_ssl(const QuadraticModel& qm, const DirichletPair& dirichlet,
                     const RegularizerWeights& reg);

struct DescentOptions {
    double initial_step = 1.0;
    double armijo = 1e-4;
    int max_iters = 10000;
    double tol = 1e-10;
};

/// Gradient descent with backtracking line search; returns the best iterate.
Eigen::VectorXd descent_fallback(const std::function<double(const Eigen::VectorXd&)>& objective,
                                 const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& gradient,
                                 const Eigen::VectorXd& h0,
                                 const DescentOptions& opts = {});

struct CvGrid {
    std::vector<double> gammas;
    std::vector<double> alphas;
    std::vector<double> betas;  // ignored for denoising

    static CvGrid defaults(Task task);
};

struct CvTraceRow {
    RegularizerWeights reg;
    double mean_metric = 0.0;
};

/// Validation metric for one held-out sample given trained filters; supplied
/// by the caller (NMSE for denoising, misclassification for ssl).
using FoldMetric = std::function<double(const TrainingSample&, const FilterBank&)>;

/// Deterministic k-fold cross-validation over the grid. Ties break toward the
/// larger gamma, then the alpha closest to 0.5, then the beta closest to 0.5.
RegularizerWeights cross_validate(const TrainingSet& ts, const SampleQuadratics& cache,
                                  const CvGrid& grid, int folds, Task task, Rng& rng,
                                  const FoldMetric& metric,
                                  std::vector<CvTraceRow>* trace = nullptr);

}  // namespace egf
