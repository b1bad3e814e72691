#pragma once

#include <Eigen/Dense>

#include "egf/learning.hpp"
#include "egf/moments.hpp"

namespace egf {

// Independent Monte-Carlo ground truth for the closed-form expectations. All
// estimators here evaluate filters through dense materialized expanded
// adjacencies and share no assembly code with the moments module.

/// Entrywise sample mean and standard error over independent draws.
struct OracleReport {
    Eigen::MatrixXd estimate;
    Eigen::MatrixXd std_error;
    long draws = 0;

    double scalar() const { return estimate(0, 0); }
    double scalar_se() const { return std_error(0, 0); }

    /// Largest |closed_form - estimate| / std_error over all entries.
    /// Entries whose standard error is (numerically) zero must match the
    /// closed form to absolute floor instead.
    double max_abs_z(const Eigen::MatrixXd& closed_form, double se_floor = 1e-9) const;
};

/// Streaming entrywise Welford accumulator for matrix-valued draws.
class StreamingMoments {
public:
    void accumulate(const Eigen::MatrixXd& draw);
    OracleReport report() const;

private:
    long count_ = 0;
    Eigen::MatrixXd mean_;
    Eigen::MatrixXd m2_;
};

/// Design matrix built the naive way: column k of each block is the k-th
/// dense power of the materialized expanded adjacency applied to the full
/// signal vector.
Eigen::MatrixXd naive_design_matrix(const Graph& g, const Eigen::VectorXd& b,
                                    const Eigen::VectorXd& a, const Eigen::VectorXd& x_full,
                                    int order_in, int order_out);

/// E ||W h - t||_D^2 estimated by sampling (b, a, noise) jointly; h is the
/// stacked coefficient vector [h_in; h_out].
OracleReport mc_expected_loss(const Eigen::VectorXd& h, int order_in, int order_out,
                              const Graph& g, const NoisyTarget& target, const SampleMask& mask,
                              const AttachmentModel& model_in, const AttachmentModel& model_out,
                              long draws, Rng& rng);

/// Expected 2-Dirichlet energy of one side's filter output under attachment
/// sampling, with clean labels (x+ = t+).
OracleReport mc_dirichlet(const Eigen::VectorXd& h_side, const Graph& g,
                          const NoisyTarget& target, const AttachmentModel& model,
                          Direction side, long draws, Rng& rng);

struct MomentMatrixReports {
    OracleReport delta;     ///< E[W' D W]
    OracleReport theta;     ///< E[W' D t]
    OracleReport psi_in;    ///< E of the incoming-side Dirichlet matrix
    OracleReport psi_out;   ///< E of the outgoing-side Dirichlet matrix
};

/// Entrywise estimates of all closed-form matrices from shared draws.
MomentMatrixReports mc_moment_matrices(const Graph& g, const NoisyTarget& target,
                                       const SampleMask& mask, const AttachmentModel& model_in,
                                       const AttachmentModel& model_out, int order_in,
                                       int order_out, long draws, Rng& rng);

/// E[L_x' C M_x] over noise draws (the statistical identity's left-hand side).
OracleReport mc_expected_gram(const Graph& g, const Eigen::MatrixXd& c,
                              const Eigen::VectorXd& t, double sigma2, int order_left,
                              int order_right, long draws, Rng& rng);

}  // namespace egf
