#pragma once

#include <random>

#include <Eigen/Dense>

#include "egf/errors.hpp"
#include "egf/graph.hpp"

namespace egf {

using Rng = std::mt19937_64;

enum class AttachmentScheme {
    bernoulli,     ///< each endpoint picked independently with probability p_l
    fixed_budget,  ///< m distinct endpoints drawn without replacement, weights p
};

/// Stochastic model of how the incoming node picks its endpoints.
struct AttachmentModel {
    Eigen::VectorXd p;  ///< per-node probabilities (bernoulli) or categorical weights (fixed_budget)
    Eigen::VectorXd w;  ///< edge weight assigned to a chosen endpoint
    int budget = 1;     ///< number of edges under fixed_budget
    AttachmentScheme scheme = AttachmentScheme::fixed_budget;

    int n() const { return static_cast<int>(p.size()); }
    void validate() const;
};

/// First two moments of an attachment vector, empirical or analytic.
/// sample_count == 0 marks analytic moments.
struct MomentStatistics {
    Eigen::VectorXd mu;
    Eigen::MatrixXd sigma;
    long sample_count = 0;

    /// Second-moment matrix sigma + mu * mu^T.
    Eigen::MatrixXd second_moment() const { return sigma + mu * mu.transpose(); }
};

/// Deterministic moments (sigma = 0) of a realized attachment vector. The
/// known-connectivity baselines and the collapse identities run through this.
MomentStatistics deterministic_moments(const Eigen::VectorXd& realized);

AttachmentModel uniform_model(int n, int budget, const Eigen::VectorXd& w);

/// Degree-proportional endpoint weights; degree = in + out degree of the
/// support of the base adjacency.
AttachmentModel preferential_model(const Graph& g, int budget, const Eigen::VectorXd& w);

Eigen::VectorXd sample_attachment(const AttachmentModel& model, Rng& rng);

MomentStatistics estimate_moments(const AttachmentModel& model, long samples, Rng& rng);

/// mu = w o p, sigma = diag(w_l^2 p_l (1 - p_l)); bernoulli scheme only.
MomentStatistics analytic_bernoulli_moments(const AttachmentModel& model);

}  // namespace egf
