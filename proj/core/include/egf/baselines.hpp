#pragma once

#include <Eigen/Dense>

#include "egf/learning.hpp"

namespace egf {

/// Single expanded adjacency carrying both realized edge directions: incoming
/// column b and outgoing row a superimposed on the base block.
Eigen::MatrixXd combined_expanded(const Graph& g, const Eigen::VectorXd& b,
                                  const Eigen::VectorXd& a);

/// Filter output of a single polynomial filter on a dense adjacency.
Eigen::VectorXd apply_single_filter(const Eigen::MatrixXd& adj, const Eigen::VectorXd& x,
                                    const Eigen::VectorXd& h);

/// Single-filter ridge fit on the combined expanded graphs of the training
/// realizations: minimizes (1/2 gamma) mean ||K_s h - t||_D^2 + (1/2)||h||^2
/// over the stacked per-sample Krylov designs.
Eigen::VectorXd train_kc1(const TrainingSet& ts, int order, double gamma);

/// Filter-bank fit with known connectivity: the proposed pipeline fed
/// per-sample deterministic moments (mu = realized attachment, sigma = 0).
FilterBank train_kc2(const TrainingSet& ts, int order_in, int order_out,
                     const RegularizerWeights& reg, Task task);

/// Inductive transference: ridge filter fit on the existing graph only; the
/// coefficients are applied unchanged on expanded graphs at test time.
Eigen::VectorXd train_it(const TrainingSet& ts, int order, double gamma);

}  // namespace egf
