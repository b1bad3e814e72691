#pragma once

#include <Eigen/Dense>

#include "egf/errors.hpp"

namespace egf {

/// Weighted, generally directed graph on n nodes.
///
/// Shift convention: adj(i, j) >= 0 is the weight of the edge carrying signal
/// from node j to node i, so (adj * x)(i) aggregates from the in-neighbours
/// of i.
struct Graph {
    int n = 0;
    Eigen::MatrixXd adj;

    Graph() = default;
    Graph(int n_, Eigen::MatrixXd adj_);

    /// Shift a node signal once: returns adj * x.
    Eigen::VectorXd shift(const Eigen::VectorXd& x) const;
};

enum class Direction { incoming, outgoing };

/// One-node expansion of a base graph.
///
/// incoming: the attach vector occupies the last column (edges leave the new
/// node and land on existing nodes); outgoing: the attach vector occupies the
/// last row. The corner entry is always zero.
struct ExpandedAdjacency {
    Graph base;
    Direction direction = Direction::incoming;
    Eigen::VectorXd attach;

    /// Dense (n+1) x (n+1) adjacency with the block layout above.
    Eigen::MatrixXd materialize() const;
};

/// [x, Ax, ..., A^K x] as an n x (K+1) matrix, built by repeated shifts.
Eigen::MatrixXd krylov_matrix(const Graph& g, const Eigen::VectorXd& x, int order);

/// [0, x, Ax, ..., A^{K-1} x] as an n x (K+1) matrix; column 0 is zero.
Eigen::MatrixXd shifted_krylov(const Graph& g, const Eigen::VectorXd& x, int order);

ExpandedAdjacency expand(const Graph& g, Direction direction, const Eigen::VectorXd& attach);

/// k-th power of the expanded adjacency, assembled from the block closed form
/// (A^k in the top-left, A^{k-1} * attach in the border, corner zero) rather
/// than by repeated dense multiplication. k = 0 returns the identity.
Eigen::MatrixXd expanded_power(const ExpandedAdjacency& e, int k);

}  // namespace egf
