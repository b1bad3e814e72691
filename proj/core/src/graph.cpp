#include "egf/graph.hpp"

namespace egf {

Graph::Graph(int n_, Eigen::MatrixXd adj_) : n(n_), adj(std::move(adj_)) {
    if (n < 0) throw InputError("Graph: negative node count");
    if (adj.rows() != n || adj.cols() != n)
        throw InputError("Graph: adjacency must be n x n");
    if (!adj.allFinite()) throw InputError("Graph: adjacency entries must be finite");
    if ((adj.array() < 0.0).any()) throw InputError("Graph: adjacency entries must be >= 0");
}

Eigen::VectorXd Graph::shift(const Eigen::VectorXd& x) const {
    if (x.size() != n) throw InputError("Graph::shift: signal length mismatch");
    return adj * x;
}

Eigen::MatrixXd krylov_matrix(const Graph& g, const Eigen::VectorXd& x, int order) {
    if (order < 0) throw InputError("krylov_matrix: order must be >= 0");
    if (x.size() != g.n) throw InputError("krylov_matrix: signal length mismatch");
    if (!x.allFinite()) throw InputError("krylov_matrix: signal must be finite");
    Eigen::MatrixXd out(g.n, order + 1);
    out.col(0) = x;
    for (int k = 1; k <= order; ++k) out.col(k) = g.adj * out.col(k - 1);
    return out;
}

Eigen::MatrixXd shifted_krylov(const Graph& g, const Eigen::VectorXd& x, int order) {
    if (order < 1) throw InputError("shifted_krylov: order must be >= 1");
    if (x.size() != g.n) throw InputError("shifted_krylov: signal length mismatch");
    Eigen::MatrixXd out(g.n, order + 1);
    out.col(0).setZero();
    out.col(1) = x;
    for (int k = 2; k <= order; ++k) out.col(k) = g.adj * out.col(k - 1);
    return out;
}

ExpandedAdjacency expand(const Graph& g, Direction direction, const Eigen::VectorXd& attach) {
    if (attach.size() != g.n) throw InputError("expand: attach vector length mismatch");
    if (!attach.allFinite()) throw InputError("expand: attach vector must be finite");
    return ExpandedAdjacency{g, direction, attach};
}

Eigen::MatrixXd ExpandedAdjacency::materialize() const {
    const int n = base.n;
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n + 1, n + 1);
    out.topLeftCorner(n, n) = base.adj;
    if (direction == Direction::incoming)
        out.topRightCorner(n, 1) = attach;
    else
        out.bottomLeftCorner(1, n) = attach.transpose();
    return out;
}

Eigen::MatrixXd expanded_power(const ExpandedAdjacency& e, int k) {
    if (k < 0) throw InputError("expanded_power: k must be >= 0");
    const int n = e.base.n;
    if (k == 0) return Eigen::MatrixXd::Identity(n + 1, n + 1);

    Eigen::MatrixXd base_pow = Eigen::MatrixXd::Identity(n, n);  // A^{k-1}
    for (int i = 1; i < k; ++i) base_pow = e.base.adj * base_pow;

    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n + 1, n + 1);
    out.topLeftCorner(n, n) = e.base.adj * base_pow;
    if (e.direction == Direction::incoming)
        out.topRightCorner(n, 1) = base_pow * e.attach;
    else
        out.bottomLeftCorner(1, n) = (base_pow.transpose() * e.attach).transpose();
    return out;
}

}  // namespace egf
