#include "egf/baselines.hpp"

namespace egf {

Eigen::MatrixXd combined_expanded(const Graph& g, const Eigen::VectorXd& b,
                                  const Eigen::VectorXd& a) {
    if (b.size() != g.n || a.size() != g.n)
        throw InputError("combined_expanded: attach vector length mismatch");
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(g.n + 1, g.n + 1);
    out.topLeftCorner(g.n, g.n) = g.adj;
    out.topRightCorner(g.n, 1) = b;
    out.bottomLeftCorner(1, g.n) = a.transpose();
    return out;
}

Eigen::VectorXd apply_single_filter(const Eigen::MatrixXd& adj, const Eigen::VectorXd& x,
                                    const Eigen::VectorXd& h) {
    if (adj.rows() != x.size()) throw InputError("apply_single_filter: dimension mismatch");
    Eigen::VectorXd shifted = x;
    Eigen::VectorXd out = h(0) * x;
    for (Eigen::Index k = 1; k < h.size(); ++k) {
        shifted = adj * shifted;
        out += h(k) * shifted;
    }
    return out;
}

namespace {

Eigen::MatrixXd dense_krylov(const Eigen::MatrixXd& adj, const Eigen::VectorXd& x, int order) {
    Eigen::MatrixXd out(x.size(), order + 1);
    out.col(0) = x;
    for (int k = 1; k <= order; ++k) out.col(k) = adj * out.col(k - 1);
    return out;
}

// Closed-form ridge over accumulated masked normal equations.
Eigen::VectorXd ridge_solve(const Eigen::MatrixXd& gram, const Eigen::VectorXd& rhs,
                            double gamma) {
    Eigen::MatrixXd system = gram;
    system.diagonal().array() += gamma;
    const Eigen::LLT<Eigen::MatrixXd> llt(system);
    if (llt.info() != Eigen::Success)
        throw NumericalError("ridge_solve: rank-deficient design without usable ridge");
    return llt.solve(rhs);
}

}  // namespace

Eigen::VectorXd train_kc1(const TrainingSet& ts, int order, double gamma) {
    if (ts.graph == nullptr || ts.size() == 0) throw InputError("train_kc1: empty training set");
    const Graph& g = *ts.graph;
    Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(order + 1, order + 1);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(order + 1);
    for (const TrainingSample& s : ts.samples) {
        const Eigen::MatrixXd adj = combined_expanded(g, s.b, s.a);
        const Eigen::MatrixXd design = dense_krylov(adj, s.signal.full(), order);
        const Eigen::MatrixXd masked = s.mask.d.asDiagonal() * design;
        gram += design.transpose() * masked;
        rhs += masked.transpose() * s.target.full();
    }
    const double inv = 1.0 / static_cast<double>(ts.size());
    return ridge_solve(gram * inv, rhs * inv, gamma);
}

FilterBank train_kc2(const TrainingSet& ts, int order_in, int order_out,
                     const RegularizerWeights& reg, Task task) {
    if (ts.graph == nullptr || ts.size() == 0) throw InputError("train_kc2: empty training set");
    const Graph& g = *ts.graph;
    QuadraticModel avg;
    DirichletPair psi;
    bool first = true;
    for (const TrainingSample& s : ts.samples) {
        const MomentStatistics det_in = deterministic_moments(s.b);
        const MomentStatistics det_out = deterministic_moments(s.a);
        QuadraticModel qm =
            build_quadratic_model(g, s.target, s.mask, det_in, det_out, order_in, order_out);
        if (first) {
            avg = qm;
            if (task == Task::ssl)
                psi = build_dirichlet_pair(g, s.target, det_in, det_out, order_in, order_out);
            first = false;
            continue;
        }
        avg.delta += qm.delta;
        avg.theta += qm.theta;
        avg.constant += qm.constant;
        if (task == Task::ssl) {
            const DirichletPair p =
                build_dirichlet_pair(g, s.target, det_in, det_out, order_in, order_out);
            psi.psi_in += p.psi_in;
            psi.psi_out += p.psi_out;
        }
    }
    const double inv = 1.0 / static_cast<double>(ts.size());
    avg.delta *= inv;
    avg.theta *= inv;
    avg.constant *= inv;
    if (task == Task::ssl) {
        psi.psi_in *= inv;
        psi.psi_out *= inv;
        return solve_ssl(avg, psi, reg);
    }
    return solve_denoising(avg, reg);
}

Eigen::VectorXd train_it(const TrainingSet& ts, int order, double gamma) {
    if (ts.graph == nullptr || ts.size() == 0) throw InputError("train_it: empty training set");
    const Graph& g = *ts.graph;
    Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(order + 1, order + 1);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(order + 1);
    for (const TrainingSample& s : ts.samples) {
        const Eigen::MatrixXd design = krylov_matrix(g, s.signal.x, order);
        const Eigen::MatrixXd masked = s.mask.existing().asDiagonal() * design;
        gram += design.transpose() * masked;
        rhs += masked.transpose() * s.target.t;
    }
    const double inv = 1.0 / static_cast<double>(ts.size());
    return ridge_solve(gram * inv, rhs * inv, gamma);
}

}  // namespace egf
