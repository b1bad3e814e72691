#include "egf/oracle.hpp"

#include <cmath>

namespace egf {

double OracleReport::max_abs_z(const Eigen::MatrixXd& closed_form, double se_floor) const {
    if (closed_form.rows() != estimate.rows() || closed_form.cols() != estimate.cols())
        throw InputError("OracleReport::max_abs_z: shape mismatch");
    double worst = 0.0;
    for (Eigen::Index i = 0; i < estimate.rows(); ++i)
        for (Eigen::Index j = 0; j < estimate.cols(); ++j) {
            const double diff = std::abs(closed_form(i, j) - estimate(i, j));
            const double se = std::max(std_error(i, j), se_floor);
            worst = std::max(worst, diff / se);
        }
    return worst;
}

void StreamingMoments::accumulate(const Eigen::MatrixXd& draw) {
    if (count_ == 0) {
        mean_ = Eigen::MatrixXd::Zero(draw.rows(), draw.cols());
        m2_ = Eigen::MatrixXd::Zero(draw.rows(), draw.cols());
    }
    ++count_;
    const Eigen::MatrixXd delta = draw - mean_;
    mean_ += delta / static_cast<double>(count_);
    m2_ += delta.cwiseProduct(draw - mean_);
}

OracleReport StreamingMoments::report() const {
    if (count_ < 2) throw InputError("StreamingMoments: need at least 2 draws");
    OracleReport rep;
    rep.estimate = mean_;
    rep.std_error =
        (m2_ / static_cast<double>(count_ - 1)).cwiseSqrt() / std::sqrt(static_cast<double>(count_));
    rep.draws = count_;
    return rep;
}

namespace {

Eigen::MatrixXd dense_expanded(const Graph& g, const Eigen::VectorXd& attach, Direction dir) {
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(g.n + 1, g.n + 1);
    out.topLeftCorner(g.n, g.n) = g.adj;
    if (dir == Direction::incoming)
        out.topRightCorner(g.n, 1) = attach;
    else
        out.bottomLeftCorner(1, g.n) = attach.transpose();
    return out;
}

Eigen::MatrixXd dense_power_columns(const Eigen::MatrixXd& adj, const Eigen::VectorXd& x,
                                    int order) {
    Eigen::MatrixXd out(x.size(), order + 1);
    out.col(0) = x;
    for (int k = 1; k <= order; ++k) out.col(k) = adj * out.col(k - 1);
    return out;
}

Eigen::VectorXd gaussian_vector(Eigen::Index size, double stddev, Rng& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::VectorXd out(size);
    for (Eigen::Index i = 0; i < size; ++i) out(i) = stddev * normal(rng);
    return out;
}

}  // namespace

Eigen::MatrixXd naive_design_matrix(const Graph& g, const Eigen::VectorXd& b,
                                    const Eigen::VectorXd& a, const Eigen::VectorXd& x_full,
                                    int order_in, int order_out) {
    if (x_full.size() != g.n + 1) throw InputError("naive_design_matrix: signal length mismatch");
    Eigen::MatrixXd w(g.n + 1, order_in + order_out + 2);
    w.leftCols(order_in + 1) =
        dense_power_columns(dense_expanded(g, b, Direction::incoming), x_full, order_in);
    w.rightCols(order_out + 1) =
        dense_power_columns(dense_expanded(g, a, Direction::outgoing), x_full, order_out);
    return w;
}

OracleReport mc_expected_loss(const Eigen::VectorXd& h, int order_in, int order_out,
                              const Graph& g, const NoisyTarget& target, const SampleMask& mask,
                              const AttachmentModel& model_in, const AttachmentModel& model_out,
                              long draws, Rng& rng) {
    if (draws < 2) throw InputError("mc_expected_loss: draws must be >= 2");
    if (h.size() != order_in + order_out + 2)
        throw InputError("mc_expected_loss: coefficient length does not match orders");
    const double stddev = std::sqrt(target.sigma2);
    const Eigen::VectorXd t_full = target.full();
    StreamingMoments acc;
    for (long r = 0; r < draws; ++r) {
        const Eigen::VectorXd b = sample_attachment(model_in, rng);
        const Eigen::VectorXd a = sample_attachment(model_out, rng);
        const Eigen::VectorXd x_full = t_full + gaussian_vector(g.n + 1, stddev, rng);
        const Eigen::MatrixXd w = naive_design_matrix(g, b, a, x_full, order_in, order_out);
        const Eigen::VectorXd resid = w * h - t_full;
        const double loss = mask.d.cwiseProduct(resid).dot(resid);
        acc.accumulate(Eigen::MatrixXd::Constant(1, 1, loss));
    }
    return acc.report();
}

OracleReport mc_dirichlet(const Eigen::VectorXd& h_side, const Graph& g,
                          const NoisyTarget& target, const AttachmentModel& model,
                          Direction side, long draws, Rng& rng) {
    if (draws < 2) throw InputError("mc_dirichlet: draws must be >= 2");
    const int order = static_cast<int>(h_side.size()) - 1;
    const Eigen::VectorXd t_full = target.full();
    StreamingMoments acc;
    for (long r = 0; r < draws; ++r) {
        const Eigen::VectorXd attach = sample_attachment(model, rng);
        const Eigen::MatrixXd adj = dense_expanded(g, attach, side);
        const Eigen::VectorXd y = dense_power_columns(adj, t_full, order) * h_side;
        const Eigen::VectorXd smooth_resid = y - adj * y;
        acc.accumulate(Eigen::MatrixXd::Constant(1, 1, smooth_resid.squaredNorm()));
    }
    return acc.report();
}

MomentMatrixReports mc_moment_matrices(const Graph& g, const NoisyTarget& target,
                                       const SampleMask& mask, const AttachmentModel& model_in,
                                       const AttachmentModel& model_out, int order_in,
                                       int order_out, long draws, Rng& rng) {
    if (draws < 2) throw InputError("mc_moment_matrices: draws must be >= 2");
    const double stddev = std::sqrt(target.sigma2);
    const Eigen::VectorXd t_full = target.full();
    const Eigen::VectorXd d = mask.d;
    StreamingMoments delta_acc, theta_acc, psi_in_acc, psi_out_acc;
    for (long r = 0; r < draws; ++r) {
        const Eigen::VectorXd b = sample_attachment(model_in, rng);
        const Eigen::VectorXd a = sample_attachment(model_out, rng);
        const Eigen::VectorXd x_full = t_full + gaussian_vector(g.n + 1, stddev, rng);
        const Eigen::MatrixXd w = naive_design_matrix(g, b, a, x_full, order_in, order_out);
        const Eigen::MatrixXd masked = d.asDiagonal() * w;
        delta_acc.accumulate(w.transpose() * masked);
        theta_acc.accumulate(masked.transpose() * t_full);

        // Dirichlet matrices use clean labels and attachment randomness only.
        const Eigen::MatrixXd adj_in = dense_expanded(g, b, Direction::incoming);
        const Eigen::MatrixXd p_in = dense_power_columns(adj_in, t_full, order_in);
        const Eigen::MatrixXd diff_in =
            Eigen::MatrixXd::Identity(g.n + 1, g.n + 1) - adj_in;
        const Eigen::MatrixXd smoothed_in = diff_in * p_in;
        psi_in_acc.accumulate(smoothed_in.transpose() * smoothed_in);

        const Eigen::MatrixXd adj_out = dense_expanded(g, a, Direction::outgoing);
        const Eigen::MatrixXd p_out = dense_power_columns(adj_out, t_full, order_out);
        const Eigen::MatrixXd diff_out =
            Eigen::MatrixXd::Identity(g.n + 1, g.n + 1) - adj_out;
        const Eigen::MatrixXd smoothed_out = diff_out * p_out;
        psi_out_acc.accumulate(smoothed_out.transpose() * smoothed_out);
    }
    return MomentMatrixReports{delta_acc.report(), theta_acc.report(), psi_in_acc.report(),
                               psi_out_acc.report()};
}

OracleReport mc_expected_gram(const Graph& g, const Eigen::MatrixXd& c,
                              const Eigen::VectorXd& t, double sigma2, int order_left,
                              int order_right, long draws, Rng& rng) {
    if (draws < 2) throw InputError("mc_expected_gram: draws must be >= 2");
    const double stddev = std::sqrt(sigma2);
    StreamingMoments acc;
    for (long r = 0; r < draws; ++r) {
        const Eigen::VectorXd x = t + gaussian_vector(g.n, stddev, rng);
        const Eigen::MatrixXd lx = dense_power_columns(g.adj, x, order_left);
        const Eigen::MatrixXd mx = dense_power_columns(g.adj, x, order_right);
        acc.accumulate(lx.transpose() * c * mx);
    }
    return acc.report();
}

}  // namespace egf
