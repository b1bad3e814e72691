#include "egf/moments.hpp"

#include <vector>

namespace egf {

SampleMask SampleMask::all(int n_plus_one) {
    return SampleMask{Eigen::VectorXd::Ones(n_plus_one)};
}

void SampleMask::validate() const {
    if (d.size() < 1) throw InputError("SampleMask: empty mask");
    for (Eigen::Index i = 0; i < d.size(); ++i)
        if (d(i) != 0.0 && d(i) != 1.0)
            throw InputError("SampleMask: entries must be 0 or 1");
}

void NoisyTarget::validate() const {
    if (!t.allFinite() || !std::isfinite(t_plus))
        throw InputError("NoisyTarget: non-finite values");
    if (sigma2 < 0.0) throw InputError("NoisyTarget: sigma2 must be >= 0");
}

Eigen::VectorXd NoisyTarget::full() const {
    Eigen::VectorXd out(t.size() + 1);
    out << t, t_plus;
    return out;
}

double QuadraticModel::mse(const Eigen::VectorXd& h) const {
    return h.dot(delta * h) - 2.0 * h.dot(theta) + constant;
}

Eigen::MatrixXd block_trace(const Eigen::MatrixXd& z, const Eigen::MatrixXd& y) {
    const Eigen::Index n = y.rows();
    if (y.cols() != n) throw InputError("block_trace: Y must be square");
    if (n == 0 || z.rows() % n != 0 || z.cols() % n != 0)
        throw InputError("block_trace: Z dimensions must be multiples of n");
    const Eigen::Index p = z.rows() / n;
    const Eigen::Index q = z.cols() / n;
    Eigen::MatrixXd u(p, q);
    for (Eigen::Index i = 0; i < p; ++i)
        for (Eigen::Index j = 0; j < q; ++j)
            u(i, j) = (y * z.block(i * n, j * n, n, n)).trace();
    return u;
}

namespace {

std::vector<Eigen::MatrixXd> adjacency_powers(const Graph& g, int k_max) {
    std::vector<Eigen::MatrixXd> pows;
    pows.reserve(k_max + 1);
    pows.push_back(Eigen::MatrixXd::Identity(g.n, g.n));
    for (int k = 1; k <= k_max; ++k) pows.push_back(g.adj * pows.back());
    return pows;
}

// Entry (i, j) = trace(Y * P_i' * C * P_j) where P_k = A^k, or A^{k-1} with a
// zero matrix at k = 0 when the side is shifted. This is the blktr(..., Y)
// pattern shared by every sigma^2 / covariance correction.
Eigen::MatrixXd power_block_trace(const std::vector<Eigen::MatrixXd>& pows,
                                  const Eigen::MatrixXd& c, const Eigen::MatrixXd& y,
                                  int order_left, int order_right, bool shift_left,
                                  bool shift_right) {
    Eigen::MatrixXd u = Eigen::MatrixXd::Zero(order_left + 1, order_right + 1);
    for (int j = 0; j <= order_right; ++j) {
        if (shift_right && j == 0) continue;
        const Eigen::MatrixXd& pj = pows[shift_right ? j - 1 : j];
        const Eigen::MatrixXd rhs = c * pj * y;
        for (int i = 0; i <= order_left; ++i) {
            if (shift_left && i == 0) continue;
            const Eigen::MatrixXd& pi = pows[shift_left ? i - 1 : i];
            u(i, j) = pi.cwiseProduct(rhs).sum();
        }
    }
    return u;
}

Eigen::MatrixXd shifted_or_zero(const Graph& g, const Eigen::VectorXd& x, int order) {
    if (order >= 1) return shifted_krylov(g, x, order);
    return Eigen::MatrixXd::Zero(g.n, 1);
}

Eigen::VectorXd basis_scaled(int size, double value) {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(size);
    v(0) = value;
    return v;
}

Eigen::MatrixXd symmetrized(const Eigen::MatrixXd& x) {
    return (x + x.transpose()) / 2.0;
}

}  // namespace

Eigen::MatrixXd expected_gram(const Graph& g, const Eigen::MatrixXd& c,
                              const Eigen::VectorXd& t, double sigma2,
                              int order_left, int order_right) {
    if (c.rows() != g.n || c.cols() != g.n)
        throw InputError("expected_gram: C must be n x n");
    if (sigma2 < 0.0) throw InputError("expected_gram: sigma2 must be >= 0");
    const Eigen::MatrixXd lt = krylov_matrix(g, t, order_left);
    const Eigen::MatrixXd mt = krylov_matrix(g, t, order_right);
    Eigen::MatrixXd out = lt.transpose() * c * mt;
    if (sigma2 > 0.0) {
        const auto pows = adjacency_powers(g, std::max(order_left, order_right));
        out += sigma2 * power_block_trace(pows, c, Eigen::MatrixXd::Identity(g.n, g.n),
                                          order_left, order_right, false, false);
    }
    return out;
}

Delta11Parts build_delta11(const Graph& g, const NoisyTarget& target, const SampleMask& mask,
                           const MomentStatistics& stats_in, int order_in) {
    target.validate();
    if (target.t.size() != g.n || stats_in.mu.size() != g.n)
        throw InputError("build_delta11: dimension mismatch");
    const int l = order_in;
    const Eigen::MatrixXd d = mask.existing().asDiagonal();
    const auto pows = adjacency_powers(g, l);
    const Eigen::MatrixXd lt = krylov_matrix(g, target.t, l);
    const Eigen::MatrixXd lbar_mu = shifted_or_zero(g, stats_in.mu, l);
    const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(g.n, g.n);
    const double tp = target.t_plus;
    const double s2 = target.sigma2;

    Delta11Parts parts;
    parts.signal_gram = lt.transpose() * d * lt +
                        s2 * power_block_trace(pows, d, eye, l, l, false, false);
    parts.mean_cross = tp * (lt.transpose() * d * lbar_mu + lbar_mu.transpose() * d * lt);
    parts.attach_second =
        (tp * tp + s2) * (lbar_mu.transpose() * d * lbar_mu +
                          power_block_trace(pows, d, stats_in.sigma, l, l, true, true));
    parts.corner = Eigen::MatrixXd::Zero(l + 1, l + 1);
    parts.corner(0, 0) = mask.d_plus() * (tp * tp + s2);
    return parts;
}

Delta12Parts build_delta12(const Graph& g, const NoisyTarget& target, const SampleMask& mask,
                           const MomentStatistics& stats_in, const MomentStatistics& stats_out,
                           int order_in, int order_out) {
    const int l = order_in;
    const int m = order_out;
    const Eigen::MatrixXd d = mask.existing().asDiagonal();
    const auto pows = adjacency_powers(g, std::max(l, m));
    const Eigen::MatrixXd lt = krylov_matrix(g, target.t, l);
    const Eigen::MatrixXd mt = krylov_matrix(g, target.t, m);
    const Eigen::MatrixXd lbar_mu = shifted_or_zero(g, stats_in.mu, l);
    const Eigen::MatrixXd mbar_t = shifted_or_zero(g, target.t, m);
    const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(g.n, g.n);
    const double tp = target.t_plus;
    const double s2 = target.sigma2;

    Delta12Parts parts;
    parts.signal_gram = lt.transpose() * d * mt +
                        s2 * power_block_trace(pows, d, eye, l, m, false, false);
    parts.mean_cross = tp * lbar_mu.transpose() * d * mt;
    parts.corner = Eigen::MatrixXd::Zero(l + 1, m + 1);
    parts.corner.row(0) = tp * (mbar_t.transpose() * stats_out.mu).transpose();
    parts.corner(0, 0) += tp * tp + s2;
    parts.corner *= mask.d_plus();
    return parts;
}

Delta22Parts build_delta22(const Graph& g, const NoisyTarget& target, const SampleMask& mask,
                           const MomentStatistics& stats_out, int order_out) {
    const int m = order_out;
    const Eigen::MatrixXd d = mask.existing().asDiagonal();
    const auto pows = adjacency_powers(g, m);
    const Eigen::MatrixXd mt = krylov_matrix(g, target.t, m);
    const Eigen::MatrixXd mbar_t = shifted_or_zero(g, target.t, m);
    const Eigen::MatrixXd r_out = stats_out.second_moment();
    const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(g.n, g.n);
    const Eigen::VectorXd t_m = basis_scaled(m + 1, target.t_plus);
    const double tp = target.t_plus;
    const double s2 = target.sigma2;
    const double dp = mask.d_plus();

    Delta22Parts parts;
    parts.signal_gram = mt.transpose() * d * mt +
                        s2 * power_block_trace(pows, d, eye, m, m, false, false);
    // blktr(Mbar' R Mbar, s^2 I + t t') split as Mbar_t' R Mbar_t + s^2 blktr(..., I).
    parts.attach_second =
        dp * (mbar_t.transpose() * r_out * mbar_t +
              s2 * power_block_trace(pows, r_out, eye, m, m, true, true));
    const Eigen::VectorXd mbar_mu = mbar_t.transpose() * stats_out.mu;
    parts.mean_cross = dp * (mbar_mu * t_m.transpose() + t_m * mbar_mu.transpose());
    parts.corner = Eigen::MatrixXd::Zero(m + 1, m + 1);
    parts.corner(0, 0) = dp * (tp * tp + s2);
    return parts;
}

Eigen::VectorXd ThetaParts::total() const {
    Eigen::VectorXd out(upper.size() + lower.size());
    out << upper, lower;
    return out;
}

ThetaParts build_theta_parts(const Graph& g, const NoisyTarget& target, const SampleMask& mask,
                             const MomentStatistics& stats_in, const MomentStatistics& stats_out,
                             int order_in, int order_out) {
    const Eigen::MatrixXd lt = krylov_matrix(g, target.t, order_in);
    const Eigen::MatrixXd mt = krylov_matrix(g, target.t, order_out);
    const Eigen::MatrixXd lbar_mu = shifted_or_zero(g, stats_in.mu, order_in);
    const Eigen::MatrixXd mbar_t = shifted_or_zero(g, target.t, order_out);
    const Eigen::VectorXd masked_t = mask.existing().cwiseProduct(target.t);
    const double tp = target.t_plus;
    const double dp = mask.d_plus();

    ThetaParts parts;
    parts.upper = (lt + tp * lbar_mu).transpose() * masked_t +
                  tp * dp * basis_scaled(order_in + 1, tp);
    parts.lower = mt.transpose() * masked_t +
                  dp * tp * (mbar_t.transpose() * stats_out.mu +
                             basis_scaled(order_out + 1, tp));
    return parts;
}

QuadraticModel build_quadratic_model(const Graph& g, const NoisyTarget& target,
                                     const SampleMask& mask, const MomentStatistics& stats_in,
                                     const MomentStatistics& stats_out, int order_in,
                                     int order_out) {
    mask.validate();
    target.validate();
    if (mask.d.size() != g.n + 1) throw InputError("build_quadratic_model: mask length mismatch");
    const int l = order_in;
    const int m = order_out;
    QuadraticModel qm;
    qm.order_in = l;
    qm.order_out = m;
    qm.delta = Eigen::MatrixXd::Zero(l + m + 2, l + m + 2);
    qm.delta.topLeftCorner(l + 1, l + 1) = build_delta11(g, target, mask, stats_in, l).total();
    const Eigen::MatrixXd d12 =
        build_delta12(g, target, mask, stats_in, stats_out, l, m).total();
    qm.delta.topRightCorner(l + 1, m + 1) = d12;
    qm.delta.bottomLeftCorner(m + 1, l + 1) = d12.transpose();
    qm.delta.bottomRightCorner(m + 1, m + 1) =
        build_delta22(g, target, mask, stats_out, m).total();
    qm.delta = symmetrized(qm.delta);
    qm.theta = build_theta_parts(g, target, mask, stats_in, stats_out, l, m).total();
    qm.constant = mask.existing().cwiseProduct(target.t).dot(target.t) +
                  mask.d_plus() * target.t_plus * target.t_plus;
    return qm;
}

PsiInParts build_psi_in_parts(const Graph& g, const NoisyTarget& target,
                              const MomentStatistics& stats_in, int order_in) {
    target.validate();
    if (target.t.size() != g.n || stats_in.mu.size() != g.n)
        throw InputError("build_psi_in: dimension mismatch");
    const int l = order_in;
    const Eigen::MatrixXd eye_minus_a = Eigen::MatrixXd::Identity(g.n, g.n) - g.adj;
    const Eigen::MatrixXd gamma = eye_minus_a.transpose() * eye_minus_a;
    const auto pows = adjacency_powers(g, l);
    const Eigen::MatrixXd lt = krylov_matrix(g, target.t, l);
    const Eigen::MatrixXd lbar_mu = shifted_or_zero(g, stats_in.mu, l);
    const double tp = target.t_plus;
    const Eigen::MatrixXd lhat = lt + tp * lbar_mu;

    PsiInParts parts;
    parts.smooth_gram =
        lhat.transpose() * gamma * lhat +
        tp * tp * power_block_trace(pows, gamma, stats_in.sigma, l, l, true, true);

    // Row of E[b' (I - A) Lhat_t]: deterministic part through u = (I - A)' mu,
    // plus the covariance trace on the shifted columns.
    const Eigen::VectorXd u = eye_minus_a.transpose() * stats_in.mu;
    Eigen::RowVectorXd row = u.transpose() * lt + tp * u.transpose() * lbar_mu;
    for (int j = 1; j <= l; ++j) {
        const Eigen::MatrixXd gj = eye_minus_a * pows[j - 1];
        row(j) += tp * stats_in.sigma.cwiseProduct(gj.transpose()).sum();
    }
    const Eigen::MatrixXd s = basis_scaled(l + 1, tp) * row;
    parts.mean_cross = -(s + s.transpose());

    parts.corner = Eigen::MatrixXd::Zero(l + 1, l + 1);
    parts.corner(0, 0) =
        (stats_in.sigma.trace() + stats_in.mu.squaredNorm() + 1.0) * tp * tp;
    return parts;
}

PsiOutParts build_psi_out_parts(const Graph& g, const NoisyTarget& target,
                                const MomentStatistics& stats_out, int order_out) {
    target.validate();
    if (target.t.size() != g.n || stats_out.mu.size() != g.n)
        throw InputError("build_psi_out: dimension mismatch");
    const int m = order_out;
    const Eigen::MatrixXd eye_minus_a = Eigen::MatrixXd::Identity(g.n, g.n) - g.adj;
    const Eigen::MatrixXd gamma = eye_minus_a.transpose() * eye_minus_a;
    const Eigen::MatrixXd mt = krylov_matrix(g, target.t, m);
    const Eigen::MatrixXd mbar_t = shifted_or_zero(g, target.t, m);
    const Eigen::MatrixXd r_out = stats_out.second_moment();
    const Eigen::VectorXd t_m = basis_scaled(m + 1, target.t_plus);

    PsiOutParts parts;
    parts.smooth_gram = mt.transpose() * (gamma + r_out) * mt;
    const Eigen::MatrixXd c = mt.transpose() * r_out * mbar_t +
                              (mt.transpose() * stats_out.mu) * t_m.transpose();
    parts.mean_cross = -(c + c.transpose());
    const Eigen::VectorXd mbar_mu = mbar_t.transpose() * stats_out.mu;
    parts.tail = mbar_t.transpose() * r_out * mbar_t + mbar_mu * t_m.transpose() +
                 t_m * mbar_mu.transpose() + t_m * t_m.transpose();
    return parts;
}

Eigen::MatrixXd build_psi_in(const Graph& g, const NoisyTarget& target,
                             const MomentStatistics& stats_in, int order_in) {
    return symmetrized(build_psi_in_parts(g, target, stats_in, order_in).total());
}

Eigen::MatrixXd build_psi_out(const Graph& g, const NoisyTarget& target,
                              const MomentStatistics& stats_out, int order_out) {
    return symmetrized(build_psi_out_parts(g, target, stats_out, order_out).total());
}

DirichletPair build_dirichlet_pair(const Graph& g, const NoisyTarget& target,
                                   const MomentStatistics& stats_in,
                                   const MomentStatistics& stats_out, int order_in,
                                   int order_out) {
    return DirichletPair{build_psi_in(g, target, stats_in, order_in),
                         build_psi_out(g, target, stats_out, order_out)};
}

}  // namespace egf
