#include "egf/filter_bank.hpp"

namespace egf {

Eigen::VectorXd FilterBank::stacked() const {
    Eigen::VectorXd h(h_in.size() + h_out.size());
    h << h_in, h_out;
    return h;
}

FilterBank FilterBank::from_stacked(const Eigen::VectorXd& h, int order_in, int order_out) {
    if (h.size() != order_in + order_out + 2)
        throw InputError("FilterBank::from_stacked: length mismatch");
    return FilterBank{h.head(order_in + 1), h.tail(order_out + 1)};
}

Eigen::VectorXd ExpandedSignal::full() const {
    Eigen::VectorXd out(x.size() + 1);
    out << x, x_plus;
    return out;
}

namespace {

// Existing-node block of the incoming filter design: L_x + x_plus * Lbar_b.
Eigen::MatrixXd incoming_block(const Graph& g, const Eigen::VectorXd& b,
                               const ExpandedSignal& s, int order) {
    Eigen::MatrixXd block = krylov_matrix(g, s.x, order);
    if (order >= 1) block += s.x_plus * shifted_krylov(g, b, order);
    return block;
}

}  // namespace

Eigen::VectorXd apply_incoming(const Graph& g, const Eigen::VectorXd& b,
                               const ExpandedSignal& s, const Eigen::VectorXd& h_in) {
    if (b.size() != g.n || s.x.size() != g.n)
        throw InputError("apply_incoming: dimension mismatch");
    const int order = static_cast<int>(h_in.size()) - 1;
    if (order < 0) throw InputError("apply_incoming: empty coefficient vector");
    Eigen::VectorXd out(g.n + 1);
    out.head(g.n) = incoming_block(g, b, s, order) * h_in;
    out(g.n) = h_in(0) * s.x_plus;
    return out;
}

Eigen::VectorXd apply_outgoing(const Graph& g, const Eigen::VectorXd& a,
                               const ExpandedSignal& s, const Eigen::VectorXd& h_out) {
    if (a.size() != g.n || s.x.size() != g.n)
        throw InputError("apply_outgoing: dimension mismatch");
    const int order = static_cast<int>(h_out.size()) - 1;
    if (order < 0) throw InputError("apply_outgoing: empty coefficient vector");
    const Eigen::MatrixXd m_x = krylov_matrix(g, s.x, order);
    Eigen::VectorXd out(g.n + 1);
    out.head(g.n) = m_x * h_out;
    // m_hat = Mbar_x^T a + x_M; entry 0 collects h_out(0) * x_plus.
    Eigen::VectorXd m_hat = Eigen::VectorXd::Zero(order + 1);
    if (order >= 1) m_hat = shifted_krylov(g, s.x, order).transpose() * a;
    m_hat(0) += s.x_plus;
    out(g.n) = m_hat.dot(h_out);
    return out;
}

Eigen::MatrixXd build_design_matrix(const Graph& g, const Eigen::VectorXd& b,
                                    const Eigen::VectorXd& a, const ExpandedSignal& s,
                                    int order_in, int order_out) {
    if (b.size() != g.n || a.size() != g.n || s.x.size() != g.n)
        throw InputError("build_design_matrix: dimension mismatch");
    if (order_in < 0 || order_out < 0)
        throw InputError("build_design_matrix: orders must be >= 0");
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(g.n + 1, order_in + order_out + 2);
    w.topLeftCorner(g.n, order_in + 1) = incoming_block(g, b, s, order_in);
    w(g.n, 0) = s.x_plus;
    w.block(0, order_in + 1, g.n, order_out + 1) = krylov_matrix(g, s.x, order_out);
    Eigen::VectorXd m_hat = Eigen::VectorXd::Zero(order_out + 1);
    if (order_out >= 1) m_hat = shifted_krylov(g, s.x, order_out).transpose() * a;
    m_hat(0) += s.x_plus;
    w.block(g.n, order_in + 1, 1, order_out + 1) = m_hat.transpose();
    return w;
}

}  // namespace egf
