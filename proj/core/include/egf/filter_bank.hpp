#pragma once

#include <Eigen/Dense>

#include "egf/graph.hpp"

namespace egf {

/// Coefficients of the two-filter bank: h_in drives the filter on the
/// incoming-edge expansion, h_out the one on the outgoing-edge expansion.
struct FilterBank {
    Eigen::VectorXd h_in;   ///< length L+1
    Eigen::VectorXd h_out;  ///< length M+1

    int order_in() const { return static_cast<int>(h_in.size()) - 1; }
    int order_out() const { return static_cast<int>(h_out.size()) - 1; }
    Eigen::VectorXd stacked() const;
    static FilterBank from_stacked(const Eigen::VectorXd& h, int order_in, int order_out);
};

/// Signal over the expanded node set: values on the existing nodes plus the
/// scalar at the incoming node.
struct ExpandedSignal {
    Eigen::VectorXd x;
    double x_plus = 0.0;

    Eigen::VectorXd full() const;
};

/// Output of the incoming-direction filter, evaluated through the base-graph
/// Krylov factorization (never by materializing expanded powers). The entry at
/// the incoming node is h_in(0) * x_plus.
Eigen::VectorXd apply_incoming(const Graph& g, const Eigen::VectorXd& b,
                               const ExpandedSignal& s, const Eigen::VectorXd& h_in);

/// Output of the outgoing-direction filter. The existing-node block is
/// independent of x_plus and of the attach vector.
Eigen::VectorXd apply_outgoing(const Graph& g, const Eigen::VectorXd& a,
                               const ExpandedSignal& s, const Eigen::VectorXd& h_out);

/// (n+1) x (L+M+2) design matrix W such that W * [h_in; h_out] equals
/// apply_incoming + apply_outgoing for every coefficient choice.
Eigen::MatrixXd build_design_matrix(const Graph& g, const Eigen::VectorXd& b,
                                    const Eigen::VectorXd& a, const ExpandedSignal& s,
                                    int order_in, int order_out);

}  // namespace egf
