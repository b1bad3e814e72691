#pragma once

#include <Eigen/Dense>

#include "egf/attachment.hpp"
#include "egf/graph.hpp"

namespace egf {

/// Diagonal 0/1 sampling mask over the expanded node set.
struct SampleMask {
    Eigen::VectorXd d;  ///< length n+1, entries in {0, 1}

    static SampleMask all(int n_plus_one);
    void validate() const;
    Eigen::VectorXd existing() const { return d.head(d.size() - 1); }
    double d_plus() const { return d(d.size() - 1); }
};

/// True signal, incoming value and observation-noise variance.
struct NoisyTarget {
    Eigen::VectorXd t;
    double t_plus = 0.0;
    double sigma2 = 0.0;

    void validate() const;
    Eigen::VectorXd full() const;
};

/// Quadratic MSE model: MSE_D(h) = h' delta h - 2 h' theta + constant.
struct QuadraticModel {
    Eigen::MatrixXd delta;
    Eigen::VectorXd theta;
    double constant = 0.0;
    int order_in = 0;
    int order_out = 0;

    auto delta11() const { return delta.topLeftCorner(order_in + 1, order_in + 1); }
    auto delta12() const { return delta.topRightCorner(order_in + 1, order_out + 1); }
    auto delta22() const { return delta.bottomRightCorner(order_out + 1, order_out + 1); }
    double mse(const Eigen::VectorXd& h) const;
};

/// Expected 2-Dirichlet energy matrices of the two filter outputs: the energy
/// of each side is the quadratic form of its coefficients in these
/// (symmetrized) matrices.
struct DirichletPair {
    Eigen::MatrixXd psi_in;
    Eigen::MatrixXd psi_out;
};

/// blktr(Z, Y): entry (i, j) is trace(Y * Z_ij) over the n x n blocks of Z.
Eigen::MatrixXd block_trace(const Eigen::MatrixXd& z, const Eigen::MatrixXd& y);

/// E[L_x' C M_x] over Gaussian noise x = t + n: equals L_t' C M_t plus the
/// sigma^2 per-block trace correction; entry (i, j) of the correction is
/// sigma^2 * trace((A^i)' C A^j).
Eigen::MatrixXd expected_gram(const Graph& g, const Eigen::MatrixXd& c,
                              const Eigen::VectorXd& t, double sigma2,
                              int order_left, int order_right);

// Each closed-form block is assembled from separately named addends so a
// mismatch against the Monte-Carlo oracle can be bisected to one term.

struct Delta11Parts {
    Eigen::MatrixXd signal_gram;    ///< E[L_x' D L_x]
    Eigen::MatrixXd mean_cross;     ///< t+ (L_t' D Lbar_mu + Lbar_mu' D L_t)
    Eigen::MatrixXd attach_second;  ///< (t+^2 + s^2)(Lbar_mu' D Lbar_mu + blktr(Lbar' D Lbar, Sigma))
    Eigen::MatrixXd corner;         ///< d+ diag(t+^2 + s^2, 0)
    Eigen::MatrixXd total() const { return signal_gram + mean_cross + attach_second + corner; }
};

struct Delta12Parts {
    Eigen::MatrixXd signal_gram;  ///< E[L_x' D M_x]
    Eigen::MatrixXd mean_cross;   ///< t+ Lbar_mu' D M_t
    Eigen::MatrixXd corner;       ///< d+ (t_L mu_o' Mbar_t + T_LM)
    Eigen::MatrixXd total() const { return signal_gram + mean_cross + corner; }
};

struct Delta22Parts {
    Eigen::MatrixXd signal_gram;    ///< E[M_x' D M_x]
    Eigen::MatrixXd attach_second;  ///< d+ blktr(Mbar' R_o Mbar, s^2 I + t t')
    Eigen::MatrixXd mean_cross;     ///< d+ (Mbar_t' mu_o t_M' + t_M mu_o' Mbar_t)
    Eigen::MatrixXd corner;         ///< d+ diag(t+^2 + s^2, 0)
    Eigen::MatrixXd total() const { return signal_gram + attach_second + mean_cross + corner; }
};

struct ThetaParts {
    Eigen::VectorXd upper;  ///< (L_t + t+ Lbar_mu)' D t + t+ d+ t_L
    Eigen::VectorXd lower;  ///< M_t' D t + d+ t+ (Mbar_t' mu_o + t_M)
    Eigen::VectorXd total() const;
};

Delta11Parts build_delta11(const Graph& g, const NoisyTarget& target, const SampleMask& mask,
                           const MomentStatistics& stats_in, int order_in);
Delta12Parts build_delta12(const Graph& g, const NoisyTarget& target, const SampleMask& mask,
                           const MomentStatistics& stats_in, const MomentStatistics& stats_out,
                           int order_in, int order_out);
Delta22Parts build_delta22(const Graph& g, const NoisyTarget& target, const SampleMask& mask,
                           const MomentStatistics& stats_out, int order_out);
ThetaParts build_theta_parts(const Graph& g, const NoisyTarget& target, const SampleMask& mask,
                             const MomentStatistics& stats_in, const MomentStatistics& stats_out,
                             int order_in, int order_out);

/// Full quadratic MSE model; delta is symmetrized as (X + X') / 2.
QuadraticModel build_quadratic_model(const Graph& g, const NoisyTarget& target,
                                     const SampleMask& mask, const MomentStatistics& stats_in,
                                     const MomentStatistics& stats_out, int order_in,
                                     int order_out);

struct PsiInParts {
    Eigen::MatrixXd smooth_gram;   ///< (L_t + t+ Lbar_mu)' G (L_t + t+ Lbar_mu) + t+^2 blktr(Lbar' G Lbar, Sigma)
    Eigen::MatrixXd mean_cross;    ///< -(S + S') with S = t_L (mu' (I-A) Lhat in expectation)
    Eigen::MatrixXd corner;        ///< (tr(Sigma) + mu'mu + 1) diag(t+^2, 0)
    Eigen::MatrixXd total() const { return smooth_gram + mean_cross + corner; }
};

struct PsiOutParts {
    Eigen::MatrixXd smooth_gram;  ///< M_t' (G + R_o) M_t
    Eigen::MatrixXd mean_cross;   ///< -(C + C') with C = M_t' R_o Mbar_t + M_t' mu_o t_M'
    Eigen::MatrixXd tail;         ///< Mbar_t' R_o Mbar_t + Mbar_t' mu_o t_M' + t_M mu_o' Mbar_t + t_M t_M'
    Eigen::MatrixXd total() const { return smooth_gram + mean_cross + tail; }
};

PsiInParts build_psi_in_parts(const Graph& g, const NoisyTarget& target,
                              const MomentStatistics& stats_in, int order_in);
PsiOutParts build_psi_out_parts(const Graph& g, const NoisyTarget& target,
                                const MomentStatistics& stats_out, int order_out);

/// Symmetrized expected 2-Dirichlet matrix of the incoming-side output,
/// evaluated at clean labels (x+ = t+).
Eigen::MatrixXd build_psi_in(const Graph& g, const NoisyTarget& target,
                             const MomentStatistics& stats_in, int order_in);
Eigen::MatrixXd build_psi_out(const Graph& g, const NoisyTarget& target,
                              const MomentStatistics& stats_out, int order_out);

DirichletPair build_dirichlet_pair(const Graph& g, const NoisyTarget& target,
                                   const MomentStatistics& stats_in,
                                   const MomentStatistics& stats_out, int order_in,
                                   int order_out);

}  // namespace egf
