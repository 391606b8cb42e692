#pragma once

#include <Eigen/Core>

namespace clnas {

/// Valid-padding stride-1 correlation.
///   x    : (C*H*W) x B, channel-major per sample (index (c*H + y)*W + xcol)
///   wmat : F x (C*k*k), per filter row index (c*k + ky)*k + kx
///   bias : F
/// Returns (F*OH*OW) x B with OH = H-k+1, OW = W-k+1, index (f*OH + y)*OW + x.
/// Throws ConfigError when k exceeds the input size.
Eigen::MatrixXd conv2d_forward(const Eigen::MatrixXd& x, const Eigen::MatrixXd& wmat,
                               const Eigen::VectorXd& bias, int C, int H, int W, int k);

struct Conv2dGrads {
    Eigen::MatrixXd dx;
    Eigen::MatrixXd dw;
    Eigen::VectorXd db;
};

Conv2dGrads conv2d_backward(const Eigen::MatrixXd& x, const Eigen::MatrixXd& wmat,
                            const Eigen::MatrixXd& dout, int C, int H, int W, int k);

} // namespace clnas
