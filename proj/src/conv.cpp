#include "clnas/conv.hpp"

#include "clnas/errors.hpp"

namespace clnas {

namespace {

void check_kernel(int C, int H, int W, int k) {
    if (k < 1 || k > H || k > W)
        throw ConfigError("conv kernel " + std::to_string(k) + " exceeds input " +
                          std::to_string(H) + "x" + std::to_string(W));
    if (C < 1) throw ConfigError("conv needs at least one input channel");
}

// Patch matrix for one sample: (C*k*k) x (OH*OW).
void im2col(const Eigen::Ref<const Eigen::VectorXd>& sample, int C, int H, int W, int k,
            Eigen::MatrixXd& col) {
    const int oh = H - k + 1, ow = W - k + 1;
    for (int c = 0; c < C; ++c)
        for (int ky = 0; ky < k; ++ky)
            for (int kx = 0; kx < k; ++kx) {
                const int row = (c * k + ky) * k + kx;
                for (int y = 0; y < oh; ++y)
                    for (int x = 0; x < ow; ++x)
                        col(row, y * ow + x) = sample[(c * H + y + ky) * W + (x + kx)];
            }
}

} // namespace

Eigen::MatrixXd conv2d_forward(const Eigen::MatrixXd& x, const Eigen::MatrixXd& wmat,
                               const Eigen::VectorXd& bias, int C, int H, int W, int k) {
    check_kernel(C, H, W, k);
    const int oh = H - k + 1, ow = W - k + 1;
    const int F = static_cast<int>(wmat.rows());
    const Eigen::Index batch = x.cols();
    Eigen::MatrixXd out(static_cast<Eigen::Index>(F) * oh * ow, batch);
    Eigen::MatrixXd col(static_cast<Eigen::Index>(C) * k * k, static_cast<Eigen::Index>(oh) * ow);
    for (Eigen::Index b = 0; b < batch; ++b) {
        im2col(x.col(b), C, H, W, k, col);
        // Transposed product: (OH*OW) x F, so the column-major flatten yields
        // the filter-major output layout (f*OH + y)*OW + x.
        Eigen::MatrixXd yt = (wmat * col).transpose();
        yt.rowwise() += bias.transpose();
        out.col(b) = Eigen::Map<Eigen::VectorXd>(yt.data(), yt.size());
    }
    return out;
}

Conv2dGrads conv2d_backward(const Eigen::MatrixXd& x, const Eigen::MatrixXd& wmat,
                            const Eigen::MatrixXd& dout, int C, int H, int W, int k) {
    check_kernel(C, H, W, k);
    const int oh = H - k + 1, ow = W - k + 1;
    const int F = static_cast<int>(wmat.rows());
    const Eigen::Index batch = x.cols();
    Conv2dGrads g;
    g.dx = Eigen::MatrixXd::Zero(x.rows(), batch);
    g.dw = Eigen::MatrixXd::Zero(wmat.rows(), wmat.cols());
    g.db = Eigen::VectorXd::Zero(F);
    Eigen::MatrixXd col(static_cast<Eigen::Index>(C) * k * k, static_cast<Eigen::Index>(oh) * ow);
    for (Eigen::Index b = 0; b < batch; ++b) {
        im2col(x.col(b), C, H, W, k, col);
        // Filter-major flatten means column f of this map is filter f's plane.
        Eigen::Map<const Eigen::MatrixXd> dyt(dout.col(b).data(),
                                              static_cast<Eigen::Index>(oh) * ow, F);
        g.dw.noalias() += dyt.transpose() * col.transpose();
        g.db += dyt.colwise().sum().transpose();
        Eigen::MatrixXd dcol = wmat.transpose() * dyt.transpose(); // (C*k*k) x (OH*OW)
        auto dxb = g.dx.col(b);
        for (int c = 0; c < C; ++c)
            for (int ky = 0; ky < k; ++ky)
                for (int kx = 0; kx < k; ++kx) {
                    const int row = (c * k + ky) * k + kx;
                    for (int y = 0; y < oh; ++y)
                        for (int xx = 0; xx < ow; ++xx)
                            dxb[(c * H + y + ky) * W + (xx + kx)] += dcol(row, y * ow + xx);
                }
    }
    return g;
}

} // namespace clnas
