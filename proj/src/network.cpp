#include "clnas/network.hpp"

#include <cmath>

#include "clnas/conv.hpp"
#include "clnas/errors.hpp"

namespace clnas {

int layer_in_dim(const LayerSpec& l) {
    if (const auto* d = std::get_if<DenseSpec>(&l)) return d->in;
    return std::get<ConvSpec>(l).in_dim();
}

int layer_out_dim(const LayerSpec& l) {
    if (const auto* d = std::get_if<DenseSpec>(&l)) return d->out;
    return std::get<ConvSpec>(l).out_dim();
}

int NetLayout::input_dim() const {
    if (layers.empty()) throw ConfigError("empty layout");
    return layer_in_dim(layers.front());
}

int NetLayout::output_dim() const {
    if (layers.empty()) throw ConfigError("empty layout");
    return layer_out_dim(layers.back());
}

void NetLayout::validate(const ParamStore& params) const {
    if (layers.empty()) throw ConfigError("empty layout");
    int cur = input_dim();
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const auto tag = "layer " + std::to_string(i);
        if (layer_in_dim(layers[i]) != cur)
            throw ConfigError(tag + ": expects input dim " + std::to_string(layer_in_dim(layers[i])) +
                              " but receives " + std::to_string(cur));
        if (const auto* d = std::get_if<DenseSpec>(&layers[i])) {
            const auto& w = params.at(d->w);
            if (w.dims != std::vector<std::uint32_t>{static_cast<std::uint32_t>(d->out),
                                                     static_cast<std::uint32_t>(d->in)})
                throw ConfigError(tag + ": weight " + d->w + " has wrong shape");
            const auto& b = params.at(d->b);
            if (b.dims != std::vector<std::uint32_t>{static_cast<std::uint32_t>(d->out)})
                throw ConfigError(tag + ": bias " + d->b + " has wrong shape");
        } else {
            const auto& c = std::get<ConvSpec>(layers[i]);
            if (c.k < 1 || c.k > c.in_h || c.k > c.in_w)
                throw ConfigError(tag + ": kernel " + std::to_string(c.k) + " exceeds input " +
                                  std::to_string(c.in_h) + "x" + std::to_string(c.in_w));
            const auto& w = params.at(c.w);
            if (w.dims != std::vector<std::uint32_t>{
                              static_cast<std::uint32_t>(c.filters), static_cast<std::uint32_t>(c.in_c),
                              static_cast<std::uint32_t>(c.k), static_cast<std::uint32_t>(c.k)})
                throw ConfigError(tag + ": filter bank " + c.w + " has wrong shape");
            const auto& b = params.at(c.b);
            if (b.dims != std::vector<std::uint32_t>{static_cast<std::uint32_t>(c.filters)})
                throw ConfigError(tag + ": bias " + c.b + " has wrong shape");
        }
        cur = layer_out_dim(layers[i]);
    }
}

namespace {

// View a {F, C, k, k} entry as the F x (C*k*k) matrix conv kernels expect.
// The flat layout is row-major over (f, c, ky, kx), so rows are contiguous.
Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>
conv_weight_view(const ParamEntry& e, const ConvSpec& c) {
    return {e.values.data(), c.filters, static_cast<Eigen::Index>(c.in_c) * c.k * c.k};
}

Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>
conv_weight_view(ParamEntry& e, const ConvSpec& c) {
    return {e.values.data(), c.filters, static_cast<Eigen::Index>(c.in_c) * c.k * c.k};
}

} // namespace

Eigen::MatrixXd forward(const ParamStore& params, const NetLayout& layout,
                        const Eigen::MatrixXd& x, ForwardCache* cache) {
    if (x.cols() == 0) throw ConfigError("forward: empty batch");
    if (x.rows() != layout.input_dim())
        throw ConfigError("forward: input dim " + std::to_string(x.rows()) + " does not match layer 0 (" +
                          std::to_string(layout.input_dim()) + ")");
    layout.validate(params);
    if (cache) {
        cache->inputs.clear();
        cache->preacts.clear();
    }
    Eigen::MatrixXd cur = x;
    for (const auto& spec : layout.layers) {
        if (cache) cache->inputs.push_back(cur);
        Eigen::MatrixXd z;
        bool relu = false;
        if (const auto* d = std::get_if<DenseSpec>(&spec)) {
            const auto w = params.at(d->w).matrix();
            const auto& b = params.at(d->b).values;
            z.noalias() = w * cur;
            z.colwise() += b;
            relu = d->relu;
        } else {
            const auto& c = std::get<ConvSpec>(spec);
            z = conv2d_forward(cur, conv_weight_view(params.at(c.w), c), params.at(c.b).values,
                               c.in_c, c.in_h, c.in_w, c.k);
            relu = c.relu;
        }
        if (relu) {
            if (cache) cache->preacts.push_back(z);
            cur = z.cwiseMax(0.0);
        } else {
            if (cache) cache->preacts.emplace_back();
            cur = std::move(z);
        }
    }
    if (cache) cache->inputs.push_back(cur);
    return cur;
}

double mean_cross_entropy(const Eigen::MatrixXd& logits, const std::vector<int>& labels) {
    const Eigen::Index batch = logits.cols();
    if (static_cast<Eigen::Index>(labels.size()) != batch)
        throw ConfigError("labels/batch size mismatch");
    double total = 0.0;
    for (Eigen::Index j = 0; j < batch; ++j) {
        const int y = labels[static_cast<std::size_t>(j)];
        if (y < 0 || y >= logits.rows())
            throw ConfigError("label " + std::to_string(y) + " outside [0," + std::to_string(logits.rows()) + ")");
        const double m = logits.col(j).maxCoeff();
        const double lse = m + std::log((logits.col(j).array() - m).exp().sum());
        total += lse - logits(y, j);
    }
    return total / static_cast<double>(batch);
}

LossGrad loss_and_grad(const ParamStore& params, const NetLayout& layout,
                       const Eigen::MatrixXd& x, const std::vector<int>& labels,
                       int batch_index) {
    ForwardCache cache;
    const Eigen::MatrixXd logits = forward(params, layout, x, &cache);
    LossGrad out;
    out.loss = mean_cross_entropy(logits, labels);
    if (!std::isfinite(out.loss))
        throw NumericError("non-finite loss" +
                           (batch_index >= 0 ? " at batch " + std::to_string(batch_index) : std::string()));
    out.grads = params.zeros_like();

    const Eigen::Index batch = logits.cols();
    // d(mean CE)/d logits = (softmax - onehot) / batch
    Eigen::MatrixXd delta(logits.rows(), batch);
    for (Eigen::Index j = 0; j < batch; ++j) {
        const double m = logits.col(j).maxCoeff();
        Eigen::VectorXd e = (logits.col(j).array() - m).exp();
        delta.col(j) = e / e.sum();
        delta(labels[static_cast<std::size_t>(j)], j) -= 1.0;
    }
    delta /= static_cast<double>(batch);

    for (std::size_t li = layout.layers.size(); li-- > 0;) {
        const auto& spec = layout.layers[li];
        const bool relu = std::holds_alternative<DenseSpec>(spec)
                              ? std::get<DenseSpec>(spec).relu
                              : std::get<ConvSpec>(spec).relu;
        if (relu)
            delta = delta.cwiseProduct((cache.preacts[li].array() > 0.0).cast<double>().matrix());
        const Eigen::MatrixXd& input = cache.inputs[li];
        if (const auto* d = std::get_if<DenseSpec>(&spec)) {
            auto dw = out.grads.at(d->w).matrix();
            dw.noalias() = delta * input.transpose();
            out.grads.at(d->b).values = delta.rowwise().sum();
            if (li > 0) delta = params.at(d->w).matrix().transpose() * delta;
        } else {
            const auto& c = std::get<ConvSpec>(spec);
            Conv2dGrads g = conv2d_backward(input, conv_weight_view(params.at(c.w), c), delta,
                                            c.in_c, c.in_h, c.in_w, c.k);
            auto dwv = conv_weight_view(out.grads.at(c.w), c);
            dwv = g.dw;
            out.grads.at(c.b).values = g.db;
            if (li > 0) delta = std::move(g.dx);
        }
    }
    out.grads.zero_frozen();
    return out;
}

std::vector<int> predict(const ParamStore& params, const NetLayout& layout,
                         const Eigen::MatrixXd& x) {
    const Eigen::MatrixXd logits = forward(params, layout, x);
    std::vector<int> out(static_cast<std::size_t>(logits.cols()));
    for (Eigen::Index j = 0; j < logits.cols(); ++j) {
        int best = 0;
        for (Eigen::Index r = 1; r < logits.rows(); ++r)
            if (logits(r, j) > logits(best, j)) best = static_cast<int>(r);
        out[static_cast<std::size_t>(j)] = best;
    }
    return out;
}

double accuracy(const ParamStore& params, const NetLayout& layout,
                const Eigen::MatrixXd& x, const std::vector<int>& labels) {
    if (labels.empty()) throw ConfigError("accuracy: empty dataset");
    const auto pred = predict(params, layout, x);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < labels.size(); ++i)
        if (pred[i] == labels[i]) ++correct;
    return static_cast<double>(correct) / static_cast<double>(labels.size());
}

} // namespace clnas
