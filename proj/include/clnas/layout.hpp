#pragma once

#include <string>
#include <variant>
#include <vector>

#include "clnas/errors.hpp"
#include "clnas/param_store.hpp"

namespace clnas {

/// Fully connected layer: y = W x + b, optional ReLU.
/// Weight entry shape {out, in}, bias {out}.
struct DenseSpec {
    int in = 0;
    int out = 0;
    bool relu = true;
    std::string w;
    std::string b;
};

/// 2-D convolution, stride 1, valid padding: out spatial = in - k + 1.
/// Weight entry shape {filters, in_c, k, k}, bias {filters}.
/// Feature vectors are channel-major: index (c*H + y)*W + x.
struct ConvSpec {
    int in_c = 0;
    int in_h = 0;
    int in_w = 0;
    int filters = 0;
    int k = 0;
    bool relu = true;
    std::string w;
    std::string b;

    int out_h() const { return in_h - k + 1; }
    int out_w() const { return in_w - k + 1; }
    int in_dim() const { return in_c * in_h * in_w; }
    int out_dim() const { return filters * out_h() * out_w(); }
};

using LayerSpec = std::variant<DenseSpec, ConvSpec>;

/// Layer sequence of a concrete network. The last layer produces logits
/// (relu = false there by construction).
struct NetLayout {
    std::vector<LayerSpec> layers;

    int input_dim() const;
    int output_dim() const;

    /// Checks that every named entry exists with the declared shape and that
    /// consecutive layers agree on dimensions. Throws ConfigError naming the
    /// offending layer.
    void validate(const ParamStore& params) const;
};

int layer_in_dim(const LayerSpec& l);
int layer_out_dim(const LayerSpec& l);

} // namespace clnas
