#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "clnas/controller.hpp"

namespace clnas {

/// Layer-level growth decision: strictly more than half of the layer's slots
/// must pick an "-and-extend" action; an exact tie keeps the current size.
/// Permutation-invariant in its input.
bool vote_extend(const std::vector<int>& layer_actions, ActionMode mode);

/// Grows one k x k filter slice to (k+1) x (k+1). The old block is anchored
/// at the top-left (new row at the bottom, new column at the right) so that
/// repeated growth never moves stored coordinates. Each new entry is the mean
/// of its in-bounds 8-neighbors inside the old block; a new entry with no old
/// neighbor falls back to the mean of the whole old block.
Eigen::MatrixXd extend_filter(const Eigen::MatrixXd& old);

/// One conv layer's filters as per-(filter, channel) k x k slices, slice
/// index f * channels + c. All filters in a layer share k.
struct FilterBank {
    int k = 0;
    int channels = 0;
    std::vector<Eigen::MatrixXd> slices;
    std::vector<int> provenance; // per filter, 0 = never trained

    int filters() const {
        return channels == 0 ? 0 : static_cast<int>(slices.size()) / channels;
    }
};

/// Extends every filter in the layer by one, keeping the uniform-k invariant.
/// If k+1 would exceed the layer's input size the bank is returned unchanged
/// and a warning is appended.
FilterBank extend_layer(const FilterBank& bank, int input_h, int input_w,
                        std::vector<std::string>* warnings = nullptr);

} // namespace clnas
