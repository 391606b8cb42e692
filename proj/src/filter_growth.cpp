#include "clnas/filter_growth.hpp"

#include "clnas/errors.hpp"

namespace clnas {

bool vote_extend(const std::vector<int>& layer_actions, ActionMode mode) {
    if (layer_actions.empty()) throw ConfigError("vote over empty layer");
    std::size_t extend = 0;
    for (int a : layer_actions)
        if (action_extends(mode, a)) ++extend;
    return 2 * extend > layer_actions.size();
}

Eigen::MatrixXd extend_filter(const Eigen::MatrixXd& old) {
    const int k = static_cast<int>(old.rows());
    if (k < 1 || old.cols() != k) throw ConfigError("extend_filter expects a square k>=1 filter");
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(k + 1, k + 1);
    out.topLeftCorner(k, k) = old;
    const double block_mean = old.mean();
    for (int y = 0; y <= k; ++y)
        for (int x = 0; x <= k; ++x) {
            if (y < k && x < k) continue; // old block, preserved bit-exactly
            double sum = 0.0;
            int cnt = 0;
            for (int dy = -1; dy <= 1; ++dy)
                for (int dx = -1; dx <= 1; ++dx) {
                    if (dy == 0 && dx == 0) continue;
                    const int ny = y + dy, nx = x + dx;
                    if (ny >= 0 && ny < k && nx >= 0 && nx < k) {
                        sum += old(ny, nx);
                        ++cnt;
                    }
                }
            out(y, x) = cnt > 0 ? sum / cnt : block_mean;
        }
    return out;
}

FilterBank extend_layer(const FilterBank& bank, int input_h, int input_w,
                        std::vector<std::string>* warnings) {
    if (bank.k + 1 > input_h || bank.k + 1 > input_w) {
        if (warnings)
            warnings->push_back("filter size " + std::to_string(bank.k + 1) + " would exceed input " +
                                std::to_string(input_h) + "x" + std::to_string(input_w) +
                                "; extension skipped");
        return bank;
    }
    FilterBank out;
    out.k = bank.k + 1;
    out.channels = bank.channels;
    out.provenance = bank.provenance;
    out.slices.reserve(bank.slices.size());
    for (const auto& s : bank.slices) out.slices.push_back(extend_filter(s));
    return out;
}

} // namespace clnas
