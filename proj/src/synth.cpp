#include <algorithm>
#include <cmath>

#include "clnas/data.hpp"
#include "clnas/errors.hpp"
#include "clnas/rng.hpp"

namespace clnas {

BasePool synth_blobs(int classes, int dim, int train_per_class, int test_per_class,
                     double separation, std::uint64_t seed) {
    if (classes < 2) throw ConfigError("blobs need at least two classes");
    if (classes > dim) throw ConfigError("blobs need dim >= classes (one axis per mean)");
    if (separation <= 0.0) throw ConfigError("separation must be positive");
    if (train_per_class < 1 || test_per_class < 1) throw ConfigError("empty blob pools");
    // One mean per axis, scaled so every pair of means sits `separation` apart.
    const double radius = separation / std::sqrt(2.0);
    Rng rng(seed);
    BasePool pool;
    pool.classes = classes;
    pool.train_x.resize(dim, static_cast<Eigen::Index>(classes) * train_per_class);
    pool.test_x.resize(dim, static_cast<Eigen::Index>(classes) * test_per_class);
    auto fill = [&](Eigen::MatrixXd& x, std::vector<int>& y, int per_class) {
        y.clear();
        Eigen::Index col = 0;
        for (int c = 0; c < classes; ++c)
            for (int i = 0; i < per_class; ++i, ++col) {
                for (int d = 0; d < dim; ++d) x(d, col) = rng.normal();
                x(c, col) += radius;
                y.push_back(c);
            }
    };
    fill(pool.train_x, pool.train_y, train_per_class);
    fill(pool.test_x, pool.test_y, test_per_class);
    return pool;
}

namespace {

// Seven-segment digit shapes: which of segments A..G each class lights.
// Order: A top, B top-right, C bottom-right, D bottom, E bottom-left,
// F top-left, G middle.
constexpr std::uint8_t kSegments[10] = {
    0b1111110, // 0: ABCDEF
    0b0110000, // 1: BC
    0b1101101, // 2: ABDEG
    0b1111001, // 3: ABCDG
    0b0110011, // 4: BCFG
    0b1011011, // 5: ACDFG
    0b1011111, // 6: ACDEFG
    0b1110000, // 7: ABC
    0b1111111, // 8
    0b1111011, // 9: ABCDFG
};

struct SegBox {
    int r0, r1, c0, c1; // half-open pixel ranges at thickness 1 reference
};

void draw_digit(Eigen::VectorXd& img, int digit, int dy, int dx, int th, double base,
                const double wobble[7]) {
    constexpr int top = 4, mid = 13, bot = 22, left = 8, right = 19;
    const auto seg = kSegments[digit];
    auto lit = [&](int bit) { return (seg >> (6 - bit)) & 1; };
    SegBox boxes[7] = {
        {top, top + th, left, right + 1},          // A
        {top, mid + th, right + 1 - th, right + 1}, // B
        {mid, bot + th, right + 1 - th, right + 1}, // C
        {bot, bot + th, left, right + 1},          // D
        {mid, bot + th, left, left + th},          // E
        {top, mid + th, left, left + th},          // F
        {mid, mid + th, left, right + 1},          // G
    };
    for (int s = 0; s < 7; ++s) {
        if (!lit(s)) continue;
        const double v = base * wobble[s];
        for (int r = boxes[s].r0 + dy; r < boxes[s].r1 + dy; ++r)
            for (int c = boxes[s].c0 + dx; c < boxes[s].c1 + dx; ++c)
                if (r >= 0 && r < 28 && c >= 0 && c < 28)
                    img[r * 28 + c] = std::max(img[r * 28 + c], v);
    }
}

Eigen::VectorXd box_blur(const Eigen::VectorXd& img) {
    Eigen::VectorXd out(28 * 28);
    for (int r = 0; r < 28; ++r)
        for (int c = 0; c < 28; ++c) {
            double acc = 0.0;
            int n = 0;
            for (int dr = -1; dr <= 1; ++dr)
                for (int dc = -1; dc <= 1; ++dc) {
                    const int rr = r + dr, cc = c + dc;
                    if (rr < 0 || rr >= 28 || cc < 0 || cc >= 28) continue;
                    acc += img[rr * 28 + cc];
                    ++n;
                }
            out[r * 28 + c] = acc / n;
        }
    return out;
}

} // namespace

BasePool synth_digits(int train_per_class, int test_per_class, std::uint64_t seed) {
    if (train_per_class < 1 || test_per_class < 1) throw ConfigError("empty digit pools");
    Rng rng(seed);
    BasePool pool;
    pool.classes = 10;
    pool.rows = pool.cols = 28;
    pool.train_x.resize(784, static_cast<Eigen::Index>(10) * train_per_class);
    pool.test_x.resize(784, static_cast<Eigen::Index>(10) * test_per_class);
    auto fill = [&](Eigen::MatrixXd& x, std::vector<int>& y, int per_class) {
        y.clear();
        Eigen::Index col = 0;
        for (int digit = 0; digit < 10; ++digit)
            for (int i = 0; i < per_class; ++i, ++col) {
                const int dy = rng.uniform_int(5) - 2;
                const int dx = rng.uniform_int(5) - 2;
                const int th = 2 + rng.uniform_int(2);
                const double base = 0.7 + 0.3 * rng.uniform();
                double wobble[7];
                for (double& wv : wobble) wv = 0.85 + 0.15 * rng.uniform();
                Eigen::VectorXd img = Eigen::VectorXd::Zero(784);
                draw_digit(img, digit, dy, dx, th, base, wobble);
                img = box_blur(img);
                for (int p = 0; p < 784; ++p)
                    img[p] = std::clamp(img[p] + 0.04 * rng.normal(), 0.0, 1.0);
                x.col(col) = img;
                y.push_back(digit);
            }
    };
    fill(pool.train_x, pool.train_y, train_per_class);
    fill(pool.test_x, pool.test_y, test_per_class);
    return pool;
}

} // namespace clnas
