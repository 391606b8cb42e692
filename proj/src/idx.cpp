#include <zlib.h>

#include <cstdio>
#include <fstream>

#include "clnas/data.hpp"
#include "clnas/errors.hpp"

namespace clnas {

namespace {

std::vector<std::uint8_t> read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open " + path);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::vector<std::uint8_t> gunzip(const std::vector<std::uint8_t>& raw, const std::string& path) {
    z_stream zs{};
    if (inflateInit2(&zs, 16 + MAX_WBITS) != Z_OK) throw ParseError("zlib init failed for " + path);
    std::vector<std::uint8_t> out;
    std::uint8_t buf[1 << 16];
    zs.next_in = const_cast<std::uint8_t*>(raw.data());
    zs.avail_in = static_cast<uInt>(raw.size());
    int rc = Z_OK;
    do {
        zs.next_out = buf;
        zs.avail_out = sizeof buf;
        rc = inflate(&zs, Z_NO_FLUSH);
        if (rc != Z_OK && rc != Z_STREAM_END) {
            inflateEnd(&zs);
            throw ParseError("corrupt gzip stream in " + path);
        }
        out.insert(out.end(), buf, buf + (sizeof buf - zs.avail_out));
    } while (rc != Z_STREAM_END);
    inflateEnd(&zs);
    return out;
}

std::vector<std::uint8_t> read_maybe_gzip(const std::string& path) {
    auto raw = read_file(path);
    if (raw.size() >= 2 && raw[0] == 0x1f && raw[1] == 0x8b) return gunzip(raw, path);
    return raw;
}

std::uint32_t be32(const std::vector<std::uint8_t>& buf, std::size_t off, const std::string& path) {
    if (off + 4 > buf.size())
        throw ParseError(path + ": truncated at byte " + std::to_string(off));
    return (static_cast<std::uint32_t>(buf[off]) << 24) |
           (static_cast<std::uint32_t>(buf[off + 1]) << 16) |
           (static_cast<std::uint32_t>(buf[off + 2]) << 8) | buf[off + 3];
}

} // namespace

Eigen::MatrixXd load_idx_images(const std::string& path, int* rows, int* cols) {
    const auto buf = read_maybe_gzip(path);
    const auto magic = be32(buf, 0, path);
    if (magic != 0x00000803u) {
        char hex[16];
        std::snprintf(hex, sizeof hex, "0x%08x", magic);
        throw ParseError(path + ": bad image magic " + hex + " at byte 0");
    }
    const auto n = be32(buf, 4, path);
    const auto r = be32(buf, 8, path);
    const auto c = be32(buf, 12, path);
    const std::size_t need = 16 + static_cast<std::size_t>(n) * r * c;
    if (buf.size() < need)
        throw ParseError(path + ": truncated payload at byte " + std::to_string(buf.size()) +
                         " (need " + std::to_string(need) + ")");
    Eigen::MatrixXd x(static_cast<Eigen::Index>(r) * c, n);
    for (std::uint32_t i = 0; i < n; ++i)
        for (std::uint32_t p = 0; p < r * c; ++p)
            x(p, i) = buf[16 + static_cast<std::size_t>(i) * r * c + p] / 255.0;
    if (rows) *rows = static_cast<int>(r);
    if (cols) *cols = static_cast<int>(c);
    return x;
}

std::vector<int> load_idx_labels(const std::string& path) {
    const auto buf = read_maybe_gzip(path);
    const auto magic = be32(buf, 0, path);
    if (magic != 0x00000801u) {
        char hex[16];
        std::snprintf(hex, sizeof hex, "0x%08x", magic);
        throw ParseError(path + ": bad label magic " + hex + " at byte 0");
    }
    const auto n = be32(buf, 4, path);
    if (buf.size() < 8 + n)
        throw ParseError(path + ": truncated payload at byte " + std::to_string(buf.size()) +
                         " (need " + std::to_string(8 + n) + ")");
    std::vector<int> labels(n);
    for (std::uint32_t i = 0; i < n; ++i) labels[i] = buf[8 + i];
    return labels;
}

LabeledImages load_idx_pair(const std::string& images_path, const std::string& labels_path) {
    LabeledImages out;
    out.x = load_idx_images(images_path, &out.rows, &out.cols);
    out.labels = load_idx_labels(labels_path);
    if (static_cast<std::size_t>(out.x.cols()) != out.labels.size())
        throw ParseError(images_path + " and " + labels_path + " disagree on sample count");
    return out;
}

namespace {

std::string pick_existing(const std::string& dir, const std::string& stem) {
    for (const char* suffix : {"", ".gz"}) {
        const std::string path = dir + "/" + stem + suffix;
        if (std::ifstream(path, std::ios::binary)) return path;
    }
    throw ParseError("missing " + dir + "/" + stem + "[.gz]");
}

} // namespace

BasePool load_idx_pool(const std::string& dir) {
    const auto train = load_idx_pair(pick_existing(dir, "train-images-idx3-ubyte"),
                                     pick_existing(dir, "train-labels-idx1-ubyte"));
    const auto test = load_idx_pair(pick_existing(dir, "t10k-images-idx3-ubyte"),
                                    pick_existing(dir, "t10k-labels-idx1-ubyte"));
    BasePool pool;
    pool.train_x = train.x;
    pool.train_y = train.labels;
    pool.test_x = test.x;
    pool.test_y = test.labels;
    pool.rows = train.rows;
    pool.cols = train.cols;
    int classes = 0;
    for (int l : train.labels) classes = std::max(classes, l + 1);
    for (int l : test.labels) classes = std::max(classes, l + 1);
    pool.classes = classes;
    return pool;
}

} // namespace clnas
