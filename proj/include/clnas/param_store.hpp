#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "clnas/errors.hpp"

namespace clnas {

/// One named parameter array: flat f64 values plus shape metadata and a
/// per-coordinate trainability mask of identical shape. Frozen coordinates
/// (mask 0) are never touched by an optimizer step, bit for bit.
///
/// Matrix-shaped entries (dims = {rows, cols}) flatten column-major so that
/// Eigen maps view them without copying. Higher-rank entries define their own
/// index helpers at the point of use.
struct ParamEntry {
    std::vector<std::uint32_t> dims;
    Eigen::VectorXd values;
    std::vector<std::uint8_t> mask; // 1 = trainable

    std::size_t size() const { return static_cast<std::size_t>(values.size()); }

    Eigen::Map<Eigen::MatrixXd> matrix() {
        if (dims.size() != 2) throw InvariantError("matrix() on entry of rank " + std::to_string(dims.size()));
        return Eigen::Map<Eigen::MatrixXd>(values.data(), dims[0], dims[1]);
    }
    Eigen::Map<const Eigen::MatrixXd> matrix() const {
        if (dims.size() != 2) throw InvariantError("matrix() on entry of rank " + std::to_string(dims.size()));
        return Eigen::Map<const Eigen::MatrixXd>(values.data(), dims[0], dims[1]);
    }

    bool all_trainable() const;
    std::size_t trainable_count() const;
};

/// Named collection of parameter arrays. Keys iterate in sorted order, which
/// fixes the serialization layout and keeps whole-store walks deterministic.
class ParamStore {
public:
    ParamEntry& add(const std::string& name, std::vector<std::uint32_t> dims);
    bool has(const std::string& name) const { return entries_.count(name) != 0; }
    void remove(const std::string& name) { entries_.erase(name); }

    ParamEntry& at(const std::string& name);
    const ParamEntry& at(const std::string& name) const;

    auto begin() { return entries_.begin(); }
    auto end() { return entries_.end(); }
    auto begin() const { return entries_.begin(); }
    auto end() const { return entries_.end(); }
    std::size_t entry_count() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }

    std::size_t total_size() const;
    std::size_t trainable_size() const;

    /// Zero-valued store with the same keys, shapes and masks.
    ParamStore zeros_like() const;

    /// Zero out values at mask-0 coordinates (used on gradients).
    void zero_frozen();

    /// Binary container: per entry, in key order —
    ///   u32 LE name length, UTF-8 name, u32 LE rank, u32 LE dims,
    ///   raw little-endian f64 payload, mask as packed bits (LSB first,
    ///   padded to a whole byte per entry).
    void save(std::ostream& out) const;
    static ParamStore load(std::istream& in);
    void save_file(const std::string& path) const;
    static ParamStore load_file(const std::string& path);

private:
    std::map<std::string, ParamEntry> entries_;
};

} // namespace clnas
