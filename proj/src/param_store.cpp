#include "clnas/param_store.hpp"

#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

namespace clnas {

bool ParamEntry::all_trainable() const {
    for (auto m : mask)
        if (!m) return false;
    return true;
}

std::size_t ParamEntry::trainable_count() const {
    std::size_t n = 0;
    for (auto m : mask) n += m ? 1 : 0;
    return n;
}

ParamEntry& ParamStore::add(const std::string& name, std::vector<std::uint32_t> dims) {
    if (entries_.count(name)) throw InvariantError("duplicate parameter entry: " + name);
    std::size_t n = 1;
    for (auto d : dims) n *= d;
    ParamEntry e;
    e.dims = std::move(dims);
    e.values = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
    e.mask.assign(n, 1);
    return entries_.emplace(name, std::move(e)).first->second;
}

ParamEntry& ParamStore::at(const std::string& name) {
    auto it = entries_.find(name);
    if (it == entries_.end()) throw InvariantError("no parameter entry named " + name);
    return it->second;
}

const ParamEntry& ParamStore::at(const std::string& name) const {
    auto it = entries_.find(name);
    if (it == entries_.end()) throw InvariantError("no parameter entry named " + name);
    return it->second;
}

std::size_t ParamStore::total_size() const {
    std::size_t n = 0;
    for (const auto& [k, e] : entries_) n += e.size();
    return n;
}

std::size_t ParamStore::trainable_size() const {
    std::size_t n = 0;
    for (const auto& [k, e] : entries_) n += e.trainable_count();
    return n;
}

ParamStore ParamStore::zeros_like() const {
    ParamStore out;
    for (const auto& [k, e] : entries_) {
        auto& z = out.add(k, e.dims);
        z.mask = e.mask;
    }
    return out;
}

void ParamStore::zero_frozen() {
    for (auto& [k, e] : entries_)
        for (std::size_t i = 0; i < e.size(); ++i)
            if (!e.mask[i]) e.values[static_cast<Eigen::Index>(i)] = 0.0;
}

namespace {

void put_u32(std::ostream& out, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                          static_cast<unsigned char>((v >> 8) & 0xff),
                          static_cast<unsigned char>((v >> 16) & 0xff),
                          static_cast<unsigned char>((v >> 24) & 0xff)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

void put_f64(std::ostream& out, double v) {
    std::uint64_t u;
    std::memcpy(&u, &v, 8);
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((u >> (8 * i)) & 0xff);
    out.write(reinterpret_cast<const char*>(b), 8);
}

bool get_u32(std::istream& in, std::uint32_t& v) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (in.gcount() != 4) return false;
    v = static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
        (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
    return true;
}

double get_f64(std::istream& in) {
    unsigned char b[8];
    in.read(reinterpret_cast<char*>(b), 8);
    if (in.gcount() != 8) throw ParseError("param container: truncated f64 payload at offset " +
                                           std::to_string(static_cast<long long>(in.tellg())));
    std::uint64_t u = 0;
    for (int i = 0; i < 8; ++i) u |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    double v;
    std::memcpy(&v, &u, 8);
    return v;
}

} // namespace

void ParamStore::save(std::ostream& out) const {
    for (const auto& [name, e] : entries_) {
        put_u32(out, static_cast<std::uint32_t>(name.size()));
        out.write(name.data(), static_cast<std::streamsize>(name.size()));
        put_u32(out, static_cast<std::uint32_t>(e.dims.size()));
        for (auto d : e.dims) put_u32(out, d);
        for (Eigen::Index i = 0; i < e.values.size(); ++i) put_f64(out, e.values[i]);
        // mask packed LSB-first
        const std::size_t n = e.size();
        const std::size_t mask_bytes = (n + 7) / 8;
        for (std::size_t byte = 0; byte < mask_bytes; ++byte) {
            unsigned char acc = 0;
            for (std::size_t bit = 0; bit < 8; ++bit) {
                const std::size_t idx = byte * 8 + bit;
                if (idx < n && e.mask[idx]) acc |= static_cast<unsigned char>(1u << bit);
            }
            out.put(static_cast<char>(acc));
        }
    }
}

ParamStore ParamStore::load(std::istream& in) {
    ParamStore store;
    for (;;) {
        std::uint32_t name_len = 0;
        if (!get_u32(in, name_len)) break; // clean EOF between entries
        std::string name(name_len, '\0');
        in.read(name.data(), name_len);
        if (in.gcount() != static_cast<std::streamsize>(name_len))
            throw ParseError("param container: truncated entry name");
        std::uint32_t rank = 0;
        if (!get_u32(in, rank)) throw ParseError("param container: truncated rank after entry " + name);
        std::vector<std::uint32_t> dims(rank);
        std::size_t n = 1;
        for (auto& d : dims) {
            if (!get_u32(in, d)) throw ParseError("param container: truncated dims for entry " + name);
            n *= d;
        }
        auto& e = store.add(name, dims);
        for (std::size_t i = 0; i < n; ++i) e.values[static_cast<Eigen::Index>(i)] = get_f64(in);
        const std::size_t mask_bytes = (n + 7) / 8;
        std::vector<unsigned char> packed(mask_bytes);
        in.read(reinterpret_cast<char*>(packed.data()), static_cast<std::streamsize>(mask_bytes));
        if (in.gcount() != static_cast<std::streamsize>(mask_bytes))
            throw ParseError("param container: truncated mask for entry " + name);
        for (std::size_t i = 0; i < n; ++i)
            e.mask[i] = (packed[i / 8] >> (i % 8)) & 1u;
    }
    return store;
}

void ParamStore::save_file(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError("cannot open for writing: " + path);
    save(out);
    if (!out) throw ParseError("write failed: " + path);
}

ParamStore ParamStore::load_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open: " + path);
    return load(in);
}

} // namespace clnas
