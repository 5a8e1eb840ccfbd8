#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "gdm/adam.hpp"
#include "gdm/errors.hpp"
#include "gdm/mlp.hpp"

namespace gdm {

namespace detail {

inline void put_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

inline std::uint32_t get_u32(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

inline void put_u64(std::ostream& os, std::uint64_t v) {
    put_u32(os, static_cast<std::uint32_t>(v));
    put_u32(os, static_cast<std::uint32_t>(v >> 32));
}

inline std::uint64_t get_u64(std::istream& is) {
    std::uint64_t lo = get_u32(is);
    std::uint64_t hi = get_u32(is);
    return lo | (hi << 32);
}

inline void put_f64(std::ostream& os, double v) {
    put_u64(os, std::bit_cast<std::uint64_t>(v));
}

inline double get_f64(std::istream& is) { return std::bit_cast<double>(get_u64(is)); }

inline void put_f64_array(std::ostream& os, const std::vector<double>& v) {
    for (double x : v) put_f64(os, x);
}

} // namespace detail

/// Model checkpoint: magic "GDMK1", the input layout (dim, conditions,
/// time features), a layer-shape table, then every parameter tensor as
/// little-endian float64 in flat-parameter order (weights row-major, bias).
inline void save_checkpoint(const std::string& path, const MlpDenoiser& model) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open checkpoint for writing: " + path);
    os.write("GDMK1", 5);
    const MlpConfig& cfg = model.config();
    detail::put_u32(os, static_cast<std::uint32_t>(cfg.dim));
    detail::put_u32(os, static_cast<std::uint32_t>(cfg.conditions));
    detail::put_u32(os, static_cast<std::uint32_t>(cfg.time_features));
    detail::put_u32(os, static_cast<std::uint32_t>(2 * model.layer_count()));
    for (int l = 0; l < model.layer_count(); ++l) {
        detail::put_u32(os, static_cast<std::uint32_t>(model.layer_out(l)));
        detail::put_u32(os, static_cast<std::uint32_t>(model.layer_in(l)));
        detail::put_u32(os, static_cast<std::uint32_t>(model.layer_out(l)));
        detail::put_u32(os, 1u);
    }
    detail::put_f64_array(os, model.params());
    if (!os) throw IoError("checkpoint write failed: " + path);
}

inline MlpDenoiser load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open checkpoint: " + path);
    char magic[5];
    is.read(magic, 5);
    if (!is || std::memcmp(magic, "GDMK1", 5) != 0)
        throw IoError("not a model checkpoint (bad magic): " + path);

    MlpConfig cfg;
    cfg.dim = static_cast<int>(detail::get_u32(is));
    cfg.conditions = static_cast<int>(detail::get_u32(is));
    cfg.time_features = static_cast<int>(detail::get_u32(is));
    std::uint32_t tensors = detail::get_u32(is);
    if (tensors % 2 != 0 || tensors < 2) throw IoError("malformed shape table: " + path);

    std::vector<std::pair<std::uint32_t, std::uint32_t>> shapes(tensors);
    for (auto& s : shapes) {
        s.first = detail::get_u32(is);
        s.second = detail::get_u32(is);
    }
    cfg.hidden.clear();
    for (std::uint32_t i = 0; i + 2 < tensors; i += 2)
        cfg.hidden.push_back(static_cast<int>(shapes[i].first));

    MlpDenoiser model(cfg, 0);
    std::size_t expected = 0;
    for (auto& s : shapes) expected += static_cast<std::size_t>(s.first) * s.second;
    if (expected != model.param_count()) throw IoError("shape table does not match layout: " + path);
    for (auto& v : model.params()) v = detail::get_f64(is);
    if (!is) throw IoError("checkpoint truncated: " + path);
    return model;
}

/// Optimizer sidecar ("GDMS1"): iteration counter, Adam step and both moment
/// arrays. Saved next to the model so a resumed run continues bit-exactly;
/// the model checkpoint alone stays portable.
inline void save_optimizer_state(const std::string& path, const AdamState& state, long iteration) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open optimizer state for writing: " + path);
    os.write("GDMS1", 5);
    detail::put_u64(os, static_cast<std::uint64_t>(iteration));
    detail::put_u64(os, static_cast<std::uint64_t>(state.step));
    detail::put_u64(os, state.m.size());
    detail::put_f64_array(os, state.m);
    detail::put_f64_array(os, state.v);
    if (!os) throw IoError("optimizer state write failed: " + path);
}

inline long load_optimizer_state(const std::string& path, AdamState& state) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open optimizer state: " + path);
    char magic[5];
    is.read(magic, 5);
    if (!is || std::memcmp(magic, "GDMS1", 5) != 0)
        throw IoError("not an optimizer state file (bad magic): " + path);
    long iteration = static_cast<long>(detail::get_u64(is));
    state.step = static_cast<long>(detail::get_u64(is));
    std::size_t size = detail::get_u64(is);
    state.m.resize(size);
    state.v.resize(size);
    for (auto& v : state.m) v = detail::get_f64(is);
    for (auto& v : state.v) v = detail::get_f64(is);
    if (!is) throw IoError("optimizer state truncated: " + path);
    return iteration;
}

} // namespace gdm
