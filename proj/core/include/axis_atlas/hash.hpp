#pragma once

#include <bit>
#include <cstdint>
#include <string_view>

#include "axis_atlas/types.hpp"

namespace axis_atlas {

/// 64-bit FNV-1a, used for content-derived seeds and matrix fingerprints.
class Fnv1a {
public:
    Fnv1a& bytes(const void* data, std::size_t size) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < size; ++i) {
            state_ ^= p[i];
            state_ *= 0x100000001b3ULL;
        }
        return *this;
    }

    Fnv1a& text(std::string_view s) { return bytes(s.data(), s.size()); }

    Fnv1a& u64(std::uint64_t v) {
        unsigned char buf[8];
        for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>(v >> (8 * i));
        return bytes(buf, 8);
    }

    Fnv1a& f64(double v) { return u64(std::bit_cast<std::uint64_t>(v)); }

    std::uint64_t value() const { return state_; }

private:
    std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

inline std::uint64_t fingerprint(const Matrix& m) {
    Fnv1a h;
    h.u64(static_cast<std::uint64_t>(m.rows())).u64(static_cast<std::uint64_t>(m.cols()));
    for (Eigen::Index i = 0; i < m.size(); ++i) h.f64(m.data()[i]);
    return h.value();
}

}  // namespace axis_atlas
