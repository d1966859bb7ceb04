#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "axis_atlas/types.hpp"

namespace axis_atlas {

// Named float64 matrices in one little-endian file:
//   magic "AXBK", u32 version, u32 block count, then per block
//   u32 name length, name bytes, u32 rows, u32 cols, rows*cols f64 row-major.
struct NamedMatrix {
    std::string name;
    Matrix values;
};

inline constexpr std::uint32_t kBlockFormatVersion = 1;

void write_blocks(const std::filesystem::path& path, const std::vector<NamedMatrix>& blocks);
std::vector<NamedMatrix> read_blocks(const std::filesystem::path& path);

std::string encode_blocks(const std::vector<NamedMatrix>& blocks);
std::vector<NamedMatrix> decode_blocks(const std::string& bytes);

/// Throws if no block carries `name`.
const Matrix& find_block(const std::vector<NamedMatrix>& blocks, const std::string& name);

/// CSV with a header row; values printed with round-trip precision.
std::string matrix_to_csv(const Matrix& m, const std::vector<std::string>& header,
                          const std::vector<std::string>& row_ids);

}  // namespace axis_atlas
