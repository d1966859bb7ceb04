#include "axis_atlas/binary_block.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "axis_atlas/error.hpp"
#include "byte_io.hpp"

namespace axis_atlas {

namespace detail {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::io, "cannot open '" + path + "' for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::io, "cannot open '" + path + "' for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorCode::io, "write failed for '" + path + "'");
}

}  // namespace detail

namespace {
constexpr std::string_view kMagic = "AXBK";
}

std::string encode_blocks(const std::vector<NamedMatrix>& blocks) {
    detail::ByteWriter w;
    w.raw(kMagic);
    w.u32(kBlockFormatVersion);
    w.u32(static_cast<std::uint32_t>(blocks.size()));
    for (const auto& b : blocks) {
        w.u32(static_cast<std::uint32_t>(b.name.size()));
        w.raw(b.name);
        w.u32(static_cast<std::uint32_t>(b.values.rows()));
        w.u32(static_cast<std::uint32_t>(b.values.cols()));
        for (Eigen::Index i = 0; i < b.values.size(); ++i) w.f64(b.values.data()[i]);
    }
    return w.take();
}

std::vector<NamedMatrix> decode_blocks(const std::string& bytes) {
    detail::ByteReader r(bytes);
    if (r.raw(4) != kMagic) throw Error(ErrorCode::parse, "not a block file (bad magic)");
    const auto version = r.u32();
    if (version != kBlockFormatVersion) {
        throw Error(ErrorCode::parse, "unsupported block format version " + std::to_string(version));
    }
    const auto count = r.u32();
    std::vector<NamedMatrix> blocks;
    blocks.reserve(count);
    for (std::uint32_t b = 0; b < count; ++b) {
        NamedMatrix nm;
        nm.name = std::string(r.raw(r.u32()));
        const auto rows = r.u32();
        const auto cols = r.u32();
        if (static_cast<std::uint64_t>(rows) * cols * 8 > r.remaining()) {
            throw Error(ErrorCode::parse, "block '" + nm.name + "' is truncated");
        }
        nm.values.resize(rows, cols);
        for (Eigen::Index i = 0; i < nm.values.size(); ++i) nm.values.data()[i] = r.f64();
        blocks.push_back(std::move(nm));
    }
    if (!r.done()) throw Error(ErrorCode::parse, "trailing bytes after last block");
    return blocks;
}

void write_blocks(const std::filesystem::path& path, const std::vector<NamedMatrix>& blocks) {
    detail::write_file(path.string(), encode_blocks(blocks));
}

std::vector<NamedMatrix> read_blocks(const std::filesystem::path& path) {
    return decode_blocks(detail::read_file(path.string()));
}

const Matrix& find_block(const std::vector<NamedMatrix>& blocks, const std::string& name) {
    for (const auto& b : blocks) {
        if (b.name == name) return b.values;
    }
    throw Error(ErrorCode::parse, "missing block '" + name + "'");
}

namespace {

void append_double(std::string& out, double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    out.append(buf, res.ptr);
}

void append_csv_field(std::string& out, const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) {
        out += s;
        return;
    }
    out += '"';
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
}

}  // namespace

std::string matrix_to_csv(const Matrix& m, const std::vector<std::string>& header,
                          const std::vector<std::string>& row_ids) {
    std::string out = "id";
    for (const auto& h : header) {
        out += ',';
        append_csv_field(out, h);
    }
    out += '\n';
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        append_csv_field(out, static_cast<std::size_t>(i) < row_ids.size() ? row_ids[i] : std::to_string(i));
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            out += ',';
            append_double(out, m(i, j));
        }
        out += '\n';
    }
    return out;
}

}  // namespace axis_atlas
