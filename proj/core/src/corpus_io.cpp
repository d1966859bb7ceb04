#include "axis_atlas/corpus_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>

#include "axis_atlas/error.hpp"
#include "byte_io.hpp"

namespace axis_atlas {

const std::vector<std::string>& default_axes() {
    static const std::vector<std::string> axes = {
        "Materiality",
        "Methodology",
        "Actor Relations & Configurations",
        "Ethical Approach",
        "Aesthetic Strategy",
        "Epistemic Function",
        "Philosophical Stance",
        "Social Context",
        "Audience Engagement",
        "Temporal Scale",
        "Spatial Scale",
        "Power and Capital Critique",
        "Documentation & Representation",
    };
    return axes;
}

std::size_t Artwork::keyword_count() const {
    std::size_t n = 0;
    for (const auto& kws : keywords) n += kws.size();
    return n;
}

std::optional<std::size_t> Corpus::axis_index(std::string_view name) const {
    for (std::size_t i = 0; i < axes.size(); ++i) {
        if (axes[i] == name) return i;
    }
    return std::nullopt;
}

std::optional<std::size_t> Corpus::work_index(std::string_view id) const {
    auto it = std::lower_bound(works.begin(), works.end(), id,
                               [](const Artwork& w, std::string_view v) { return w.id < v; });
    if (it == works.end() || it->id != id) return std::nullopt;
    return static_cast<std::size_t>(it - works.begin());
}

std::size_t Corpus::assignment_count() const {
    std::size_t n = 0;
    for (const auto& w : works) n += w.keyword_count();
    return n;
}

std::vector<std::string> Corpus::vocabulary() const {
    std::set<std::string> vocab;
    for (const auto& w : works) {
        for (const auto& kws : w.keywords) vocab.insert(kws.begin(), kws.end());
    }
    return {vocab.begin(), vocab.end()};
}

std::string normalize_keyword(std::string_view raw) {
    std::string out;
    out.reserve(raw.size());
    bool pending_space = false;
    for (char c : raw) {
        const auto uc = static_cast<unsigned char>(c);
        if (uc == ' ' || uc == '\t' || uc == '\n' || uc == '\r' || uc == '\f' || uc == '\v') {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) {
            out.push_back(' ');
            pending_space = false;
        }
        out.push_back(uc < 0x80 ? static_cast<char>(std::tolower(uc)) : c);
    }
    return out;
}

namespace {

std::string require_string(const nlohmann::json& obj, const char* key, const std::string& where) {
    auto it = obj.find(key);
    if (it == obj.end() || !it->is_string()) {
        throw Error(ErrorCode::parse, where + ": missing or non-string field '" + key + "'");
    }
    return it->get<std::string>();
}

}  // namespace

Corpus parse_corpus(const nlohmann::json& doc, const CorpusOptions& options) {
    if (!doc.is_object()) throw Error(ErrorCode::parse, "corpus: top level must be an object");
    Corpus corpus;

    auto axes_it = doc.find("axes");
    if (axes_it == doc.end() || !axes_it->is_array()) {
        throw Error(ErrorCode::parse, "corpus: missing 'axes' array");
    }
    for (const auto& a : *axes_it) {
        if (!a.is_string()) throw Error(ErrorCode::parse, "corpus: axis names must be strings");
        auto name = a.get<std::string>();
        if (std::find(corpus.axes.begin(), corpus.axes.end(), name) != corpus.axes.end()) {
            throw Error(ErrorCode::parse, "corpus: duplicate axis '" + name + "'");
        }
        corpus.axes.push_back(std::move(name));
    }
    if (corpus.axes.empty()) throw Error(ErrorCode::parse, "corpus: axis list is empty");
    if (options.expected_axis_count && corpus.axes.size() != *options.expected_axis_count) {
        throw Error(ErrorCode::parse, "corpus: expected " + std::to_string(*options.expected_axis_count) +
                                          " axes, found " + std::to_string(corpus.axes.size()));
    }

    auto works_it = doc.find("works");
    if (works_it == doc.end() || !works_it->is_array()) {
        throw Error(ErrorCode::parse, "corpus: missing 'works' array");
    }

    std::set<std::string> seen_ids;
    for (std::size_t wi = 0; wi < works_it->size(); ++wi) {
        const auto& rec = (*works_it)[wi];
        const std::string where = "corpus work #" + std::to_string(wi);
        if (!rec.is_object()) throw Error(ErrorCode::parse, where + ": not an object");

        Artwork work;
        work.id = require_string(rec, "id", where);
        if (work.id.empty()) throw Error(ErrorCode::parse, where + ": empty id");
        if (!seen_ids.insert(work.id).second) {
            throw Error(ErrorCode::duplicate_id, "duplicate work id '" + work.id + "'");
        }
        work.title = rec.contains("title") && rec["title"].is_string() ? rec["title"].get<std::string>() : "";
        work.artist = require_string(rec, "artist", where);
        if (work.artist.empty()) throw Error(ErrorCode::parse, "work '" + work.id + "': empty artist name");
        if (auto y = rec.find("year"); y != rec.end() && !y->is_null()) {
            if (!y->is_number_integer()) {
                throw Error(ErrorCode::parse, "work '" + work.id + "': year must be an integer");
            }
            work.year = y->get<int>();
        }

        work.keywords.assign(corpus.axes.size(), {});
        if (auto kw = rec.find("keywords"); kw != rec.end() && !kw->is_null()) {
            if (!kw->is_object()) {
                throw Error(ErrorCode::parse, "work '" + work.id + "': 'keywords' must be an object");
            }
            for (const auto& [axis, list] : kw->items()) {
                auto ai = corpus.axis_index(axis);
                if (!ai) {
                    throw Error(ErrorCode::unknown_axis,
                                "work '" + work.id + "' references unknown axis '" + axis + "'");
                }
                if (!list.is_array()) {
                    throw Error(ErrorCode::parse, "work '" + work.id + "', axis '" + axis + "': not a list");
                }
                auto& bucket = work.keywords[*ai];
                for (const auto& k : list) {
                    if (!k.is_string()) {
                        throw Error(ErrorCode::parse, "work '" + work.id + "': keywords must be strings");
                    }
                    auto norm = normalize_keyword(k.get<std::string>());
                    if (norm.empty()) continue;
                    if (std::find(bucket.begin(), bucket.end(), norm) != bucket.end()) {
                        corpus.warnings.push_back("work '" + work.id + "', axis '" + axis +
                                                  "': duplicate keyword '" + norm + "' dropped");
                        continue;
                    }
                    bucket.push_back(std::move(norm));
                }
            }
        }
        corpus.works.push_back(std::move(work));
    }

    std::sort(corpus.works.begin(), corpus.works.end(),
              [](const Artwork& a, const Artwork& b) { return a.id < b.id; });
    for (const auto& w : corpus.works) corpus.artists[w.artist].push_back(w.id);
    return corpus;
}

Corpus load_corpus(const std::filesystem::path& path, const CorpusOptions& options) {
    const auto text = detail::read_file(path.string());
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorCode::parse, path.string() + ": " + e.what());
    }
    return parse_corpus(doc, options);
}

nlohmann::json corpus_to_json(const Corpus& corpus) {
    nlohmann::json doc;
    doc["axes"] = corpus.axes;
    auto works = nlohmann::json::array();
    for (const auto& w : corpus.works) {
        nlohmann::json rec;
        rec["id"] = w.id;
        rec["title"] = w.title;
        rec["artist"] = w.artist;
        rec["year"] = w.year ? nlohmann::json(*w.year) : nlohmann::json(nullptr);
        nlohmann::json kws = nlohmann::json::object();
        for (std::size_t a = 0; a < corpus.axes.size(); ++a) {
            if (!w.keywords[a].empty()) kws[corpus.axes[a]] = w.keywords[a];
        }
        rec["keywords"] = std::move(kws);
        works.push_back(std::move(rec));
    }
    doc["works"] = std::move(works);
    return doc;
}

// ---------------------------------------------------------------------------
// Embedding table

std::optional<std::size_t> EmbeddingTable::find(std::string_view keyword) const {
    auto it = index_.find(std::string(keyword));
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

Vector EmbeddingTable::vector(std::size_t row) const {
    return vectors.row(static_cast<Eigen::Index>(row)).cast<double>().transpose();
}

Matrix EmbeddingTable::as_matrix() const { return vectors.cast<double>(); }

void EmbeddingTable::rebuild_index() {
    index_.clear();
    for (std::size_t i = 0; i < keywords.size(); ++i) {
        if (!index_.emplace(keywords[i], i).second) {
            throw Error(ErrorCode::duplicate_keyword, "duplicate keyword '" + keywords[i] + "' in embedding table");
        }
    }
}

EmbeddingTable make_embedding_table(std::vector<std::string> keywords, const Matrix& vectors) {
    if (static_cast<Eigen::Index>(keywords.size()) != vectors.rows()) {
        throw Error(ErrorCode::dimension_mismatch, "keyword count does not match vector rows");
    }
    EmbeddingTable t;
    t.dimension = static_cast<std::size_t>(vectors.cols());
    for (auto& k : keywords) k = normalize_keyword(k);
    t.keywords = std::move(keywords);
    t.vectors = vectors.cast<float>();
    if (!t.vectors.allFinite()) throw Error(ErrorCode::non_finite, "embedding table contains non-finite values");
    t.rebuild_index();
    return t;
}

namespace {

constexpr std::string_view kTableMagic = "AXEB";
constexpr std::uint32_t kTableVersion = 1;

std::string_view trim_cr(std::string_view line) {
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    return line;
}

}  // namespace

EmbeddingTable parse_embedding_text(std::string_view text) {
    EmbeddingTable t;
    std::size_t pos = 0;
    auto next_line = [&](std::string_view& line) {
        if (pos >= text.size()) return false;
        auto nl = text.find('\n', pos);
        if (nl == std::string_view::npos) nl = text.size();
        line = trim_cr(text.substr(pos, nl - pos));
        pos = nl + 1;
        return true;
    };

    std::string_view header;
    if (!next_line(header) || header.substr(0, 4) != "dim=") {
        throw Error(ErrorCode::parse, "embedding table: first line must be 'dim=<D>'");
    }
    std::size_t dim = 0;
    auto digits = header.substr(4);
    auto [p, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), dim);
    if (ec != std::errc{} || p != digits.data() + digits.size() || dim == 0) {
        throw Error(ErrorCode::parse, "embedding table: invalid dimension in header");
    }
    t.dimension = dim;

    std::vector<float> values;
    std::string_view line;
    std::size_t record = 0;
    while (next_line(line)) {
        if (line.empty()) continue;
        auto tab = line.find('\t');
        if (tab == std::string_view::npos) {
            throw Error(ErrorCode::dimension_mismatch,
                        "embedding record " + std::to_string(record) + ": expected " + std::to_string(dim) +
                            " values, found 0");
        }
        t.keywords.push_back(normalize_keyword(line.substr(0, tab)));
        std::size_t count = 0;
        std::size_t start = tab + 1;
        while (start <= line.size()) {
            auto end = line.find('\t', start);
            if (end == std::string_view::npos) end = line.size();
            auto field = line.substr(start, end - start);
            double v = 0.0;
            auto [fp, fec] = std::from_chars(field.data(), field.data() + field.size(), v);
            if (fec != std::errc{} || fp != field.data() + field.size()) {
                throw Error(ErrorCode::parse,
                            "embedding record " + std::to_string(record) + ": bad number '" + std::string(field) + "'");
            }
            if (!std::isfinite(v)) {
                throw Error(ErrorCode::non_finite, "embedding record " + std::to_string(record) + ": non-finite value");
            }
            values.push_back(static_cast<float>(v));
            ++count;
            start = end + 1;
        }
        if (count != dim) {
            throw Error(ErrorCode::dimension_mismatch,
                        "embedding record " + std::to_string(record) + ": expected " + std::to_string(dim) +
                            " values, found " + std::to_string(count));
        }
        ++record;
    }
    t.vectors.resize(static_cast<Eigen::Index>(record), static_cast<Eigen::Index>(dim));
    std::copy(values.begin(), values.end(), t.vectors.data());
    t.rebuild_index();
    return t;
}

EmbeddingTable parse_embedding_binary(std::string_view bytes) {
    detail::ByteReader r(bytes);
    if (r.raw(4) != kTableMagic) throw Error(ErrorCode::parse, "embedding table: bad magic");
    const auto version = r.u32();
    if (version != kTableVersion) {
        throw Error(ErrorCode::parse, "embedding table: unsupported version " + std::to_string(version));
    }
    EmbeddingTable t;
    t.dimension = r.u32();
    const auto count = r.u32();
    if (t.dimension == 0) throw Error(ErrorCode::parse, "embedding table: zero dimension");
    t.vectors.resize(count, static_cast<Eigen::Index>(t.dimension));
    t.keywords.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        const auto len = r.u32();
        t.keywords.emplace_back(r.raw(len));
        if (r.remaining() < 4 * t.dimension) {
            throw Error(ErrorCode::dimension_mismatch,
                        "embedding record " + std::to_string(i) + ": truncated vector");
        }
        for (std::size_t d = 0; d < t.dimension; ++d) {
            const float v = r.f32();
            if (!std::isfinite(v)) {
                throw Error(ErrorCode::non_finite, "embedding record " + std::to_string(i) + ": non-finite value");
            }
            t.vectors(i, static_cast<Eigen::Index>(d)) = v;
        }
    }
    if (!r.done()) throw Error(ErrorCode::parse, "embedding table: trailing bytes");
    t.rebuild_index();
    return t;
}

EmbeddingTable load_embedding_table(const std::filesystem::path& path) {
    const auto bytes = detail::read_file(path.string());
    if (bytes.size() >= 4 && std::string_view(bytes).substr(0, 4) == kTableMagic) {
        return parse_embedding_binary(bytes);
    }
    return parse_embedding_text(bytes);
}

std::string embedding_table_to_text(const EmbeddingTable& table) {
    std::string out = "dim=" + std::to_string(table.dimension) + "\n";
    char buf[64];
    for (std::size_t i = 0; i < table.size(); ++i) {
        out += table.keywords[i];
        for (std::size_t d = 0; d < table.dimension; ++d) {
            out += '\t';
            auto res = std::to_chars(buf, buf + sizeof(buf),
                                     table.vectors(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(d)));
            out.append(buf, res.ptr);
        }
        out += '\n';
    }
    return out;
}

std::string embedding_table_to_binary(const EmbeddingTable& table) {
    detail::ByteWriter w;
    w.raw(kTableMagic);
    w.u32(kTableVersion);
    w.u32(static_cast<std::uint32_t>(table.dimension));
    w.u32(static_cast<std::uint32_t>(table.size()));
    for (std::size_t i = 0; i < table.size(); ++i) {
        w.u32(static_cast<std::uint32_t>(table.keywords[i].size()));
        w.raw(table.keywords[i]);
        for (std::size_t d = 0; d < table.dimension; ++d) {
            w.f32(table.vectors(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(d)));
        }
    }
    return w.take();
}

void save_embedding_table(const EmbeddingTable& table, const std::filesystem::path& path, bool binary) {
    detail::write_file(path.string(), binary ? embedding_table_to_binary(table) : embedding_table_to_text(table));
}

ValidationReport validate_against(const Corpus& corpus, const EmbeddingTable& table) {
    ValidationReport report;
    report.assignments = corpus.assignment_count();
    const auto vocab = corpus.vocabulary();
    for (const auto& kw : vocab) {
        if (table.find(kw)) {
            ++report.present;
        } else {
            report.missing.push_back(kw);
        }
    }
    for (const auto& kw : table.keywords) {
        if (!std::binary_search(vocab.begin(), vocab.end(), kw)) report.unused.push_back(kw);
    }
    std::sort(report.unused.begin(), report.unused.end());
    return report;
}

}  // namespace axis_atlas
