#include "axis_atlas/atlas.hpp"

#include <algorithm>
#include <map>
#include <numeric>

#include "axis_atlas/error.hpp"
#include "axis_atlas/metrics.hpp"
#include "byte_io.hpp"

namespace axis_atlas {

// ---------------------------------------------------------------------------
// Neighbourhoods

bool NeighborhoodReport::in_knn(int i, int j) const {
    const auto& row = ranked.at(static_cast<std::size_t>(i));
    const auto end = row.begin() + std::min<std::ptrdiff_t>(k, static_cast<std::ptrdiff_t>(row.size()));
    return std::find(row.begin(), end, j) != end;
}

int NeighborhoodReport::rank(int i, int j) const {
    const auto& row = ranked.at(static_cast<std::size_t>(i));
    const auto it = std::find(row.begin(), row.end(), j);
    if (it == row.end()) throw Error(ErrorCode::invalid_argument, "rank: point is not a neighbour of itself");
    return static_cast<int>(it - row.begin()) + 1;
}

int NeighborhoodReport::index_of(std::string_view id) const {
    const auto it = std::find(ids.begin(), ids.end(), id);
    if (it == ids.end()) throw Error(ErrorCode::invalid_argument, "unknown work id '" + std::string(id) + "'");
    return static_cast<int>(it - ids.begin());
}

NeighborhoodReport mutual_knn(const Matrix& coordinates, int k, std::vector<std::string> ids) {
    const int n = static_cast<int>(coordinates.rows());
    if (k < 1 || k >= n) {
        throw Error(ErrorCode::invalid_argument,
                    "mutual_knn: k = " + std::to_string(k) + " must be in [1, " + std::to_string(n - 1) + "]");
    }
    if (ids.empty()) {
        for (int i = 0; i < n; ++i) ids.push_back(std::to_string(i));
    } else if (static_cast<int>(ids.size()) != n) {
        throw Error(ErrorCode::dimension_mismatch, "mutual_knn: id count differs from row count");
    }
    const Matrix d = pairwise_distances(coordinates);
    NeighborhoodReport r;
    r.k = k;
    r.ids = std::move(ids);
    r.ranked.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        auto& row = r.ranked[static_cast<std::size_t>(i)];
        for (int j = 0; j < n; ++j) {
            if (j != i) row.push_back(j);
        }
        std::sort(row.begin(), row.end(), [&](int a, int b) {
            if (d(i, a) != d(i, b)) return d(i, a) < d(i, b);
            return a < b;
        });
    }
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            if (r.is_mutual(i, j)) r.mutual_pairs.emplace_back(i, j);
        }
    }
    return r;
}

NeighborhoodReport mutual_knn(const ProjectedSpace& space, int k, std::vector<std::string> ids) {
    return mutual_knn(space.coordinates, k, std::move(ids));
}

std::pair<int, int> rank_displacement(const NeighborhoodReport& report, int i, int j) {
    const int n = static_cast<int>(report.ranked.size());
    if (i < 0 || j < 0 || i >= n || j >= n) throw Error(ErrorCode::invalid_argument, "rank_displacement: unknown point");
    if (i == j) throw Error(ErrorCode::invalid_argument, "rank_displacement needs two distinct points");
    return {report.rank(i, j), report.rank(j, i)};
}

std::pair<int, int> rank_displacement(const NeighborhoodReport& report, std::string_view i, std::string_view j) {
    return rank_displacement(report, report.index_of(i), report.index_of(j));
}

GroupCohesion group_cohesion(const NeighborhoodReport& report, std::span<const int> labels,
                             const std::vector<int>& group) {
    if (group.size() < 2) throw Error(ErrorCode::invalid_argument, "group_cohesion needs at least two members");
    if (labels.size() != report.ranked.size()) {
        throw Error(ErrorCode::dimension_mismatch, "group_cohesion: label count differs from point count");
    }
    std::size_t pairs = 0, mutual = 0, same = 0;
    double rank_sum = 0.0;
    for (std::size_t a = 0; a < group.size(); ++a) {
        for (std::size_t b = a + 1; b < group.size(); ++b) {
            const int i = group[a];
            const int j = group[b];
            const auto [rij, rji] = rank_displacement(report, i, j);
            ++pairs;
            rank_sum += rij + rji;
            if (report.is_mutual(i, j)) ++mutual;
            const int li = labels[static_cast<std::size_t>(i)];
            if (li != kNoise && li == labels[static_cast<std::size_t>(j)]) ++same;
        }
    }
    GroupCohesion c;
    c.mutual_fraction = static_cast<double>(mutual) / static_cast<double>(pairs);
    c.same_cluster_fraction = static_cast<double>(same) / static_cast<double>(pairs);
    c.mean_rank = rank_sum / static_cast<double>(2 * pairs);
    return c;
}

GroupCohesion group_cohesion(const NeighborhoodReport& report, std::span<const int> labels,
                             const std::vector<std::string>& group_ids) {
    std::vector<int> group;
    for (const auto& id : group_ids) group.push_back(report.index_of(id));
    return group_cohesion(report, labels, group);
}

// ---------------------------------------------------------------------------
// Atlas document

AtlasDocument build_atlas(const Corpus& corpus, const ProjectedSpace& space, const ClusterAssignment& labels,
                          const Codebook& codebook, const FeatureMatrix& features, const AtlasOptions& options) {
    const auto n = corpus.works.size();
    auto mismatch = [](const std::string& what) { return Error(ErrorCode::dimension_mismatch, "build_atlas: " + what); };
    if (static_cast<std::size_t>(space.coordinates.rows()) != n) throw mismatch("projection rows differ from works");
    if (labels.labels.size() != n) throw mismatch("label count differs from works");
    if (static_cast<std::size_t>(features.values.rows()) != n) throw mismatch("feature rows differ from works");
    for (std::size_t i = 0; i < n; ++i) {
        if (features.row_ids[i] != corpus.works[i].id) throw mismatch("feature rows are not in corpus order");
    }
    if (options.alt_labels && options.alt_labels->labels.size() != n) throw mismatch("alternate label count");
    for (const auto& c : features.columns) {
        if (c.kind != ColumnDescriptor::Kind::cluster) {
            throw Error(ErrorCode::invalid_argument, "build_atlas: concept summaries need (axis, cluster) columns");
        }
    }

    std::vector<std::string> ids;
    for (const auto& w : corpus.works) ids.push_back(w.id);
    const auto report = mutual_knn(space.coordinates, options.k, ids);

    AtlasDocument doc;
    doc.axes = corpus.axes;
    doc.neighborhood_k = options.k;
    const auto dims = space.coordinates.cols();
    doc.display_projection = dims >= 2 ? "coordinate slice [0, 1] of " + space.spec.name()
                                       : "coordinate slice [0] of " + space.spec.name();
    for (const auto& [i, j] : report.mutual_pairs) {
        doc.mutual_pairs.emplace_back(ids[static_cast<std::size_t>(i)], ids[static_cast<std::size_t>(j)]);
    }
    for (std::size_t i = 0; i < n; ++i) {
        const auto& w = corpus.works[i];
        AtlasWork aw;
        aw.id = w.id;
        aw.title = w.title;
        aw.artist = w.artist;
        aw.year = w.year;
        for (Eigen::Index d = 0; d < dims; ++d) aw.coords.push_back(space.coordinates(static_cast<Eigen::Index>(i), d));
        aw.xy.assign(aw.coords.begin(), aw.coords.begin() + std::min<Eigen::Index>(2, dims));
        aw.cluster = labels.labels[i];
        for (int r = 0; r < options.k; ++r) {
            aw.neighbors.push_back({ids[static_cast<std::size_t>(report.ranked[i][static_cast<std::size_t>(r)])], r + 1});
        }
        doc.works.push_back(std::move(aw));
    }

    for (int c = 0; c < labels.n_clusters; ++c) {
        ClusterSummary summary;
        summary.id = c;
        RowVector mass = RowVector::Zero(features.values.cols());
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < n; ++i) {
            if (labels.labels[i] != c) continue;
            members.push_back(i);
            mass += features.values.row(static_cast<Eigen::Index>(i));
        }
        summary.size = static_cast<int>(members.size());
        std::vector<Eigen::Index> order(static_cast<std::size_t>(mass.size()));
        std::iota(order.begin(), order.end(), Eigen::Index{0});
        std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return mass(a) > mass(b); });
        for (Eigen::Index col : order) {
            if (static_cast<int>(summary.top_concepts.size()) >= options.top_concepts || !(mass(col) > 0.0)) break;
            const auto& desc = features.columns[static_cast<std::size_t>(col)];
            ConceptSummary concept_summary;
            concept_summary.axis = desc.axis;
            concept_summary.cluster = desc.index;
            concept_summary.mass = mass(col);
            const auto axis = corpus.axis_index(desc.axis);
            std::map<std::string, int> freq;
            if (axis) {
                for (auto i : members) {
                    for (const auto& kw : corpus.works[i].keywords[*axis]) {
                        if (codebook.assignment_of(kw) == desc.index) ++freq[kw];
                    }
                }
            }
            std::vector<std::pair<std::string, int>> kws(freq.begin(), freq.end());
            std::stable_sort(kws.begin(), kws.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
            for (const auto& [kw, _] : kws) {
                if (static_cast<int>(concept_summary.keywords.size()) >= options.keywords_per_concept) break;
                concept_summary.keywords.push_back(kw);
            }
            summary.top_concepts.push_back(std::move(concept_summary));
        }
        doc.clusters.push_back(std::move(summary));
    }

    doc.alt_labels = options.alt_labels;
    doc.provenance = {{"generator", "axis-atlas"},
                      {"version", "0.1.0"},
                      {"projection", to_json(space.spec)},
                      {"projection_name", space.spec.name()},
                      {"source_fingerprint", space.source_fingerprint},
                      {"features", features.variant.name()},
                      {"feature_fingerprint", features.fingerprint()},
                      {"codebook_k", codebook.k},
                      {"codebook_seed", codebook.config.seed},
                      {"n_clusters", labels.n_clusters},
                      {"neighborhood_space", "projected"}};
    for (const auto& [key, value] : options.provenance.items()) doc.provenance[key] = value;
    return doc;
}

nlohmann::json to_json(const AtlasDocument& doc) {
    nlohmann::json works = nlohmann::json::array();
    for (const auto& w : doc.works) {
        nlohmann::json neighbors = nlohmann::json::array();
        for (const auto& nb : w.neighbors) neighbors.push_back({{"id", nb.id}, {"rank", nb.rank}});
        works.push_back({{"id", w.id},
                         {"title", w.title},
                         {"artist", w.artist},
                         {"year", w.year ? nlohmann::json(*w.year) : nlohmann::json(nullptr)},
                         {"xy", w.xy},
                         {"coords", w.coords},
                         {"cluster", w.cluster},
                         {"neighbors", neighbors}});
    }
    nlohmann::json clusters = nlohmann::json::array();
    for (const auto& c : doc.clusters) {
        nlohmann::json concepts = nlohmann::json::array();
        for (const auto& t : c.top_concepts) {
            concepts.push_back({{"axis", t.axis}, {"cluster", t.cluster}, {"keywords", t.keywords}, {"mass", t.mass}});
        }
        clusters.push_back({{"id", c.id}, {"size", c.size}, {"top_concepts", concepts}});
    }
    nlohmann::json pairs = nlohmann::json::array();
    for (const auto& [a, b] : doc.mutual_pairs) pairs.push_back({a, b});
    nlohmann::json alt = nullptr;
    if (doc.alt_labels) {
        alt = {{"name", doc.alt_labels->name},
               {"n_clusters", doc.alt_labels->n_clusters},
               {"labels", doc.alt_labels->labels}};
    }
    return {{"format", "axis-atlas"},
            {"version", 1},
            {"provenance", doc.provenance},
            {"axes", doc.axes},
            {"display_projection", doc.display_projection},
            {"neighborhood", {{"k", doc.neighborhood_k}, {"mutual_pairs", pairs}}},
            {"works", works},
            {"clusters", clusters},
            {"alt_labels", alt}};
}

AtlasDocument atlas_from_json(const nlohmann::json& j) {
    try {
        if (j.value("format", std::string()) != "axis-atlas") throw Error(ErrorCode::parse, "not an atlas document");
        AtlasDocument doc;
        doc.provenance = j.at("provenance");
        doc.axes = j.at("axes").get<std::vector<std::string>>();
        doc.display_projection = j.at("display_projection").get<std::string>();
        doc.neighborhood_k = j.at("neighborhood").at("k").get<int>();
        for (const auto& p : j.at("neighborhood").at("mutual_pairs")) {
            doc.mutual_pairs.emplace_back(p.at(0).get<std::string>(), p.at(1).get<std::string>());
        }
        for (const auto& w : j.at("works")) {
            AtlasWork aw;
            aw.id = w.at("id").get<std::string>();
            aw.title = w.at("title").get<std::string>();
            aw.artist = w.at("artist").get<std::string>();
            if (!w.at("year").is_null()) aw.year = w["year"].get<int>();
            aw.xy = w.at("xy").get<std::vector<double>>();
            aw.coords = w.at("coords").get<std::vector<double>>();
            aw.cluster = w.at("cluster").get<int>();
            for (const auto& nb : w.at("neighbors")) aw.neighbors.push_back({nb.at("id"), nb.at("rank")});
            doc.works.push_back(std::move(aw));
        }
        for (const auto& c : j.at("clusters")) {
            ClusterSummary s;
            s.id = c.at("id").get<int>();
            s.size = c.at("size").get<int>();
            for (const auto& t : c.at("top_concepts")) {
                s.top_concepts.push_back({t.at("axis").get<std::string>(), t.at("cluster").get<int>(),
                                          t.at("keywords").get<std::vector<std::string>>(), t.at("mass").get<double>()});
            }
            doc.clusters.push_back(std::move(s));
        }
        if (j.contains("alt_labels") && !j["alt_labels"].is_null()) {
            const auto& a = j["alt_labels"];
            doc.alt_labels = AltLabeling{a.at("name").get<std::string>(), a.at("n_clusters").get<int>(),
                                         a.at("labels").get<Labels>()};
        }
        return doc;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::parse, std::string("atlas document: ") + e.what());
    }
}

std::string atlas_to_html(const AtlasDocument& doc) {
    std::string data = to_json(doc).dump();
    // Keep the inline JSON from closing the script element.
    std::string safe;
    safe.reserve(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (data[i] == '<' && i + 1 < data.size() && data[i + 1] == '/') {
            safe += "<\\/";
            ++i;
        } else {
            safe += data[i];
        }
    }
    std::string html = R"(<!DOCTYPE html>
<html lang="en">
<head>
<meta charset="utf-8">
<title>Atlas</title>
<style>
body { font-family: sans-serif; margin: 1em; }
#map { border: 1px solid #ccc; }
#info { margin-top: 0.5em; min-height: 3em; font-size: 0.9em; }
</style>
</head>
<body>
<svg id="map" width="800" height="600" xmlns="http://www.w3.org/2000/svg"></svg>
<div id="info"></div>
<script type="application/json" id="atlas-data">)";
    html += safe;
    html += R"(</script>
<script>
(function () {
  var doc = JSON.parse(document.getElementById('atlas-data').textContent);
  var svg = document.getElementById('map');
  var info = document.getElementById('info');
  var W = 800, H = 600, pad = 30;
  var xs = doc.works.map(function (w) { return w.xy[0]; });
  var ys = doc.works.map(function (w) { return w.xy.length > 1 ? w.xy[1] : 0; });
  var x0 = Math.min.apply(null, xs), x1 = Math.max.apply(null, xs);
  var y0 = Math.min.apply(null, ys), y1 = Math.max.apply(null, ys);
  function sx(v) { return pad + (x1 > x0 ? (v - x0) / (x1 - x0) : 0.5) * (W - 2 * pad); }
  function sy(v) { return H - pad - (y1 > y0 ? (v - y0) / (y1 - y0) : 0.5) * (H - 2 * pad); }
  function color(c) { return c < 0 ? '#999' : 'hsl(' + ((c * 137.5) % 360) + ',65%,45%)'; }
  doc.works.forEach(function (w, i) {
    var dot = document.createElementNS('http://www.w3.org/2000/svg', 'circle');
    dot.setAttribute('cx', sx(xs[i]));
    dot.setAttribute('cy', sy(ys[i]));
    dot.setAttribute('r', 5);
    dot.setAttribute('fill', color(w.cluster));
    dot.addEventListener('mouseover', function () {
      info.textContent = w.title + ' / ' + w.artist + (w.year !== null ? ' (' + w.year + ')' : '') +
        ' / cluster ' + w.cluster + ' / neighbours: ' + w.neighbors.map(function (n) { return n.id; }).join(', ');
    });
    svg.appendChild(dot);
  });
})();
</script>
</body>
</html>
)";
    return html;
}

void save_atlas(const AtlasDocument& doc, const std::filesystem::path& json_path,
                const std::filesystem::path& html_path) {
    detail::write_file(json_path.string(), to_json(doc).dump(2) + "\n");
    if (!html_path.empty()) detail::write_file(html_path.string(), atlas_to_html(doc));
}

AtlasDocument load_atlas(const std::filesystem::path& json_path) {
    const auto text = detail::read_file(json_path.string());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorCode::parse, json_path.string() + ": " + e.what());
    }
    return atlas_from_json(j);
}

}  // namespace axis_atlas
