#include "axis_atlas/projections.hpp"

#include <charconv>

#include "axis_atlas/binary_block.hpp"
#include "axis_atlas/error.hpp"
#include "axis_atlas/features.hpp"
#include "axis_atlas/hash.hpp"
#include "byte_io.hpp"

namespace axis_atlas {

const char* to_string(ProjectionFamily family) {
    switch (family) {
        case ProjectionFamily::raw: return "raw";
        case ProjectionFamily::svd: return "svd";
        case ProjectionFamily::umap: return "umap";
    }
    return "unknown";
}

namespace {

std::string short_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

}  // namespace

std::string ProjectionSpec::name() const {
    switch (family) {
        case ProjectionFamily::raw: return "raw";
        case ProjectionFamily::svd: return "svd" + std::to_string(out_dim);
        case ProjectionFamily::umap: {
            std::string s = "umap" + std::to_string(out_dim);
            if (umap) {
                s += "_nn" + std::to_string(umap->n_neighbors) + "_md" + short_double(umap->min_dist) + "_" +
                     to_string(umap->metric);
            }
            return s;
        }
    }
    return "unknown";
}

void ProjectionSpec::validate() const {
    if (family == ProjectionFamily::umap) {
        if (!umap) throw Error(ErrorCode::invalid_argument, "umap projection needs umap parameters");
        if (umap->n_neighbors < 2) throw Error(ErrorCode::invalid_argument, "umap n_neighbors must be >= 2");
        if (umap->min_dist < 0.0) throw Error(ErrorCode::invalid_argument, "umap min_dist must be >= 0");
    } else if (umap) {
        throw Error(ErrorCode::invalid_argument, "umap parameters given for a non-umap projection");
    }
    if (family != ProjectionFamily::raw && out_dim < 2) {
        throw Error(ErrorCode::invalid_argument, "projection output dimension must be >= 2");
    }
}

ProjectionSpec raw_projection() { return {}; }

ProjectionSpec svd_projection(int dim) {
    ProjectionSpec s;
    s.family = ProjectionFamily::svd;
    s.out_dim = dim;
    return s;
}

ProjectionSpec umap_projection(int dim, int n_neighbors, double min_dist, Metric metric) {
    ProjectionSpec s;
    s.family = ProjectionFamily::umap;
    s.out_dim = dim;
    UmapParams p;
    p.n_neighbors = n_neighbors;
    p.min_dist = min_dist;
    p.metric = metric;
    s.umap = p;
    return s;
}

nlohmann::json to_json(const ProjectionSpec& spec) {
    nlohmann::json j{{"family", to_string(spec.family)}, {"out_dim", spec.out_dim}, {"seed", spec.seed}};
    if (spec.umap) {
        const auto& u = *spec.umap;
        j["umap"] = {{"n_neighbors", u.n_neighbors},
                     {"min_dist", u.min_dist},
                     {"metric", to_string(u.metric)},
                     {"n_epochs", u.n_epochs},
                     {"spread", u.spread},
                     {"learning_rate", u.learning_rate},
                     {"negative_sample_rate", u.negative_sample_rate},
                     {"repulsion_strength", u.repulsion_strength}};
    }
    return j;
}

ProjectionSpec projection_spec_from_json(const nlohmann::json& j) {
    if (j.is_string()) return parse_projection_spec(j.get<std::string>());
    ProjectionSpec s;
    const auto family = j.at("family").get<std::string>();
    if (family == "raw") s.family = ProjectionFamily::raw;
    else if (family == "svd") s.family = ProjectionFamily::svd;
    else if (family == "umap") s.family = ProjectionFamily::umap;
    else throw Error(ErrorCode::invalid_argument, "unknown projection family '" + family + "'");
    s.out_dim = j.value("out_dim", 0);
    s.seed = j.value("seed", std::uint64_t{42});
    if (j.contains("umap")) {
        const auto& u = j["umap"];
        UmapParams p;
        p.n_neighbors = u.value("n_neighbors", p.n_neighbors);
        p.min_dist = u.value("min_dist", p.min_dist);
        p.metric = metric_from_string(u.value("metric", std::string("euclidean")));
        p.n_epochs = u.value("n_epochs", p.n_epochs);
        p.spread = u.value("spread", p.spread);
        p.learning_rate = u.value("learning_rate", p.learning_rate);
        p.negative_sample_rate = u.value("negative_sample_rate", p.negative_sample_rate);
        p.repulsion_strength = u.value("repulsion_strength", p.repulsion_strength);
        s.umap = p;
    } else if (s.family == ProjectionFamily::umap) {
        s.umap = UmapParams{};
    }
    s.validate();
    return s;
}

ProjectionSpec parse_projection_spec(const std::string& name) {
    auto fail = [&] { return Error(ErrorCode::invalid_argument, "bad projection name '" + name + "'"); };
    if (name == "raw") return raw_projection();
    if (name.rfind("svd", 0) == 0) {
        try {
            return svd_projection(std::stoi(name.substr(3)));
        } catch (const std::logic_error&) {
            throw fail();
        }
    }
    if (name.rfind("umap", 0) != 0) throw fail();
    // umap<dim>_nn<k>_md<min_dist>_<metric>
    std::vector<std::string> parts;
    std::size_t start = 0;
    while (start <= name.size()) {
        auto end = name.find('_', start);
        if (end == std::string::npos) end = name.size();
        parts.push_back(name.substr(start, end - start));
        start = end + 1;
    }
    if (parts.size() != 4 || parts[1].rfind("nn", 0) != 0 || parts[2].rfind("md", 0) != 0) throw fail();
    try {
        return umap_projection(std::stoi(parts[0].substr(4)), std::stoi(parts[1].substr(2)),
                               std::stod(parts[2].substr(2)), metric_from_string(parts[3]));
    } catch (const std::logic_error&) {
        throw fail();
    }
}

ProjectedSpace project(const Matrix& points, const ProjectionSpec& spec) {
    spec.validate();
    ProjectedSpace space;
    switch (spec.family) {
        case ProjectionFamily::raw:
            space.spec = spec;
            space.coordinates = points;
            break;
        case ProjectionFamily::svd:
            space.spec = spec;
            space.coordinates = svd_reduce(points, spec.out_dim, spec.seed);
            break;
        case ProjectionFamily::umap:
            space = umap_fit(points, spec);
            break;
    }
    if (!space.coordinates.allFinite()) throw Error(ErrorCode::non_finite, "projection produced non-finite coordinates");
    space.source_fingerprint = fingerprint(points);
    return space;
}

void save_projection(const ProjectedSpace& space, const std::vector<std::string>& row_ids,
                     const std::filesystem::path& json_path, const std::filesystem::path& block_path,
                     const std::filesystem::path& csv_path) {
    nlohmann::json doc;
    doc["format"] = "axis-atlas-projection";
    doc["version"] = 1;
    doc["spec"] = to_json(space.spec);
    doc["name"] = space.spec.name();
    doc["source_fingerprint"] = space.source_fingerprint;
    doc["rows"] = row_ids;
    detail::write_file(json_path.string(), doc.dump(2) + "\n");
    write_blocks(block_path, {{"coordinates", space.coordinates}});
    if (!csv_path.empty()) {
        std::vector<std::string> header;
        for (Eigen::Index d = 0; d < space.coordinates.cols(); ++d) header.push_back("dim" + std::to_string(d));
        detail::write_file(csv_path.string(), matrix_to_csv(space.coordinates, header, row_ids));
    }
}

}  // namespace axis_atlas
