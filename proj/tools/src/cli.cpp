#include "axis_atlas/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "axis_atlas/atlas.hpp"
#include "axis_atlas/binary_block.hpp"
#include "axis_atlas/codebook.hpp"
#include "axis_atlas/corpus_io.hpp"
#include "axis_atlas/error.hpp"
#include "axis_atlas/features.hpp"
#include "axis_atlas/sweep.hpp"

namespace axis_atlas::cli {

namespace fs = std::filesystem;

EnvLookup process_environment() {
    return [](const std::string& name) -> std::optional<std::string> {
        if (const char* v = std::getenv(name.c_str())) return std::string(v);
        return std::nullopt;
    };
}

namespace {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct AtlasSettings {
    int k = 5;
    std::string feature = "tfidf_counts+l2";
    std::string projection = "umap4_nn10_md0.01_cosine";
    std::string clustering = "agglomerative_average_k15";
    std::string alt_clustering;
};

struct Settings {
    std::string corpus;
    std::string embeddings;
    std::string codebook;
    bool allow_missing = false;
    std::uint64_t seed = 42;
    int jobs = 1;
    std::string out_dir = ".";
    CodebookConfig codebook_config;
    SweepConfig sweep;
    AtlasSettings atlas;

    nlohmann::json to_json() const {
        return {{"corpus", corpus},
                {"embeddings", embeddings},
                {"codebook_file", codebook},
                {"allow_missing", allow_missing},
                {"seed", seed},
                {"codebook", axis_atlas::to_json(codebook_config)},
                {"sweep", axis_atlas::to_json(sweep)},
                {"atlas",
                 {{"k", atlas.k},
                  {"feature", atlas.feature},
                  {"projection", atlas.projection},
                  {"clustering", atlas.clustering},
                  {"alt_clustering", atlas.alt_clustering}}}};
    }
};

// Flags as given; unset ones leave the merged configuration alone.
struct Flags {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<int> jobs;
    std::optional<std::string> out_dir;
    std::optional<std::string> corpus;
    std::optional<std::string> embeddings;
    std::optional<std::string> codebook;
    bool allow_missing = false;
    std::optional<std::string> k_list;
    bool allow_extended_k = false;
    std::optional<int> max_trials;
    std::optional<int> bootstrap_reps;
    std::vector<std::string> variants;
    std::optional<std::string> feature;
    std::optional<std::string> projection;
    std::optional<std::string> clustering;
    std::optional<std::string> alt_clustering;
    std::optional<std::string> report;
    std::optional<int> neighbors;
    bool html = false;
};

nlohmann::json read_json(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::io, "cannot open " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    try {
        return nlohmann::json::parse(ss.str());
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorCode::parse, path.string() + ": " + e.what());
    }
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::io, "cannot write " + path.string());
    out << text;
    if (!out) throw Error(ErrorCode::io, "write failed for " + path.string());
}

std::string resolve(const fs::path& base, const std::string& p) {
    if (p.empty() || fs::path(p).is_absolute()) return p;
    return (base / p).lexically_normal().string();
}

void apply_config_file(Settings& s, const fs::path& path) {
    const auto j = read_json(path);
    if (!j.is_object()) throw ConfigError(path.string() + ": configuration must be a JSON object");
    const auto base = path.parent_path();
    for (const auto& [key, value] : j.items()) {
        if (key == "corpus") s.corpus = resolve(base, value.get<std::string>());
        else if (key == "embeddings") s.embeddings = resolve(base, value.get<std::string>());
        else if (key == "codebook_file") s.codebook = resolve(base, value.get<std::string>());
        else if (key == "allow_missing") s.allow_missing = value.get<bool>();
        else if (key == "seed") s.seed = value.get<std::uint64_t>();
        else if (key == "jobs") s.jobs = value.get<int>();
        else if (key == "codebook") s.codebook_config = codebook_config_from_json(value);
        else if (key == "sweep") s.sweep = sweep_config_from_json(value);
        else if (key == "atlas") {
            for (const auto& [akey, avalue] : value.items()) {
                if (akey == "k") s.atlas.k = avalue.get<int>();
                else if (akey == "feature") s.atlas.feature = avalue.get<std::string>();
                else if (akey == "projection") s.atlas.projection = avalue.get<std::string>();
                else if (akey == "clustering") s.atlas.clustering = avalue.get<std::string>();
                else if (akey == "alt_clustering") s.atlas.alt_clustering = avalue.get<std::string>();
                else throw ConfigError("unknown atlas setting '" + akey + "'");
            }
        } else {
            throw ConfigError("unknown configuration key '" + key + "'");
        }
    }
}

int env_int(const EnvLookup& env, const std::string& name, int fallback) {
    const auto v = env(name);
    if (!v) return fallback;
    try {
        std::size_t used = 0;
        const int parsed = std::stoi(*v, &used);
        if (used != v->size()) throw std::invalid_argument(name);
        return parsed;
    } catch (const std::logic_error&) {
        throw ConfigError(name + " must be an integer (got '" + *v + "')");
    }
}

Settings merge(const Flags& f, const EnvLookup& env) {
    Settings s;
    if (!f.config.empty()) apply_config_file(s, f.config);

    s.sweep.max_trials = env_int(env, "PHASEC_MAX_TRIALS", s.sweep.max_trials);
    s.sweep.bootstrap_reps = env_int(env, "PHASEC_BOOTSTRAP_REPS", s.sweep.bootstrap_reps);
    if (const auto k = env("PHASEC_K_LIST")) s.sweep.k_list = parse_k_list(*k);

    if (f.seed) s.seed = *f.seed;
    if (f.jobs) s.jobs = *f.jobs;
    if (f.out_dir) s.out_dir = *f.out_dir;
    if (f.corpus) s.corpus = *f.corpus;
    if (f.embeddings) s.embeddings = *f.embeddings;
    if (f.codebook) s.codebook = *f.codebook;
    if (f.allow_missing) s.allow_missing = true;
    if (f.k_list) s.sweep.k_list = parse_k_list(*f.k_list);
    if (f.allow_extended_k) s.sweep.allow_extended_k = true;
    if (f.max_trials) s.sweep.max_trials = *f.max_trials;
    if (f.bootstrap_reps) s.sweep.bootstrap_reps = *f.bootstrap_reps;
    if (f.feature) s.atlas.feature = *f.feature;
    if (f.projection) s.atlas.projection = *f.projection;
    if (f.clustering) s.atlas.clustering = *f.clustering;
    if (f.alt_clustering) s.atlas.alt_clustering = *f.alt_clustering;
    if (f.neighbors) s.atlas.k = *f.neighbors;

    s.codebook_config.seed = s.seed;
    s.sweep.base_seed = s.seed;
    if (s.jobs < 1) throw ConfigError("--jobs must be >= 1");
    if (s.atlas.k < 1) throw ConfigError("atlas neighbourhood k must be >= 1");
    s.codebook_config.validate();
    s.sweep.validate();
    return s;
}

// ---------------------------------------------------------------------------
// Shared pipeline steps

struct Loaded {
    Corpus corpus;
    EmbeddingTable table;
    Codebook codebook;
};

Corpus require_corpus(const Settings& s) {
    if (s.corpus.empty()) throw ConfigError("--corpus is required");
    return load_corpus(s.corpus);
}

EmbeddingTable require_table(const Settings& s) {
    if (s.embeddings.empty()) throw ConfigError("--embeddings is required");
    return load_embedding_table(s.embeddings);
}

void check_coverage(const Corpus& corpus, const EmbeddingTable& table, const Settings& s, std::ostream& err) {
    const auto report = validate_against(corpus, table);
    if (report.ok()) return;
    for (const auto& kw : report.missing) err << "missing keyword: " << kw << '\n';
    if (!s.allow_missing) {
        throw Error(ErrorCode::missing_keyword, std::to_string(report.missing.size()) +
                                                    " corpus keyword(s) missing from the embedding table");
    }
}

Codebook obtain_codebook(const EmbeddingTable& table, const Settings& s, std::ostream& err) {
    if (!s.codebook.empty()) {
        err << "[codebook] loading " << s.codebook << '\n';
        return load_codebook(s.codebook, fs::path(s.codebook).replace_extension(".axbk"));
    }
    err << "[codebook] building over " << table.size() << " keywords\n";
    auto cb = build_codebook(table, s.codebook_config, s.jobs);
    err << "[codebook] selected k = " << cb.k << " (retained " << cb.whitener.retained_dim << " dims)\n";
    return cb;
}

Loaded load_all(const Settings& s, std::ostream& err) {
    Loaded l{require_corpus(s), require_table(s), {}};
    check_coverage(l.corpus, l.table, s, err);
    l.codebook = obtain_codebook(l.table, s, err);
    return l;
}

SweepInputs inputs_of(const Loaded& l, const Settings& s) {
    SweepInputs in;
    in.corpus = &l.corpus;
    in.codebook = &l.codebook;
    in.table = &l.table;
    in.feature_options.skip_missing = s.allow_missing;
    in.feature_options.seed = s.seed;
    return in;
}

fs::path out_path(const Settings& s, const std::string& name) {
    fs::create_directories(s.out_dir);
    return fs::path(s.out_dir) / name;
}

std::string file_stem_for(const std::string& name) {
    std::string out;
    for (char ch : name) out += (ch == '+' || ch == '/') ? '_' : ch;
    return out;
}

struct TrialChoice {
    std::string feature;
    std::string projection;
    std::string clustering;
};

TrialChoice choose_trial(const Settings& s, const Flags& f) {
    TrialChoice c{s.atlas.feature, s.atlas.projection, s.atlas.clustering};
    if (!f.report) return c;
    const auto report = read_json(*f.report);
    if (!report.contains("headline") || report["headline"].is_null()) {
        throw ConfigError(*f.report + ": report has no headline trial");
    }
    const int id = report["headline"].get<int>();
    for (const auto& t : report.at("trials")) {
        if (t.at("trial_id").get<int>() != id) continue;
        c.feature = t.at("feature").get<std::string>();
        c.projection = t.at("projection").get<std::string>();
        c.clustering = t.at("clustering").get<std::string>();
        if (!f.feature && !f.projection && !f.clustering) return c;
    }
    if (f.feature) c.feature = *f.feature;
    if (f.projection) c.projection = *f.projection;
    if (f.clustering) c.clustering = *f.clustering;
    return c;
}

TrialSpec trial_from(const Settings& s, const TrialChoice& c) {
    return make_trial(s.sweep, parse_feature_variant(c.feature), parse_projection_spec(c.projection),
                      parse_clustering_spec(c.clustering));
}

// ---------------------------------------------------------------------------
// Commands

int cmd_validate(const Settings& s, std::ostream& out, std::ostream& err) {
    const auto corpus = require_corpus(s);
    const auto table = require_table(s);
    const auto r = validate_against(corpus, table);
    nlohmann::json j{{"works", corpus.works.size()},
                     {"artists", corpus.artists.size()},
                     {"axes", corpus.axes.size()},
                     {"unique_keywords", corpus.vocabulary().size()},
                     {"assignments", r.assignments},
                     {"present", r.present},
                     {"missing", r.missing},
                     {"unused", r.unused},
                     {"warnings", corpus.warnings}};
    out << j.dump(2) << '\n';
    if (!r.ok()) {
        for (const auto& kw : r.missing) err << "missing keyword: " << kw << '\n';
        return runtime_failure;
    }
    return ok;
}

int cmd_codebook(const Settings& s, std::ostream& out, std::ostream& err) {
    const auto table = require_table(s);
    if (!s.corpus.empty()) check_coverage(load_corpus(s.corpus), table, s, err);
    const auto cb = obtain_codebook(table, s, err);
    const auto json_path = out_path(s, "codebook.json");
    save_codebook(cb, json_path, out_path(s, "codebook.axbk"));
    nlohmann::json candidates = nlohmann::json::array();
    for (const auto& d : cb.diagnostics) {
        candidates.push_back({{"k", d.k}, {"valid", d.valid}, {"silhouette", d.score.silhouette},
                              {"adjusted", d.score.adjusted}});
    }
    out << nlohmann::json{{"codebook", json_path.string()},
                          {"k", cb.k},
                          {"retained_dim", cb.whitener.retained_dim},
                          {"variance_captured", cb.whitener.variance_captured},
                          {"seed", s.seed},
                          {"candidates", candidates}}
               .dump(2)
        << '\n';
    return ok;
}

int cmd_features(const Settings& s, const Flags& f, std::ostream& out, std::ostream& err) {
    std::vector<FeatureVariant> variants;
    for (const auto& v : f.variants) variants.push_back(parse_feature_variant(v));
    if (variants.empty()) variants = s.sweep.feature_variants;
    const auto loaded = load_all(s, err);
    SpaceCache cache(inputs_of(loaded, s), s.sweep.guardrail_k);
    nlohmann::json written = nlohmann::json::array();
    for (const auto& v : variants) {
        err << "[features] " << v.name() << '\n';
        const auto fm = cache.features(v);
        const auto stem = "features_" + file_stem_for(v.name());
        auto header = feature_header_json(*fm);
        header["provenance"] = {{"seed", s.seed}, {"codebook_k", loaded.codebook.k}, {"config", s.to_json()}};
        const auto json_path = out_path(s, stem + ".json");
        write_text(json_path, header.dump(2) + "\n");
        write_blocks(out_path(s, stem + ".axbk"), {{"values", fm->values}});
        std::vector<std::string> cols;
        for (const auto& c : fm->columns) cols.push_back(c.label());
        write_text(out_path(s, stem + ".csv"), matrix_to_csv(fm->values, cols, fm->row_ids));
        written.push_back({{"variant", v.name()},
                           {"rows", fm->values.rows()},
                           {"columns", fm->values.cols()},
                           {"header", json_path.string()}});
    }
    out << written.dump(2) << '\n';
    return ok;
}

int cmd_sweep(const Settings& s, std::ostream& out, std::ostream& err) {
    const auto loaded = load_all(s, err);
    SweepOptions options;
    options.jobs = s.jobs;
    options.progress = [&err](std::size_t done, std::size_t total) {
        const std::size_t step = std::max<std::size_t>(1, total / 20);
        if (done % step == 0 || done == total) err << "[sweep] " << done << "/" << total << " trials\n";
    };
    const auto report = run_sweep(s.sweep, inputs_of(loaded, s), options);
    auto j = to_json(report);
    j["provenance"] = {{"seed", s.seed}, {"codebook_k", loaded.codebook.k}, {"config", s.to_json()}};
    write_text(out_path(s, "sweep_report.json"), j.dump(2) + "\n");
    write_text(out_path(s, "sweep_report.csv"), sweep_report_csv(report));
    out << format_algorithm_table(report);
    if (report.headline) {
        const auto& h = report.result(*report.headline);
        out << "headline: trial " << h.spec.trial_id << " " << h.spec.key() << " silhouette "
            << h.metrics->silhouette << '\n';
    } else {
        out << "headline: none (no complete-assignment trial passed the guardrails)\n";
    }
    return ok;
}

int cmd_stability(const Settings& s, const Flags& f, std::ostream& out, std::ostream& err) {
    const auto spec = trial_from(s, choose_trial(s, f));
    const auto loaded = load_all(s, err);
    SpaceCache cache(inputs_of(loaded, s), s.sweep.guardrail_k);
    err << "[stability] " << spec.key() << '\n';
    const auto report = stability(spec, cache, s.sweep);
    nlohmann::json j{{"trial", spec.key()},
                     {"feature", spec.feature.name()},
                     {"projection", spec.projection.name()},
                     {"clustering", spec.clustering.name()},
                     {"stability", to_json(report)},
                     {"provenance", {{"seed", s.seed}, {"codebook_k", loaded.codebook.k}, {"config", s.to_json()}}}};
    write_text(out_path(s, "stability.json"), j.dump(2) + "\n");
    out << nlohmann::json{{"trial", spec.key()}, {"mean", report.mean}, {"std", report.std}, {"cv", report.cv}}.dump()
        << '\n';
    return ok;
}

int cmd_atlas(const Settings& s, const Flags& f, std::ostream& out, std::ostream& err) {
    const auto spec = trial_from(s, choose_trial(s, f));
    std::optional<ClusteringSpec> alt;
    if (!s.atlas.alt_clustering.empty()) alt = parse_clustering_spec(s.atlas.alt_clustering);
    const auto loaded = load_all(s, err);
    SpaceCache cache(inputs_of(loaded, s), s.sweep.guardrail_k);
    err << "[atlas] " << spec.key() << '\n';
    const auto result = run_trial(spec, cache, s.sweep);
    if (!result.valid()) throw Error(ErrorCode::undefined_metric, "trial " + spec.key() + " failed: " + result.error);
    const auto entry = cache.space(spec.feature, spec.projection);

    auto features = cache.features(spec.feature);
    const bool concept_columns = std::all_of(features->columns.begin(), features->columns.end(), [](const auto& c) {
        return c.kind == ColumnDescriptor::Kind::cluster;
    });
    if (!concept_columns) features = cache.features(parse_feature_variant("tfidf_counts+l2"));

    AtlasOptions options;
    options.k = s.atlas.k;
    if (alt) {
        const auto alt_trial = make_trial(s.sweep, spec.feature, spec.projection, *alt);
        const auto run = run_clustering(entry->space.coordinates, entry->distances, alt_trial.clustering);
        options.alt_labels = AltLabeling{alt->name(), run.assignment.n_clusters, run.assignment.labels};
    }
    auto trial_json = to_json(result);
    trial_json.erase("labels");
    options.provenance = {{"seed", s.seed}, {"trial", trial_json}, {"concept_features", features->variant.name()},
                          {"config", s.to_json()}};
    const auto doc = build_atlas(loaded.corpus, entry->space, make_assignment(result.labels), loaded.codebook,
                                 *features, options);
    const auto json_path = out_path(s, "atlas.json");
    const fs::path html_path = f.html ? out_path(s, "atlas.html") : fs::path();
    save_atlas(doc, json_path, html_path);
    nlohmann::json summary{{"atlas", json_path.string()},
                           {"trial", spec.key()},
                           {"works", doc.works.size()},
                           {"clusters", doc.clusters.size()},
                           {"silhouette", result.metrics->silhouette},
                           {"mutual_pairs", doc.mutual_pairs.size()}};
    if (f.html) summary["html"] = html_path.string();
    out << summary.dump(2) << '\n';
    return ok;
}

}  // namespace

int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, const EnvLookup& env) {
    CLI::App app{"Axis-aware clustering atlas pipeline", "axis-atlas"};
    app.require_subcommand(1);
    Flags f;

    auto common = [&f](CLI::App* sub) {
        sub->add_option("--config", f.config, "JSON configuration file")->check(CLI::ExistingFile);
        sub->add_option("--seed", f.seed, "Seed for every stochastic step (default 42)");
        sub->add_option("--jobs", f.jobs, "Worker threads");
        sub->add_option("--out-dir", f.out_dir, "Directory for output files");
        sub->add_option("--corpus", f.corpus, "Corpus JSON file");
        sub->add_option("--embeddings", f.embeddings, "Embedding table (text or binary)");
        sub->add_flag("--allow-missing", f.allow_missing, "Skip corpus keywords absent from the table");
    };
    auto with_codebook = [&f](CLI::App* sub) {
        sub->add_option("--codebook", f.codebook, "Previously saved codebook.json (skips the build)");
    };
    auto sweep_flags = [&f](CLI::App* sub) {
        sub->add_option("--k-list", f.k_list, "Cluster counts, e.g. 2..15 or 2,4,8");
        sub->add_flag("--allow-extended-k", f.allow_extended_k, "Permit k outside [2, 15]");
        sub->add_option("--max-trials", f.max_trials, "Trial cap");
        sub->add_option("--bootstrap-reps", f.bootstrap_reps, "Bootstrap resamples for stability");
    };
    auto trial_flags = [&f](CLI::App* sub) {
        sub->add_option("--report", f.report, "Use the headline trial of this sweep report")->check(CLI::ExistingFile);
        sub->add_option("--feature", f.feature, "Feature variant name, e.g. tfidf_counts+l2");
        sub->add_option("--projection", f.projection, "Projection name, e.g. umap4_nn10_md0.01_cosine");
        sub->add_option("--clustering", f.clustering, "Clustering name, e.g. agglomerative_average_k15");
    };

    auto* validate = app.add_subcommand("validate", "Check corpus keywords against the embedding table");
    common(validate);
    auto* codebook = app.add_subcommand("codebook", "Build and save the keyword codebook");
    common(codebook);
    with_codebook(codebook);
    auto* features = app.add_subcommand("features", "Build artwork feature matrices");
    common(features);
    with_codebook(features);
    features->add_option("--variant", f.variants, "Feature variant(s); default: the sweep's list");
    auto* sweep = app.add_subcommand("sweep", "Run the representation/space/algorithm sweep");
    common(sweep);
    with_codebook(sweep);
    sweep_flags(sweep);
    auto* stab = app.add_subcommand("stability", "Seed and bootstrap stability of one configuration");
    common(stab);
    with_codebook(stab);
    sweep_flags(stab);
    trial_flags(stab);
    auto* atlas = app.add_subcommand("atlas", "Export the atlas document for one configuration");
    common(atlas);
    with_codebook(atlas);
    sweep_flags(atlas);
    trial_flags(atlas);
    atlas->add_option("--neighbors", f.neighbors, "Neighbourhood size for mutual k-NN (default 5)");
    atlas->add_option("--alt-clustering", f.alt_clustering, "Second labelling stored as alt_labels");
    atlas->add_flag("--html", f.html, "Also write a self-contained atlas.html");

    std::vector<const char*> argv{"axis-atlas"};
    for (const auto& a : args) argv.push_back(a.c_str());

    Settings settings;
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
        settings = merge(f, env);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? ok : config_error;
    } catch (const std::exception& e) {
        err << "configuration error: " << e.what() << '\n';
        return config_error;
    }
    err << "[axis-atlas] effective configuration: " << settings.to_json().dump() << '\n';

    try {
        if (validate->parsed()) return cmd_validate(settings, out, err);
        if (codebook->parsed()) return cmd_codebook(settings, out, err);
        if (features->parsed()) return cmd_features(settings, f, out, err);
        if (sweep->parsed()) return cmd_sweep(settings, out, err);
        if (stab->parsed()) return cmd_stability(settings, f, out, err);
        if (atlas->parsed()) return cmd_atlas(settings, f, out, err);
    } catch (const ConfigError& e) {
        err << "configuration error: " << e.what() << '\n';
        return config_error;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return runtime_failure;
    }
    return config_error;
}

}  // namespace axis_atlas::cli
