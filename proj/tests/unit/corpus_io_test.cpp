#include <algorithm>
#include <filesystem>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include <axis_atlas/corpus_io.hpp>
#include <axis_atlas/error.hpp>

using namespace axis_atlas;
using nlohmann::json;

namespace {

const std::filesystem::path kFixtures = AXIS_ATLAS_FIXTURE_DIR;

json small_doc() {
    return json{{"axes", {"Materiality", "Methodology"}},
                {"works",
                 {{{"id", "w2"},
                   {"title", "Second"},
                   {"artist", "B"},
                   {"year", 2001},
                   {"keywords", {{"Materiality", {"Plant", "cell  culture "}}, {"Methodology", {"growth"}}}}},
                  {{"id", "w1"},
                   {"title", "First"},
                   {"artist", "A"},
                   {"keywords", {{"Materiality", {"plant", "PLANT"}}}}}}}};
}

ErrorCode code_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "no error thrown";
    return ErrorCode::io;
}

CorpusOptions any_axes() {
    CorpusOptions o;
    o.expected_axis_count.reset();
    return o;
}

}  // namespace

TEST(NormalizeKeyword, FoldsAndCollapses) {
    EXPECT_EQ(normalize_keyword("  Cell   Culture\t"), "cell culture");
    EXPECT_EQ(normalize_keyword("DNA"), "dna");
}

TEST(ParseCorpus, SortsDedupsAndIndexes) {
    const auto c = parse_corpus(small_doc(), any_axes());
    ASSERT_EQ(c.works.size(), 2u);
    EXPECT_EQ(c.works[0].id, "w1");
    EXPECT_FALSE(c.works[0].year.has_value());
    EXPECT_EQ(c.works[0].keywords[0], (std::vector<std::string>{"plant"}));
    EXPECT_EQ(c.works[1].keywords[0], (std::vector<std::string>{"plant", "cell culture"}));
    EXPECT_FALSE(c.warnings.empty());
    EXPECT_EQ(c.assignment_count(), 4u);
    EXPECT_EQ(c.vocabulary(), (std::vector<std::string>{"cell culture", "growth", "plant"}));
    EXPECT_EQ(c.artists.at("A"), (std::vector<std::string>{"w1"}));
    EXPECT_EQ(c.axis_index("Methodology"), 1u);
    EXPECT_EQ(c.work_index("w2"), 1u);
}

TEST(ParseCorpus, Errors) {
    auto doc = small_doc();
    doc["works"][0]["keywords"]["Materiality2"] = {"x"};
    EXPECT_EQ(code_of([&] { parse_corpus(doc, any_axes()); }), ErrorCode::unknown_axis);
    try {
        parse_corpus(doc, any_axes());
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("w2"), std::string::npos);
    }

    doc = small_doc();
    doc["works"][1]["id"] = "w2";
    EXPECT_EQ(code_of([&] { parse_corpus(doc, any_axes()); }), ErrorCode::duplicate_id);

    EXPECT_EQ(code_of([&] { parse_corpus(small_doc()); }), ErrorCode::parse);  // 13 axes expected
    EXPECT_EQ(code_of([&] { parse_corpus(json::array()); }), ErrorCode::parse);
}

TEST(ParseCorpus, EmptyWorksIsFine) {
    auto doc = small_doc();
    doc["works"] = json::array();
    const auto c = parse_corpus(doc, any_axes());
    EXPECT_TRUE(c.works.empty());
    EXPECT_EQ(c.assignment_count(), 0u);
}

TEST(ParseCorpus, RoundTripsThroughJson) {
    const auto c = parse_corpus(small_doc(), any_axes());
    EXPECT_EQ(parse_corpus(corpus_to_json(c), any_axes()), c);
}

TEST(ParseCorpus, WorkOrderDoesNotMatter) {
    const auto base = load_corpus(kFixtures / "bioart_corpus.json");
    auto doc = corpus_to_json(base);
    auto works = doc["works"];
    std::reverse(works.begin(), works.end());
    std::mt19937_64 gen(5);
    std::shuffle(works.begin(), works.end(), gen);
    doc["works"] = works;
    EXPECT_EQ(parse_corpus(doc), base);
}

TEST(Fixture, ShapeOfReleasedDataset) {
    const auto c = load_corpus(kFixtures / "bioart_corpus.json");
    EXPECT_EQ(c.works.size(), 81u);
    EXPECT_EQ(c.artists.size(), 33u);
    EXPECT_EQ(c.axes.size(), 13u);
    EXPECT_EQ(c.assignment_count(), 2285u);
    EXPECT_EQ(c.vocabulary().size(), 770u);
    EXPECT_EQ(c.artists.at("Stelarc").size(), 4u);

    const auto t = load_embedding_table(kFixtures / "bioart_embeddings.axeb");
    const auto r = validate_against(c, t);
    EXPECT_TRUE(r.ok());
    EXPECT_EQ(r.assignments, 2285u);
    EXPECT_EQ(r.present, 770u);
}

TEST(EmbeddingTable, TextFormat) {
    const auto t = parse_embedding_text("dim=2\nplant\t1\t0\n");
    EXPECT_EQ(t.dimension, 2u);
    ASSERT_TRUE(t.find("plant"));
    EXPECT_EQ(t.vector(*t.find("plant")), Vector((Vector(2) << 1, 0).finished()));
    EXPECT_FALSE(t.find("data"));
}

TEST(EmbeddingTable, TextErrors) {
    EXPECT_EQ(code_of([] { parse_embedding_text("dim=3\na\t1\t2\n"); }), ErrorCode::dimension_mismatch);
    EXPECT_EQ(code_of([] { parse_embedding_text("a\t1\n"); }), ErrorCode::parse);
    EXPECT_EQ(code_of([] { parse_embedding_text("dim=1\na\t1\nA\t2\n"); }), ErrorCode::duplicate_keyword);
    EXPECT_EQ(code_of([] { parse_embedding_text("dim=1\na\tnan\n"); }), ErrorCode::non_finite);
}

TEST(EmbeddingTable, TextAndBinaryRoundTrip) {
    Matrix v(3, 4);
    v << 1, 2, 3, 4, -0.5, 0.25, 0, 1e-3, 7, 8, 9, 10;
    const auto t = make_embedding_table({"alpha", "beta", "gamma"}, v);
    const auto b = parse_embedding_binary(embedding_table_to_binary(t));
    const auto x = parse_embedding_text(embedding_table_to_text(t));
    EXPECT_EQ(b.keywords, t.keywords);
    EXPECT_EQ(x.keywords, t.keywords);
    EXPECT_TRUE(b.vectors == t.vectors);
    EXPECT_TRUE(x.vectors == t.vectors);

    auto bytes = embedding_table_to_binary(t);
    bytes.pop_back();
    EXPECT_THROW(parse_embedding_binary(bytes), Error);
}

TEST(Validate, MissingAndUnused) {
    const auto c = parse_corpus(small_doc(), any_axes());
    Matrix v = Matrix::Ones(3, 2);
    const auto t = make_embedding_table({"plant", "growth", "unused-term"}, v);
    const auto r = validate_against(c, t);
    EXPECT_EQ(r.missing, (std::vector<std::string>{"cell culture"}));
    EXPECT_EQ(r.unused, (std::vector<std::string>{"unused-term"}));
    EXPECT_FALSE(r.ok());

    // missing and present partition the vocabulary
    std::set<std::string> all(r.missing.begin(), r.missing.end());
    EXPECT_EQ(all.size() + r.present, c.vocabulary().size());
}
