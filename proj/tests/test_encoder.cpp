#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <stdexcept>

#include "support.hpp"
#include "tct/encoder.hpp"
#include "tct/error.hpp"

namespace tct {
namespace {

Projection fixed_projection(std::size_t t, std::size_t h, std::vector<double> values)
{
    return Projection{Matrix(t, h, std::move(values))};
}

TEST(SplitTokens, LowercasesAndSeparatesPunctuation)
{
    auto toks = split_tokens("Dense  Retrieval, at\tscale!");
    std::vector<std::string> expected{"dense", "retrieval", ",", "at", "scale", "!"};
    EXPECT_EQ(toks, expected);
}

TEST(Tokenize, KnownWordsMapDirectly)
{
    Vocabulary vocab;
    auto dense = vocab.add("dense");
    auto retrieval = vocab.add("retrieval");
    EXPECT_EQ(tokenize("Dense Retrieval", vocab, 32), (std::vector<TokenId>{dense, retrieval}));
}

TEST(Tokenize, UnknownWordsMapToUnk)
{
    Vocabulary vocab;
    auto a = vocab.add("a");
    EXPECT_EQ(tokenize("a zzz", vocab, 32), (std::vector<TokenId>{a, Vocabulary::unk_id}));
}

TEST(Tokenize, TruncatesToMaxLength)
{
    Vocabulary vocab;
    std::string text;
    for (int i = 0; i < 200; ++i) {
        vocab.add("t" + std::to_string(i));
        text += "t" + std::to_string(i) + " ";
    }
    auto ids = tokenize(text, vocab, 150);
    ASSERT_EQ(ids.size(), 150u);
    for (std::size_t i = 0; i < ids.size(); ++i) {
        EXPECT_EQ(vocab.token(ids[i]), "t" + std::to_string(i));
    }
}

TEST(Tokenize, EmptyTextIsAnError)
{
    Vocabulary vocab;
    EXPECT_THROW(tokenize("", vocab, 32), std::invalid_argument);
    EXPECT_THROW(tokenize("   \t ", vocab, 32), std::invalid_argument);
}

TEST(Vocabulary, IdsAreDenseAndPunctuationIsTracked)
{
    auto vocab = Vocabulary::from_texts(std::vector<std::string>{"b a, b.", "c ;"});
    ASSERT_EQ(vocab.size(), 7u);
    EXPECT_EQ(vocab.token(0), "[UNK]");
    EXPECT_EQ(vocab.id("b"), 1u);
    EXPECT_EQ(vocab.id("a"), 2u);
    EXPECT_TRUE(vocab.is_punctuation(vocab.id(",")));
    EXPECT_TRUE(vocab.is_punctuation(vocab.id(";")));
    EXPECT_FALSE(vocab.is_punctuation(vocab.id("c")));
    EXPECT_FALSE(vocab.is_punctuation(Vocabulary::unk_id));
}

TEST(TeacherEncoding, SingleTokenRowIsNormalized)
{
    EmbeddingModel model;
    auto w = model.vocab.add("w");
    model.table.table = Matrix(2, 2, {0.0, 0.0, 1.0, 0.0});
    auto proj = fixed_projection(2, 2, {3.0, 4.0, 0.0, 1.0});
    auto enc = encode_teacher_query(model.table, std::vector<TokenId>{w}, proj);
    ASSERT_EQ(enc.token_vectors.rows(), 1u);
    EXPECT_NEAR(enc.token_vectors(0, 0), 0.6, 1e-15);
    EXPECT_NEAR(enc.token_vectors(0, 1), 0.8, 1e-15);
    EXPECT_FALSE(enc.pooled.has_value());
}

TEST(TeacherEncoding, IdenticalTokensGiveIdenticalRows)
{
    auto model = test::small_model(5, 8, 1);
    auto proj = Projection::random(8, 4, 2);
    auto enc = encode_teacher_query(model.table, std::vector<TokenId>{3, 3}, proj);
    EXPECT_TRUE(std::equal(enc.token_vectors.row(0).begin(), enc.token_vectors.row(0).end(), enc.token_vectors.row(1).begin()));
}

TEST(TeacherEncoding, RandomRowsAreUnitNorm)
{
    auto model = test::small_model(50, 16, 3);
    auto proj = Projection::random(16, 8, 4);
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        auto ids = test::random_ids(model, 5, rng, false);
        auto enc = encode_teacher_query(model.table, ids, proj);
        for (std::size_t i = 0; i < enc.token_vectors.rows(); ++i) {
            EXPECT_NEAR(l2_norm(enc.token_vectors.row(i)), 1.0, 1e-6);
        }
    }
}

TEST(TeacherEncoding, ZeroRowNamesThePosition)
{
    EmbeddingModel model;
    auto a = model.vocab.add("a");
    auto z = model.vocab.add("z");
    model.table.table = Matrix(3, 2, {0.0, 0.0, 1.0, 0.0, 0.0, 0.0});
    auto proj = fixed_projection(2, 2, {1.0, 0.0, 0.0, 1.0});
    try {
        encode_teacher_query(model.table, std::vector<TokenId>{a, z}, proj);
        FAIL() << "expected an error";
    } catch (std::domain_error const& e) {
        EXPECT_NE(std::string(e.what()).find("position 1"), std::string::npos);
    }
}

TEST(TeacherEncoding, DocumentFilterDropsPunctuation)
{
    auto model = test::small_model(4, 8, 6);
    auto proj = Projection::random(8, 4, 7);
    auto w = model.vocab.id("w1");
    auto w2 = model.vocab.id("w2");
    auto punct = model.vocab.id(",");
    auto doc = encode_teacher_doc(model.table, std::vector<TokenId>{w, punct, w2}, proj, model.vocab);
    auto query = encode_teacher_query(model.table, std::vector<TokenId>{w, w2}, proj);
    EXPECT_EQ(doc.token_vectors, query.token_vectors);
    EXPECT_EQ(doc.source_len, 3u);
}

TEST(TeacherEncoding, NoPunctuationMatchesQueryEncoding)
{
    auto model = test::small_model(10, 8, 8);
    auto proj = Projection::random(8, 4, 9);
    std::vector<TokenId> ids{1, 4, 2, 9};
    EXPECT_EQ(
        encode_teacher_doc(model.table, ids, proj, model.vocab).token_vectors,
        encode_teacher_query(model.table, ids, proj).token_vectors);
}

TEST(TeacherEncoding, AllPunctuationDocumentIsAnError)
{
    auto model = test::small_model(3, 8, 10);
    auto proj = Projection::random(8, 4, 11);
    std::vector<TokenId> ids{model.vocab.id("."), model.vocab.id(";")};
    EXPECT_THROW(encode_teacher_doc(model.table, ids, proj, model.vocab), std::invalid_argument);
}

TEST(TeacherEncoding, RowsTrackTokenOrder)
{
    auto model = test::small_model(10, 8, 12);
    auto proj = Projection::random(8, 4, 13);
    std::vector<TokenId> ids{1, 2, 3};
    std::vector<TokenId> shuffled{3, 1, 2};
    auto a = encode_teacher_query(model.table, ids, proj).token_vectors;
    auto b = encode_teacher_query(model.table, shuffled, proj).token_vectors;
    for (std::size_t j = 0; j < 4; ++j) {
        EXPECT_EQ(a(0, j), b(1, j));
        EXPECT_EQ(a(1, j), b(2, j));
        EXPECT_EQ(a(2, j), b(0, j));
    }
}

TEST(PooledEncoding, MeanOfOneIsTheProjectedRow)
{
    EmbeddingModel model;
    auto a = model.vocab.add("a");
    model.table.table = Matrix(2, 2, {0.0, 0.0, 1.0, 2.0});
    auto proj = fixed_projection(2, 2, {1.0, 0.0, 0.0, 1.0});
    auto enc = encode_pooled(model.table, std::vector<TokenId>{a}, proj);
    ASSERT_TRUE(enc.pooled.has_value());
    EXPECT_EQ(*enc.pooled, (Vector{1.0, 2.0}));
}

TEST(PooledEncoding, ArithmeticMeanOfTwoRows)
{
    EmbeddingModel model;
    auto a = model.vocab.add("a");
    auto b = model.vocab.add("b");
    model.table.table = Matrix(3, 2, {0.0, 0.0, 1.0, 2.0, 3.0, 4.0});
    auto proj = fixed_projection(2, 2, {1.0, 0.0, 0.0, 1.0});
    auto enc = encode_pooled(model.table, std::vector<TokenId>{a, b}, proj);
    EXPECT_EQ(*enc.pooled, (Vector{2.0, 3.0}));
}

TEST(PooledEncoding, MatchesScalarLoopOracle)
{
    auto model = test::small_model(40, 12, 14);
    auto proj = Projection::random(12, 6, 15);
    std::mt19937_64 rng(16);
    auto ids = test::random_ids(model, 7, rng, true);
    auto enc = encode_pooled(model.table, ids, proj);
    for (std::size_t j = 0; j < 6; ++j) {
        double acc = 0.0;
        for (auto id : ids) {
            for (std::size_t k = 0; k < 12; ++k) {
                acc += model.table.table(id, k) * proj.weights(k, j);
            }
        }
        EXPECT_NEAR((*enc.pooled)[j], acc / 7.0, 1e-9);
    }
}

TEST(PooledEncoding, KeepsPunctuationAndScale)
{
    auto model = test::small_model(5, 8, 17);
    auto proj = Projection::random(8, 4, 18);
    std::vector<TokenId> with{1, model.vocab.id(",")};
    std::vector<TokenId> without{1};
    EXPECT_NE(*encode_pooled(model.table, with, proj).pooled, *encode_pooled(model.table, without, proj).pooled);
}

TEST(PooledEncoding, PermutationInvariant)
{
    auto model = test::small_model(30, 8, 19);
    auto proj = Projection::random(8, 4, 20);
    std::mt19937_64 rng(21);
    auto ids = test::random_ids(model, 9, rng, true);
    auto pooled = *encode_pooled(model.table, ids, proj).pooled;
    std::shuffle(ids.begin(), ids.end(), rng);
    auto shuffled = *encode_pooled(model.table, ids, proj).pooled;
    for (std::size_t j = 0; j < pooled.size(); ++j) {
        EXPECT_NEAR(pooled[j], shuffled[j], 1e-12);
    }
}

TEST(EmbeddingTable, SeededAndScaled)
{
    auto a = EmbeddingTable::random(500, 64, 3);
    auto b = EmbeddingTable::random(500, 64, 3);
    auto c = EmbeddingTable::random(500, 64, 4);
    EXPECT_EQ(a, b);
    EXPECT_NE(a, c);
    double sum_sq = 0.0;
    for (double x : a.table.values()) {
        sum_sq += x * x;
    }
    double variance = sum_sq / static_cast<double>(a.table.values().size());
    EXPECT_NEAR(variance, 1.0 / 64.0, 0.1 / 64.0);
}

TEST(Persistence, EmbeddingsRoundTrip)
{
    test::TempDir dir("encoder_emb");
    auto model = test::small_model(25, 8, 22);
    save_embeddings(dir / "emb.bin", model);
    auto loaded = load_embeddings(dir / "emb.bin");
    EXPECT_EQ(loaded.vocab.tokens(), model.vocab.tokens());
    EXPECT_EQ(loaded.table, model.table);
    EXPECT_TRUE(loaded.vocab.is_punctuation(loaded.vocab.id(";")));

    auto bytes = test::read_file(dir / "emb.bin");
    EXPECT_EQ(bytes.substr(0, 4), "TCTE");
    std::size_t strings = 0;
    for (auto const& tok : model.vocab.tokens()) {
        strings += 4 + tok.size();
    }
    EXPECT_EQ(bytes.size(), 16 + strings + model.table.table.values().size() * 4);
}

TEST(Persistence, ProjectionRoundTrip)
{
    test::TempDir dir("encoder_proj");
    auto proj = Projection::random(8, 5, 23);
    save_projection(dir / "p.bin", proj);
    EXPECT_EQ(load_projection(dir / "p.bin"), proj);
    EXPECT_EQ(test::read_file(dir / "p.bin").size(), 16u + 8 * 5 * 4);
}

TEST(Persistence, BadMagicAndTruncationAreDataErrors)
{
    test::TempDir dir("encoder_bad");
    {
        std::ofstream(dir / "bad.bin") << "XXXX";
    }
    EXPECT_THROW(load_projection(dir / "bad.bin"), data_error);
    EXPECT_THROW(load_embeddings(dir / "bad.bin"), data_error);
    EXPECT_THROW(load_projection(dir / "missing.bin"), data_error);

    auto proj = Projection::random(8, 5, 24);
    save_projection(dir / "p.bin", proj);
    auto bytes = test::read_file(dir / "p.bin");
    {
        std::ofstream(dir / "short.bin", std::ios::binary) << bytes.substr(0, bytes.size() - 3);
    }
    EXPECT_THROW(load_projection(dir / "short.bin"), data_error);
}

}  // namespace
}  // namespace tct
