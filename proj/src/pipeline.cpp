#include "tct/pipeline.hpp"

#include <unordered_map>
#include <vector>

#include "tct/error.hpp"
#include "tct/scoring.hpp"

namespace tct {

namespace {

std::unordered_map<std::string, std::size_t> positions(std::vector<std::string> const& ids)
{
    std::unordered_map<std::string, std::size_t> out;
    out.reserve(ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i) {
        out.emplace(ids[i], i);
    }
    return out;
}

}  // namespace

EmbeddingModel make_model(std::span<const Passage> corpus, std::span<const TextTriplet> triples, ModelConfig const& config)
{
    std::vector<std::string> texts;
    texts.reserve(corpus.size() + 3 * triples.size());
    for (auto const& p : corpus) {
        texts.push_back(p.text);
    }
    for (auto const& t : triples) {
        texts.push_back(t.query);
        texts.push_back(t.positive);
        texts.push_back(t.negative);
    }
    EmbeddingModel model;
    model.vocab = Vocabulary::from_texts(texts);
    model.table = EmbeddingTable::random(model.vocab.size(), config.embedding_dim, config.seed);
    return model;
}

Projection initial_projection(ModelConfig const& config)
{
    // Offset so the projection stream differs from the embedding stream.
    return Projection::random(config.embedding_dim, config.projection_dim, config.seed + 1);
}

DistillConfig teacher_training_config(std::uint64_t seed)
{
    DistillConfig c;
    c.seed = seed;
    return c;
}

DistillConfig student_training_config(DistillMode mode, std::uint64_t seed)
{
    DistillConfig c;
    c.mode = mode;
    c.learning_rate = default_student_learning_rate;
    c.seed = seed;
    return c;
}

Run dense_retrieve(
    DenseIndex const& index,
    std::span<const Passage> queries,
    EmbeddingModel const& model,
    Projection const& student,
    std::size_t k,
    std::size_t query_max_len)
{
    Run run;
    for (auto const& q : queries) {
        auto ids = tokenize(q.text, model.vocab, query_max_len);
        auto enc = encode_pooled(model.table, ids, student);
        run.emplace(q.id, index.search(*enc.pooled, k));
    }
    return run;
}

Run sparse_retrieve(SparseIndex const& index, std::span<const Passage> queries, std::size_t k)
{
    Run run;
    for (auto const& q : queries) {
        run.emplace(q.id, index.search(q.text, k));
    }
    return run;
}

Run maxsim_rerank(
    Run const& candidates,
    std::span<const Passage> queries,
    TokenizedCorpus const& corpus,
    EmbeddingModel const& model,
    Projection const& teacher,
    std::size_t query_max_len)
{
    std::vector<std::string> ids;
    for (auto const& p : corpus) {
        ids.push_back(p.id);
    }
    auto where = positions(ids);
    std::unordered_map<std::size_t, Matrix> doc_cache;
    Run run;
    for (auto const& q : queries) {
        auto it = candidates.find(q.id);
        if (it == candidates.end()) {
            continue;
        }
        auto qenc = encode_teacher_query(model.table, tokenize(q.text, model.vocab, query_max_len), teacher);
        RankedList hits;
        for (auto const& h : it->second) {
            auto pos = where.find(h.doc_id);
            if (pos == where.end()) {
                throw data_error("candidate " + h.doc_id + " is not in the corpus");
            }
            auto cached = doc_cache.find(pos->second);
            if (cached == doc_cache.end()) {
                auto enc = encode_teacher_doc(model.table, corpus[pos->second].ids, teacher, model.vocab);
                cached = doc_cache.emplace(pos->second, std::move(enc.token_vectors)).first;
            }
            hits.push_back({h.doc_id, maxsim(qenc.token_vectors, cached->second)});
        }
        rank_and_truncate(hits, hits.size());
        run.emplace(q.id, std::move(hits));
    }
    return run;
}

Run pooled_rerank(
    Run const& candidates,
    std::span<const Passage> queries,
    DenseIndex const& index,
    EmbeddingModel const& model,
    Projection const& student,
    std::size_t query_max_len)
{
    auto where = positions(index.doc_ids());
    Run run;
    for (auto const& q : queries) {
        auto it = candidates.find(q.id);
        if (it == candidates.end()) {
            continue;
        }
        auto enc = encode_pooled(model.table, tokenize(q.text, model.vocab, query_max_len), student);
        RankedList hits;
        for (auto const& h : it->second) {
            auto pos = where.find(h.doc_id);
            if (pos == where.end()) {
                throw data_error("candidate " + h.doc_id + " is not in the index");
            }
            auto v = index.vector(pos->second);
            double s = 0.0;
            for (std::size_t j = 0; j < v.size(); ++j) {
                s += (*enc.pooled)[j] * static_cast<double>(v[j]);
            }
            hits.push_back({h.doc_id, s});
        }
        rank_and_truncate(hits, hits.size());
        run.emplace(q.id, std::move(hits));
    }
    return run;
}

}  // namespace tct
