#include "tct/datagen.hpp"

#include <algorithm>
#include <array>
#include <map>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <stdexcept>
#include <string>

#include "tct/error.hpp"
#include "tct/sparse_index.hpp"

namespace tct {

namespace {

constexpr std::array<char const*, 6> punctuation = {".", ",", ";", ":", "?", "!"};

struct Topic {
    std::vector<std::size_t> words;
    std::discrete_distribution<std::size_t> pick;
};

std::string word_name(std::size_t w)
{
    char buf[16];
    std::snprintf(buf, sizeof(buf), "w%04zu", w);
    return buf;
}

std::string make_id(char prefix, std::size_t i, std::size_t total)
{
    int width = static_cast<int>(std::to_string(total > 0 ? total - 1 : 0).size());
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%c%0*zu", prefix, width, i);
    return buf;
}

std::size_t words_per_topic(SynthConfig const& c)
{
    // Solves num_topics * exclusive + 2 * per_topic = vocab_size.
    double exclusive_share = static_cast<double>(c.num_topics) * (1.0 - c.topic_vocab_overlap);
    auto per_topic = static_cast<std::size_t>(static_cast<double>(c.vocab_size) / (exclusive_share + 2.0));
    auto needed = [&](std::size_t n) {
        auto shared = static_cast<std::size_t>(std::lround(c.topic_vocab_overlap * static_cast<double>(n)));
        return c.num_topics * (n - shared) + 2 * n;
    };
    while (per_topic > 0 && needed(per_topic) > c.vocab_size) {
        --per_topic;
    }
    return per_topic;
}

void validate(SynthConfig const& c)
{
    if (c.num_topics == 0 || c.docs_per_topic == 0 || c.vocab_size == 0 || c.query_len == 0 || c.doc_len == 0
        || c.num_queries == 0 || c.num_train_queries == 0 || c.negatives_per_query == 0 || c.negative_depth == 0) {
        throw std::invalid_argument("synthetic config: all counts must be at least 1");
    }
    if (!(c.topic_vocab_overlap >= 0.0 && c.topic_vocab_overlap <= 1.0)) {
        throw std::invalid_argument("synthetic config: topic_vocab_overlap must lie in [0, 1]");
    }
    if (!(c.query_noise >= 0.0 && c.query_noise <= 1.0) || !(c.punctuation_rate >= 0.0 && c.punctuation_rate <= 1.0)) {
        throw std::invalid_argument("synthetic config: probabilities must lie in [0, 1]");
    }
    if (words_per_topic(c) < 4) {
        throw std::invalid_argument(
            "synthetic config: vocabulary of " + std::to_string(c.vocab_size) + " words is too small for "
            + std::to_string(c.num_topics) + " topics");
    }
}

std::vector<Topic> make_topics(SynthConfig const& c, std::mt19937_64& rng)
{
    // Word list per topic: `shared` words from a common pool twice the size of
    // a topic, the rest exclusive.
    std::size_t per_topic = words_per_topic(c);
    auto shared = static_cast<std::size_t>(std::lround(c.topic_vocab_overlap * static_cast<double>(per_topic)));
    std::size_t exclusive = per_topic - shared;
    std::size_t pool_size = 2 * per_topic;

    std::vector<std::size_t> words(c.vocab_size);
    std::iota(words.begin(), words.end(), 0);
    std::shuffle(words.begin(), words.end(), rng);
    std::vector<std::size_t> pool(words.begin(), words.begin() + static_cast<std::ptrdiff_t>(pool_size));
    auto next_exclusive = words.begin() + static_cast<std::ptrdiff_t>(pool_size);

    std::vector<double> weights(per_topic);
    for (std::size_t r = 0; r < per_topic; ++r) {
        weights[r] = 1.0 / std::pow(static_cast<double>(r + 1), c.zipf_exponent);
    }

    std::vector<Topic> topics;
    for (std::size_t k = 0; k < c.num_topics; ++k) {
        Topic t;
        t.words.assign(next_exclusive, next_exclusive + static_cast<std::ptrdiff_t>(exclusive));
        next_exclusive += static_cast<std::ptrdiff_t>(exclusive);
        std::vector<std::size_t> from_pool;
        std::sample(pool.begin(), pool.end(), std::back_inserter(from_pool), shared, rng);
        t.words.insert(t.words.end(), from_pool.begin(), from_pool.end());
        std::shuffle(t.words.begin(), t.words.end(), rng);
        t.pick = std::discrete_distribution<std::size_t>(weights.begin(), weights.end());
        topics.push_back(std::move(t));
    }
    return topics;
}

struct Document {
    std::size_t topic;
    std::vector<std::size_t> words;
    std::string text;
};

Document make_document(SynthConfig const& c, std::size_t topic, Topic& t, std::mt19937_64& rng)
{
    Document d{topic, {}, {}};
    std::bernoulli_distribution punct(c.punctuation_rate);
    std::uniform_int_distribution<std::size_t> which(0, punctuation.size() - 1);
    for (std::size_t i = 0; i < c.doc_len; ++i) {
        auto w = t.words[t.pick(rng)];
        d.words.push_back(w);
        if (!d.text.empty()) {
            d.text += ' ';
        }
        d.text += word_name(w);
        if (punct(rng)) {
            d.text += ' ';
            d.text += punctuation[which(rng)];
        }
    }
    return d;
}

std::string make_query(SynthConfig const& c, Document const& target, Topic& t, std::mt19937_64& rng)
{
    std::bernoulli_distribution noise(c.query_noise);
    std::uniform_int_distribution<std::size_t> from_doc(0, target.words.size() - 1);
    std::string text;
    for (std::size_t i = 0; i < c.query_len; ++i) {
        auto w = noise(rng) ? t.words[t.pick(rng)] : target.words[from_doc(rng)];
        if (!text.empty()) {
            text += ' ';
        }
        text += word_name(w);
    }
    return text;
}

void write_file(std::filesystem::path const& path, auto&& writer)
{
    std::ofstream out(path);
    if (!out) {
        throw data_error("cannot open " + path.string() + " for writing");
    }
    writer(out);
}

}  // namespace

SyntheticDataset generate(SynthConfig const& config)
{
    validate(config);
    std::mt19937_64 rng(config.seed);
    auto topics = make_topics(config, rng);

    SyntheticDataset data;
    std::vector<Document> docs;
    std::size_t num_docs = config.num_topics * config.docs_per_topic;
    for (std::size_t k = 0; k < config.num_topics; ++k) {
        for (std::size_t i = 0; i < config.docs_per_topic; ++i) {
            docs.push_back(make_document(config, k, topics[k], rng));
            data.corpus.push_back({make_id('D', docs.size() - 1, num_docs), docs.back().text});
        }
    }

    std::uniform_int_distribution<std::size_t> any_doc(0, docs.size() - 1);
    auto make_split = [&](char prefix, std::size_t count, Corpus& queries, Qrels& qrels) {
        for (std::size_t i = 0; i < count; ++i) {
            auto target = any_doc(rng);
            auto const& doc = docs[target];
            auto qid = make_id(prefix, i, count);
            queries.push_back({qid, make_query(config, doc, topics[doc.topic], rng)});
            qrels[qid][data.corpus[target].id] = 1;
        }
    };
    make_split('Q', config.num_queries, data.queries, data.qrels);
    make_split('T', config.num_train_queries, data.train_queries, data.train_qrels);

    auto sparse = SparseIndex::build(data.corpus);
    std::map<std::string, std::size_t> position;
    for (std::size_t d = 0; d < data.corpus.size(); ++d) {
        position.emplace(data.corpus[d].id, d);
    }
    for (auto const& q : data.train_queries) {
        std::set<std::string> positives;
        for (auto const& [doc, grade] : data.train_qrels.at(q.id)) {
            if (grade >= 1) {
                positives.insert(doc);
            }
        }
        auto const& positive_text = data.corpus[position.at(*positives.begin())].text;
        for (std::size_t n = 0; n < config.negatives_per_query; ++n) {
            auto neg = sample_bm25_negative(sparse, q.text, positives, rng, config.negative_depth);
            data.triples.push_back({q.text, positive_text, data.corpus[position.at(neg)].text});
        }
    }
    return data;
}

void write_dataset(std::filesystem::path const& dir, SyntheticDataset const& data)
{
    std::filesystem::create_directories(dir);
    write_file(dir / "corpus.tsv", [&](std::ostream& out) { write_id_text(out, data.corpus); });
    write_file(dir / "queries.tsv", [&](std::ostream& out) { write_id_text(out, data.queries); });
    write_file(dir / "qrels.txt", [&](std::ostream& out) { write_qrels(out, data.qrels); });
    write_file(dir / "train_queries.tsv", [&](std::ostream& out) { write_id_text(out, data.train_queries); });
    write_file(dir / "train_qrels.txt", [&](std::ostream& out) { write_qrels(out, data.train_qrels); });
    write_file(dir / "triples.tsv", [&](std::ostream& out) { write_triples(out, data.triples); });
}

}  // namespace tct
