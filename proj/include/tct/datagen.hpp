#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "tct/eval.hpp"
#include "tct/tsv.hpp"

namespace tct {

/// Topic-mixture generator for a small labeled retrieval collection.
///
/// Every topic owns a Zipf-weighted word list; a fraction `topic_vocab_overlap`
/// of that list is drawn from a pool shared by all topics. Passages sample
/// words from their topic, with punctuation sprinkled in. A query is sampled
/// mostly from the words of one target passage (its single relevant passage)
/// and partly from the topic at large, so BM25 negatives for it are same-topic
/// lexical near misses.
struct SynthConfig {
    std::size_t num_topics = 20;
    std::size_t docs_per_topic = 50;
    std::size_t vocab_size = 2000;
    double topic_vocab_overlap = 0.3;
    std::size_t query_len = 8;
    std::size_t doc_len = 60;
    /// Held-out evaluation queries.
    std::size_t num_queries = 200;
    /// Queries used only to build training triplets.
    std::size_t num_train_queries = 2000;
    std::size_t negatives_per_query = 1;
    std::size_t negative_depth = 100;
    double zipf_exponent = 1.0;
    /// Probability that a query token comes from the topic rather than the target passage.
    double query_noise = 0.3;
    /// Probability of a punctuation token after each passage word.
    double punctuation_rate = 0.1;
    std::uint64_t seed = 42;
};

struct SyntheticDataset {
    Corpus corpus;
    Corpus queries;
    Qrels qrels;
    Corpus train_queries;
    Qrels train_qrels;
    std::vector<TextTriplet> triples;
};

/// Throws std::invalid_argument for an invalid config, including a vocabulary
/// too small to give every topic at least four words.
SyntheticDataset generate(SynthConfig const& config);

/// Writes corpus.tsv, queries.tsv, qrels.txt, train_queries.tsv,
/// train_qrels.txt and triples.tsv into `dir`.
void write_dataset(std::filesystem::path const& dir, SyntheticDataset const& data);

}  // namespace tct
