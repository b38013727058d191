#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "tct/datagen.hpp"
#include "tct/dense_index.hpp"
#include "tct/distill.hpp"
#include "tct/error.hpp"
#include "tct/eval.hpp"
#include "tct/fusion.hpp"
#include "tct/pipeline.hpp"
#include "tct/sparse_index.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

enum ExitCode { ok = 0, usage = 1, data = 2, numerical = 3 };

constexpr char const* embeddings_file = "embeddings.bin";
constexpr char const* teacher_file = "teacher.bin";

struct Options {
    std::uint64_t seed = 42;
    bool verbose = false;

    // datagen
    tct::SynthConfig synth;

    // shared paths
    fs::path out;
    fs::path corpus;
    fs::path queries;
    fs::path triples;
    fs::path qrels;
    fs::path model_dir;
    fs::path projection;
    fs::path index;
    fs::path run;
    fs::path sparse_run;
    fs::path dense_run;
    fs::path loss_log;

    // model and training
    tct::ModelConfig model;
    std::string mode = "in_batch";
    double gamma = 0.1;
    double tau = 0.25;
    std::optional<double> learning_rate;
    std::size_t steps = 2000;
    std::size_t batch_size = 8;

    // retrieval
    std::size_t k = 1000;
    double k1 = 0.9;
    double b = 0.4;
    std::optional<double> alpha;
    bool teacher = false;
};

/// Records the configuration next to an output: `config.json` inside a
/// directory, `<file>.json` beside a file.
void write_sidecar(fs::path const& output, json const& config)
{
    fs::path path = fs::is_directory(output) ? output / "config.json" : fs::path(output.string() + ".json");
    std::ofstream out(path);
    if (!out) {
        throw tct::data_error("cannot write " + path.string());
    }
    out << config.dump(2) << '\n';
}

json base_config(std::string const& command, Options const& o)
{
    json j;
    j["command"] = command;
    j["seed"] = o.seed;
    return j;
}

void ensure_parent(fs::path const& file)
{
    if (file.has_parent_path()) {
        fs::create_directories(file.parent_path());
    }
}

std::ofstream open_output(fs::path const& path)
{
    ensure_parent(path);
    std::ofstream out(path);
    if (!out) {
        throw tct::data_error("cannot open " + path.string() + " for writing");
    }
    return out;
}

tct::EmbeddingModel load_model(fs::path const& dir)
{
    return tct::load_embeddings(dir / embeddings_file);
}

/// Loss stream: one `step total ce_term kl_term` line per optimizer step.
class LossLog {
  public:
    explicit LossLog(fs::path const& path)
    {
        if (!path.empty()) {
            m_out = open_output(path);
            m_out << "step\ttotal\tce_term\tkl_term\n";
        }
    }

    tct::StepCallback callback()
    {
        return [this](tct::StepRecord const& r) {
            if (m_out.is_open()) {
                char line[128];
                std::snprintf(line, sizeof(line), "%zu\t%.17g\t%.17g\t%.17g\n", r.step, r.total, r.ce_term, r.kl_term);
                m_out << line;
            }
            if (r.step % 200 == 0) {
                spdlog::info("step {} loss {:.6f} (ce {:.6f}, kl {:.6f})", r.step, r.total, r.ce_term, r.kl_term);
            }
        };
    }

  private:
    std::ofstream m_out;
};

int run_datagen(Options const& o)
{
    auto config = o.synth;
    config.seed = o.seed;
    auto data = tct::generate(config);
    tct::write_dataset(o.out, data);
    auto j = base_config("datagen", o);
    j["num_topics"] = config.num_topics;
    j["docs_per_topic"] = config.docs_per_topic;
    j["vocab_size"] = config.vocab_size;
    j["topic_vocab_overlap"] = config.topic_vocab_overlap;
    j["query_len"] = config.query_len;
    j["doc_len"] = config.doc_len;
    j["num_queries"] = config.num_queries;
    j["num_train_queries"] = config.num_train_queries;
    j["negatives_per_query"] = config.negatives_per_query;
    j["negative_depth"] = config.negative_depth;
    j["zipf_exponent"] = config.zipf_exponent;
    j["query_noise"] = config.query_noise;
    j["punctuation_rate"] = config.punctuation_rate;
    write_sidecar(o.out, j);
    spdlog::info("wrote {} passages, {} queries, {} triples to {}", data.corpus.size(), data.queries.size(),
        data.triples.size(), o.out.string());
    return ok;
}

json training_config(std::string const& command, Options const& o, tct::DistillConfig const& c)
{
    auto j = base_config(command, o);
    j["mode"] = std::string(tct::to_string(c.mode));
    j["gamma"] = c.gamma;
    j["tau"] = c.tau;
    j["learning_rate"] = c.learning_rate;
    j["steps"] = c.steps;
    j["batch_size"] = c.batch_size;
    j["triples"] = o.triples.string();
    return j;
}

int run_train_teacher(Options const& o)
{
    auto corpus = tct::read_id_text(o.corpus);
    auto triples = tct::read_triples(o.triples);
    auto model_config = o.model;
    model_config.seed = o.seed;
    auto model = tct::make_model(corpus, triples, model_config);
    auto triplets = tct::tokenize_triplets(triples, model.vocab);

    auto config = tct::teacher_training_config(o.seed);
    config.learning_rate = o.learning_rate.value_or(config.learning_rate);
    config.steps = o.steps;
    config.batch_size = o.batch_size;
    LossLog log(o.loss_log);
    auto teacher = tct::train_teacher(triplets, model, tct::initial_projection(model_config), config, log.callback());

    fs::create_directories(o.out);
    tct::save_embeddings(o.out / embeddings_file, model);
    tct::save_projection(o.out / teacher_file, teacher);
    auto j = training_config("train-teacher", o, config);
    j["corpus"] = o.corpus.string();
    j["embedding_dim"] = model_config.embedding_dim;
    j["projection_dim"] = model_config.projection_dim;
    j["vocab_size"] = model.vocab.size();
    write_sidecar(o.out, j);
    return ok;
}

int run_distill(Options const& o)
{
    auto model = load_model(o.model_dir);
    auto teacher = tct::load_projection(o.model_dir / teacher_file);
    auto triplets = tct::tokenize_triplets(tct::read_triples(o.triples), model.vocab);

    auto config = tct::student_training_config(tct::parse_distill_mode(o.mode), o.seed);
    config.gamma = o.gamma;
    config.tau = o.tau;
    config.learning_rate = o.learning_rate.value_or(config.learning_rate);
    config.steps = o.steps;
    config.batch_size = o.batch_size;
    LossLog log(o.loss_log);
    auto student = tct::distill_student(triplets, model, teacher, config, log.callback());

    ensure_parent(o.out);
    tct::save_projection(o.out, student);
    auto j = training_config("distill", o, config);
    j["model"] = o.model_dir.string();
    write_sidecar(o.out, j);
    return ok;
}

tct::Projection encoder_projection(Options const& o)
{
    return o.projection.empty() ? tct::load_projection(o.model_dir / teacher_file) : tct::load_projection(o.projection);
}

int run_encode(Options const& o)
{
    auto model = load_model(o.model_dir);
    auto proj = encoder_projection(o);
    auto texts = tct::read_id_text(o.queries);
    auto out = open_output(o.out);
    for (auto const& t : texts) {
        auto ids = tct::tokenize(t.text, model.vocab, o.model.passage_max_len);
        auto enc = tct::encode_pooled(model.table, ids, proj);
        out << t.id;
        char buf[32];
        for (std::size_t i = 0; i < enc.pooled->size(); ++i) {
            std::snprintf(buf, sizeof(buf), "%.9g", static_cast<double>(static_cast<float>((*enc.pooled)[i])));
            out << (i == 0 ? '\t' : ' ') << buf;
        }
        out << '\n';
    }
    auto j = base_config("encode", o);
    j["model"] = o.model_dir.string();
    j["projection"] = o.projection.string();
    j["input"] = o.queries.string();
    write_sidecar(o.out, j);
    return ok;
}

int run_index(Options const& o)
{
    auto model = load_model(o.model_dir);
    auto proj = encoder_projection(o);
    auto corpus = tct::tokenize_corpus(tct::read_id_text(o.corpus), model.vocab, o.model.passage_max_len);
    auto index = tct::DenseIndex::build(corpus, model.table, proj);
    ensure_parent(o.out);
    index.save(o.out);
    auto r = tct::storage_report(index, corpus, model.vocab);
    std::cout << "passages\t" << r.passages << '\n'
              << "dim\t" << r.dim << '\n'
              << "pooled_vector_bytes\t" << r.pooled_vector_bytes << '\n'
              << "pooled_metadata_bytes\t" << r.pooled_metadata_bytes << '\n'
              << "token_rows\t" << r.token_rows << '\n'
              << "token_vector_bytes\t" << r.token_vector_bytes << '\n'
              << "mean_filtered_length\t" << r.mean_filtered_length << '\n'
              << "storage_ratio\t" << r.ratio() << '\n';
    auto j = base_config("index", o);
    j["model"] = o.model_dir.string();
    j["projection"] = o.projection.string();
    j["corpus"] = o.corpus.string();
    write_sidecar(o.out, j);
    return ok;
}

void write_run(Options const& o, tct::Run const& run, std::string_view tag, json const& config)
{
    ensure_parent(o.out);
    tct::write_trec_run(o.out, run, tag);
    write_sidecar(o.out, config);
}

int run_search(Options const& o)
{
    auto model = load_model(o.model_dir);
    auto queries = tct::read_id_text(o.queries);
    auto j = base_config("search", o);
    j["model"] = o.model_dir.string();
    j["queries"] = o.queries.string();
    j["k"] = o.k;
    if (o.teacher) {
        // Teacher MaxSim re-ranking of a candidate run.
        auto teacher = tct::load_projection(o.model_dir / teacher_file);
        auto corpus = tct::tokenize_corpus(tct::read_id_text(o.corpus), model.vocab, o.model.passage_max_len);
        auto candidates = tct::read_trec_run(o.run);
        auto run = tct::maxsim_rerank(candidates, queries, corpus, model, teacher, o.model.query_max_len);
        for (auto& [qid, hits] : run) {
            tct::rank_and_truncate(hits, o.k);
        }
        j["rerank"] = o.run.string();
        write_run(o, run, "tct-maxsim", j);
        return ok;
    }
    auto index = tct::DenseIndex::load(o.index);
    auto proj = encoder_projection(o);
    auto run = tct::dense_retrieve(index, queries, model, proj, o.k, o.model.query_max_len);
    j["index"] = o.index.string();
    j["projection"] = o.projection.string();
    write_run(o, run, "tct-dense", j);
    return ok;
}

int run_sparse_index(Options const& o)
{
    auto index = tct::SparseIndex::build(tct::read_id_text(o.corpus), {o.k1, o.b});
    ensure_parent(o.out);
    index.save(o.out);
    auto j = base_config("sparse-index", o);
    j["corpus"] = o.corpus.string();
    j["k1"] = o.k1;
    j["b"] = o.b;
    write_sidecar(o.out, j);
    return ok;
}

int run_sparse_search(Options const& o)
{
    auto index = tct::SparseIndex::load(o.index);
    auto queries = tct::read_id_text(o.queries);
    auto run = tct::sparse_retrieve(index, queries, o.k);
    auto j = base_config("sparse-search", o);
    j["index"] = o.index.string();
    j["queries"] = o.queries.string();
    j["k"] = o.k;
    write_run(o, run, "tct-bm25", j);
    return ok;
}

int run_fuse(Options const& o)
{
    auto sparse = tct::read_trec_run(o.sparse_run);
    auto dense = tct::read_trec_run(o.dense_run);
    auto j = base_config("fuse", o);
    j["sparse_run"] = o.sparse_run.string();
    j["dense_run"] = o.dense_run.string();
    j["k"] = o.k;
    double alpha = 0.0;
    if (o.alpha) {
        alpha = *o.alpha;
    } else {
        if (o.qrels.empty()) {
            throw std::invalid_argument("fuse: give --alpha or --qrels to tune it");
        }
        auto qrels = tct::read_qrels(o.qrels);
        auto grid = tct::default_alpha_grid();
        auto choice = tct::tune_alpha(sparse, dense, qrels, grid,
            [](tct::Run const& run, tct::Qrels const& q) { return tct::mrr_at_k(run, q, 10); }, o.k);
        alpha = choice.alpha;
        spdlog::info("tuned alpha {} (MRR@10 {:.4f})", alpha, choice.metric);
        j["tuned_on"] = o.qrels.string();
    }
    j["alpha"] = alpha;
    std::cout << "alpha\t" << alpha << '\n';
    write_run(o, tct::fuse_runs(sparse, dense, alpha, o.k), tct::fused_run_tag, j);
    return ok;
}

int run_eval(Options const& o)
{
    auto run = tct::read_trec_run(o.run);
    auto qrels = tct::read_qrels(o.qrels);
    tct::write_report(std::cout, tct::standard_report(run, qrels));
    return ok;
}

int run_bench(Options const& o)
{
    using clock = std::chrono::steady_clock;
    auto model = load_model(o.model_dir);
    auto proj = encoder_projection(o);
    auto index = tct::DenseIndex::load(o.index);
    auto queries = tct::read_id_text(o.queries);
    std::optional<tct::Run> sparse;
    if (!o.sparse_run.empty()) {
        sparse = tct::read_trec_run(o.sparse_run);
    }
    double alpha = o.alpha.value_or(0.1);

    double encode_ms = 0.0;
    double search_ms = 0.0;
    double combine_ms = 0.0;
    std::size_t fused_hits = 0;
    auto ms = [](clock::duration d) { return std::chrono::duration<double, std::milli>(d).count(); };
    for (auto const& q : queries) {
        auto t0 = clock::now();
        auto enc = tct::encode_pooled(model.table, tct::tokenize(q.text, model.vocab, o.model.query_max_len), proj);
        auto t1 = clock::now();
        auto hits = index.search(*enc.pooled, o.k);
        auto t2 = clock::now();
        encode_ms += ms(t1 - t0);
        search_ms += ms(t2 - t1);
        if (sparse) {
            auto it = sparse->find(q.id);
            if (it != sparse->end() && !it->second.empty()) {
                auto t3 = clock::now();
                fused_hits += tct::fuse(it->second, hits, alpha, o.k).size();
                combine_ms += ms(clock::now() - t3);
            }
        }
    }
    spdlog::info("fused {} results", fused_hits);
    double n = static_cast<double>(queries.size());
    std::printf("queries\t%zu\n", queries.size());
    std::printf("encode_ms\t%.4f\n", encode_ms / n);
    std::printf("search_ms\t%.4f\n", search_ms / n);
    std::printf("combine_ms\t%.4f\n", sparse ? combine_ms / n : 0.0);
    std::printf("total_ms\t%.4f\n", (encode_ms + search_ms + combine_ms) / n);
    return ok;
}

}  // namespace

int main(int argc, char** argv)
{
    spdlog::set_default_logger(spdlog::stderr_color_mt("tct"));
    spdlog::set_level(spdlog::level::warn);

    Options o;
    CLI::App app{"TCT-ColBERT desk-scale retrieval: distillation, dense and sparse search, fusion, evaluation"};
    app.require_subcommand(1);
    app.fallthrough();
    app.add_option("--seed", o.seed, "Seed for every random choice")->capture_default_str();
    app.add_flag("-v,--verbose", o.verbose, "Log progress to stderr");

    auto model_options = [&](CLI::App* cmd) {
        cmd->add_option("--model", o.model_dir, "Directory written by train-teacher")->required();
        cmd->add_option("--projection", o.projection, "Projection file (default: the model's teacher)");
    };

    auto* datagen = app.add_subcommand("datagen", "Generate a synthetic collection");
    datagen->add_option("--out", o.out, "Output directory")->required();
    datagen->add_option("--topics", o.synth.num_topics)->capture_default_str();
    datagen->add_option("--docs-per-topic", o.synth.docs_per_topic)->capture_default_str();
    datagen->add_option("--vocab", o.synth.vocab_size)->capture_default_str();
    datagen->add_option("--overlap", o.synth.topic_vocab_overlap)->capture_default_str();
    datagen->add_option("--query-len", o.synth.query_len)->capture_default_str();
    datagen->add_option("--doc-len", o.synth.doc_len)->capture_default_str();
    datagen->add_option("--queries", o.synth.num_queries, "Held-out queries")->capture_default_str();
    datagen->add_option("--train-queries", o.synth.num_train_queries)->capture_default_str();
    datagen->add_option("--negatives", o.synth.negatives_per_query, "BM25 negatives per training query")
        ->capture_default_str();
    datagen->add_option("--query-noise", o.synth.query_noise)->capture_default_str();

    auto training_options = [&](CLI::App* cmd) {
        cmd->add_option("--triples", o.triples, "query TAB positive TAB negative")->required()->check(CLI::ExistingFile);
        cmd->add_option("--lr", o.learning_rate, "Learning rate");
        cmd->add_option("--steps", o.steps)->capture_default_str();
        cmd->add_option("--batch", o.batch_size)->capture_default_str();
        cmd->add_option("--loss-log", o.loss_log, "Write the per-step loss stream here");
    };

    auto* train = app.add_subcommand("train-teacher", "Fine-tune the MaxSim teacher");
    train->add_option("--corpus", o.corpus)->required()->check(CLI::ExistingFile);
    train->add_option("--out", o.out, "Model directory")->required();
    train->add_option("--dim", o.model.embedding_dim, "Embedding width t")->capture_default_str();
    train->add_option("--proj-dim", o.model.projection_dim, "Projection width h")->capture_default_str();
    training_options(train);

    auto* distill = app.add_subcommand("distill", "Distill the teacher into the pooled student");
    distill->add_option("--model", o.model_dir)->required();
    distill->add_option("--out", o.out, "Student projection file")->required();
    distill->add_option("--mode", o.mode)->check(CLI::IsMember({"none", "triplet", "in_batch"}))->capture_default_str();
    distill->add_option("--gamma", o.gamma)->capture_default_str();
    distill->add_option("--tau", o.tau)->capture_default_str();
    training_options(distill);

    auto* encode = app.add_subcommand("encode", "Write pooled vectors for id TAB text records");
    model_options(encode);
    encode->add_option("--input", o.queries)->required()->check(CLI::ExistingFile);
    encode->add_option("--out", o.out)->required();

    auto* index = app.add_subcommand("index", "Build the dense index and report storage");
    model_options(index);
    index->add_option("--corpus", o.corpus)->required()->check(CLI::ExistingFile);
    index->add_option("--out", o.out)->required();

    auto* search = app.add_subcommand("search", "Dense retrieval, or teacher re-ranking with --teacher");
    model_options(search);
    search->add_option("--index", o.index)->check(CLI::ExistingFile);
    search->add_option("--queries", o.queries)->required()->check(CLI::ExistingFile);
    search->add_option("--k", o.k)->capture_default_str();
    search->add_option("--out", o.out)->required();
    auto* teacher_flag = search->add_flag("--teacher", o.teacher, "Re-rank --candidates with teacher MaxSim");
    search->add_option("--candidates", o.run, "Run to re-rank")->needs(teacher_flag)->check(CLI::ExistingFile);
    search->add_option("--corpus", o.corpus)->needs(teacher_flag)->check(CLI::ExistingFile);

    auto* sparse_index = app.add_subcommand("sparse-index", "Build the BM25 index");
    sparse_index->add_option("--corpus", o.corpus)->required()->check(CLI::ExistingFile);
    sparse_index->add_option("--out", o.out)->required();
    sparse_index->add_option("--k1", o.k1)->capture_default_str();
    sparse_index->add_option("--b", o.b)->capture_default_str();

    auto* sparse_search = app.add_subcommand("sparse-search", "BM25 retrieval");
    sparse_search->add_option("--index", o.index)->required()->check(CLI::ExistingFile);
    sparse_search->add_option("--queries", o.queries)->required()->check(CLI::ExistingFile);
    sparse_search->add_option("--k", o.k)->capture_default_str();
    sparse_search->add_option("--out", o.out)->required();

    auto* fuse = app.add_subcommand("fuse", "Hybrid sparse and dense fusion");
    fuse->add_option("--sparse-run", o.sparse_run)->required()->check(CLI::ExistingFile);
    fuse->add_option("--dense-run", o.dense_run)->required()->check(CLI::ExistingFile);
    auto* alpha = fuse->add_option("--alpha", o.alpha, "Sparse weight");
    fuse->add_option("--qrels", o.qrels, "Tune alpha on these judgments")->excludes(alpha)->check(CLI::ExistingFile);
    fuse->add_option("--k", o.k)->capture_default_str();
    fuse->add_option("--out", o.out)->required();

    auto* eval = app.add_subcommand("eval", "MRR@10, R@1000 and NDCG@10 of a run");
    eval->add_option("--run", o.run)->required()->check(CLI::ExistingFile);
    eval->add_option("--qrels", o.qrels)->required()->check(CLI::ExistingFile);

    auto* bench = app.add_subcommand("bench", "Mean per-query latency of encode, search and fusion");
    model_options(bench);
    bench->add_option("--index", o.index)->required()->check(CLI::ExistingFile);
    bench->add_option("--queries", o.queries)->required()->check(CLI::ExistingFile);
    bench->add_option("--sparse-run", o.sparse_run, "Fuse with this run to time score combination")
        ->check(CLI::ExistingFile);
    bench->add_option("--alpha", o.alpha, "Sparse weight for the timed fusion");
    bench->add_option("--k", o.k)->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (CLI::CallForHelp const& e) {
        return app.exit(e);
    } catch (CLI::ParseError const& e) {
        app.exit(e);
        return usage;
    }
    if (o.verbose) {
        spdlog::set_level(spdlog::level::info);
    }

    try {
        if (*datagen) return run_datagen(o);
        if (*train) return run_train_teacher(o);
        if (*distill) return run_distill(o);
        if (*encode) return run_encode(o);
        if (*index) return run_index(o);
        if (*search) {
            if (o.teacher ? (o.run.empty() || o.corpus.empty()) : o.index.empty()) {
                throw std::invalid_argument("search: dense search needs --index; --teacher needs --candidates and --corpus");
            }
            return run_search(o);
        }
        if (*sparse_index) return run_sparse_index(o);
        if (*sparse_search) return run_sparse_search(o);
        if (*fuse) return run_fuse(o);
        if (*eval) return run_eval(o);
        if (*bench) return run_bench(o);
    } catch (tct::numerical_error const& e) {
        spdlog::error("{}", e.what());
        return numerical;
    } catch (tct::data_error const& e) {
        spdlog::error("{}", e.what());
        return data;
    } catch (std::invalid_argument const& e) {
        spdlog::error("{}", e.what());
        return usage;
    } catch (std::exception const& e) {
        spdlog::error("{}", e.what());
        return data;
    }
    return usage;
}
