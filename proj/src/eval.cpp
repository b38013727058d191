#include "tct/eval.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

#include <spdlog/spdlog.h>

#include "tct/error.hpp"

namespace tct {

namespace {

using PerQuery = std::function<double(RankedList const&, std::map<std::string, int> const&)>;

std::map<std::string, double> evaluate(Run const& run, Qrels const& qrels, char const* metric, PerQuery const& fn)
{
    std::map<std::string, double> out;
    std::size_t unjudged = 0;
    std::size_t no_relevant = 0;
    for (auto const& [qid, hits] : run) {
        auto it = qrels.find(qid);
        if (it == qrels.end()) {
            ++unjudged;
            continue;
        }
        bool any_relevant = std::any_of(
            it->second.begin(), it->second.end(), [](auto const& kv) { return kv.second >= 1; });
        if (!any_relevant) {
            ++no_relevant;
            continue;
        }
        out[qid] = fn(hits, it->second);
    }
    if (unjudged > 0) {
        spdlog::warn("{}: {} run queries have no qrels and were excluded", metric, unjudged);
    }
    if (no_relevant > 0) {
        spdlog::warn("{}: {} run queries have no relevant documents and were excluded", metric, no_relevant);
    }
    return out;
}

double mean(std::map<std::string, double> const& values)
{
    if (values.empty()) {
        return 0.0;
    }
    double sum = 0.0;
    for (auto const& [qid, v] : values) {
        sum += v;
    }
    return sum / static_cast<double>(values.size());
}

int grade_of(std::map<std::string, int> const& judged, std::string const& doc)
{
    auto it = judged.find(doc);
    return it == judged.end() ? 0 : it->second;
}

double gain(int grade)
{
    return std::pow(2.0, grade) - 1.0;
}

}  // namespace

Qrels read_qrels(std::istream& in)
{
    Qrels qrels;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::istringstream fields(line);
        std::string qid, iter, docid, grade_field, extra;
        if (!(fields >> qid)) {
            continue;
        }
        if (!(fields >> iter >> docid >> grade_field) || (fields >> extra)) {
            throw data_error("line " + std::to_string(line_no) + ": expected 4 columns in qrels");
        }
        int grade = 0;
        auto [ptr, ec] = std::from_chars(grade_field.data(), grade_field.data() + grade_field.size(), grade);
        if (ec != std::errc{} || ptr != grade_field.data() + grade_field.size()) {
            throw data_error("line " + std::to_string(line_no) + ": bad grade \"" + grade_field + "\"");
        }
        // trec_eval treats negative judgments as non-relevant.
        qrels[qid][docid] = std::max(grade, 0);
    }
    return qrels;
}

Qrels read_qrels(std::filesystem::path const& path)
{
    std::ifstream in(path);
    if (!in) {
        throw data_error("cannot open " + path.string());
    }
    try {
        return read_qrels(in);
    } catch (data_error const& e) {
        throw data_error(path.string() + ": " + e.what());
    }
}

void write_qrels(std::ostream& out, Qrels const& qrels)
{
    for (auto const& [qid, docs] : qrels) {
        for (auto const& [doc, grade] : docs) {
            out << qid << " 0 " << doc << ' ' << grade << '\n';
        }
    }
}

std::map<std::string, double> mrr_per_query(Run const& run, Qrels const& qrels, std::size_t k)
{
    return evaluate(run, qrels, "MRR", [k](RankedList const& hits, auto const& judged) {
        std::size_t depth = std::min(k, hits.size());
        for (std::size_t r = 0; r < depth; ++r) {
            if (grade_of(judged, hits[r].doc_id) >= 1) {
                return 1.0 / static_cast<double>(r + 1);
            }
        }
        return 0.0;
    });
}

std::map<std::string, double> recall_per_query(Run const& run, Qrels const& qrels, std::size_t k)
{
    return evaluate(run, qrels, "Recall", [k](RankedList const& hits, auto const& judged) {
        auto relevant = std::count_if(judged.begin(), judged.end(), [](auto const& kv) { return kv.second >= 1; });
        std::size_t depth = std::min(k, hits.size());
        std::size_t found = 0;
        for (std::size_t r = 0; r < depth; ++r) {
            found += grade_of(judged, hits[r].doc_id) >= 1 ? 1 : 0;
        }
        return static_cast<double>(found) / static_cast<double>(relevant);
    });
}

std::map<std::string, double> ndcg_per_query(Run const& run, Qrels const& qrels, std::size_t k)
{
    return evaluate(run, qrels, "NDCG", [k](RankedList const& hits, auto const& judged) {
        double dcg = 0.0;
        std::size_t depth = std::min(k, hits.size());
        for (std::size_t r = 0; r < depth; ++r) {
            dcg += gain(grade_of(judged, hits[r].doc_id)) / std::log2(static_cast<double>(r) + 2.0);
        }
        std::vector<int> grades;
        for (auto const& [doc, g] : judged) {
            grades.push_back(g);
        }
        std::sort(grades.begin(), grades.end(), std::greater<>());
        double ideal = 0.0;
        for (std::size_t r = 0; r < std::min(k, grades.size()); ++r) {
            ideal += gain(grades[r]) / std::log2(static_cast<double>(r) + 2.0);
        }
        return ideal > 0.0 ? dcg / ideal : 0.0;
    });
}

double mrr_at_k(Run const& run, Qrels const& qrels, std::size_t k)
{
    return mean(mrr_per_query(run, qrels, k));
}

double recall_at_k(Run const& run, Qrels const& qrels, std::size_t k)
{
    return mean(recall_per_query(run, qrels, k));
}

double ndcg_at_k(Run const& run, Qrels const& qrels, std::size_t k)
{
    return mean(ndcg_per_query(run, qrels, k));
}

MetricReport standard_report(Run const& run, Qrels const& qrels)
{
    return {
        {"MRR@10", mrr_at_k(run, qrels, 10)},
        {"R@1000", recall_at_k(run, qrels, 1000)},
        {"NDCG@10", ndcg_at_k(run, qrels, 10)},
    };
}

void write_report(std::ostream& out, MetricReport const& report)
{
    for (auto const& [name, value] : report) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.4f", value);
        out << name << '\t' << buf << '\n';
    }
}

}  // namespace tct
