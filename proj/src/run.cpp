#include "tct/run.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "tct/error.hpp"

namespace tct {

namespace {

std::string format_score(double score)
{
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), score);
    if (ec != std::errc{}) {
        throw std::runtime_error("cannot format score");
    }
    return std::string(buf, end);
}

double parse_score(std::string const& field, std::size_t line_no)
{
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (ec != std::errc{} || ptr != field.data() + field.size()) {
        throw data_error("line " + std::to_string(line_no) + ": bad score \"" + field + "\"");
    }
    return value;
}

}  // namespace

void rank_and_truncate(RankedList& hits, std::size_t k)
{
    if (hits.size() > k) {
        std::partial_sort(hits.begin(), hits.begin() + static_cast<std::ptrdiff_t>(k), hits.end(), ranks_before);
        hits.resize(k);
    } else {
        std::sort(hits.begin(), hits.end(), ranks_before);
    }
}

Run read_trec_run(std::istream& in)
{
    Run run;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::istringstream fields(line);
        std::string qid, q0, docid, rank, score, tag, extra;
        if (!(fields >> qid)) {
            continue;
        }
        if (!(fields >> q0 >> docid >> rank >> score >> tag) || (fields >> extra)) {
            throw data_error("line " + std::to_string(line_no) + ": expected 6 columns in TREC run");
        }
        run[qid].push_back({docid, parse_score(score, line_no)});
    }
    for (auto& [qid, hits] : run) {
        std::unordered_set<std::string> seen;
        for (auto const& h : hits) {
            if (!seen.insert(h.doc_id).second) {
                throw data_error("query " + qid + ": duplicate document " + h.doc_id);
            }
        }
        std::sort(hits.begin(), hits.end(), ranks_before);
    }
    return run;
}

Run read_trec_run(std::filesystem::path const& path)
{
    std::ifstream in(path);
    if (!in) {
        throw data_error("cannot open " + path.string());
    }
    try {
        return read_trec_run(in);
    } catch (data_error const& e) {
        throw data_error(path.string() + ": " + e.what());
    }
}

void write_trec_run(std::ostream& out, Run const& run, std::string_view tag)
{
    for (auto const& [qid, hits] : run) {
        for (std::size_t i = 0; i < hits.size(); ++i) {
            out << qid << " Q0 " << hits[i].doc_id << ' ' << (i + 1) << ' ' << format_score(hits[i].score)
                << ' ' << tag << '\n';
        }
    }
}

void write_trec_run(std::filesystem::path const& path, Run const& run, std::string_view tag)
{
    std::ofstream out(path);
    if (!out) {
        throw data_error("cannot open " + path.string() + " for writing");
    }
    write_trec_run(out, run, tag);
}

}  // namespace tct
