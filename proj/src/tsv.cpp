#include "tct/tsv.hpp"

#include <fstream>

#include "tct/error.hpp"

namespace tct {

namespace {

std::vector<std::string> split_tabs(std::string const& line)
{
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        auto pos = line.find('\t', start);
        fields.push_back(line.substr(start, pos - start));
        if (pos == std::string::npos) {
            break;
        }
        start = pos + 1;
    }
    return fields;
}

template <typename Fn>
void for_each_record(std::istream& in, std::size_t expected_fields, Fn&& fn)
{
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty() || line.front() == '#') {
            continue;
        }
        auto fields = split_tabs(line);
        if (fields.size() != expected_fields) {
            throw data_error(
                "line " + std::to_string(line_no) + ": expected " + std::to_string(expected_fields)
                + " tab-separated fields, found " + std::to_string(fields.size()));
        }
        fn(std::move(fields));
    }
}

std::ifstream open(std::filesystem::path const& path)
{
    std::ifstream in(path);
    if (!in) {
        throw data_error("cannot open " + path.string());
    }
    return in;
}

}  // namespace

Corpus read_id_text(std::istream& in)
{
    Corpus out;
    for_each_record(in, 2, [&](std::vector<std::string> f) {
        if (f[0].empty()) {
            throw data_error("record with empty id");
        }
        out.push_back({std::move(f[0]), std::move(f[1])});
    });
    return out;
}

Corpus read_id_text(std::filesystem::path const& path)
{
    auto in = open(path);
    try {
        return read_id_text(in);
    } catch (data_error const& e) {
        throw data_error(path.string() + ": " + e.what());
    }
}

void write_id_text(std::ostream& out, Corpus const& records)
{
    for (auto const& r : records) {
        out << r.id << '\t' << r.text << '\n';
    }
}

std::vector<TextTriplet> read_triples(std::istream& in)
{
    std::vector<TextTriplet> out;
    for_each_record(in, 3, [&](std::vector<std::string> f) {
        out.push_back({std::move(f[0]), std::move(f[1]), std::move(f[2])});
    });
    return out;
}

std::vector<TextTriplet> read_triples(std::filesystem::path const& path)
{
    auto in = open(path);
    try {
        return read_triples(in);
    } catch (data_error const& e) {
        throw data_error(path.string() + ": " + e.what());
    }
}

void write_triples(std::ostream& out, std::vector<TextTriplet> const& triplets)
{
    for (auto const& t : triplets) {
        out << t.query << '\t' << t.positive << '\t' << t.negative << '\n';
    }
}

}  // namespace tct
