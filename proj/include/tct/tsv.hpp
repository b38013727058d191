#pragma once

#include <filesystem>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

namespace tct {

/// An identified text: a passage (doc_id TAB text) or a query (qid TAB text).
struct Passage {
    std::string id;
    std::string text;

    friend bool operator==(Passage const&, Passage const&) = default;
};

using Corpus = std::vector<Passage>;

struct TextTriplet {
    std::string query;
    std::string positive;
    std::string negative;

    friend bool operator==(TextTriplet const&, TextTriplet const&) = default;
};

/// Reads `id TAB text` lines. Blank lines and lines starting with '#' are skipped.
Corpus read_id_text(std::istream& in);
Corpus read_id_text(std::filesystem::path const& path);
void write_id_text(std::ostream& out, Corpus const& records);

/// Reads `query TAB positive TAB negative` lines.
std::vector<TextTriplet> read_triples(std::istream& in);
std::vector<TextTriplet> read_triples(std::filesystem::path const& path);
void write_triples(std::ostream& out, std::vector<TextTriplet> const& triplets);

}  // namespace tct
