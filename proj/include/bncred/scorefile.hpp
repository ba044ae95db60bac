#pragma once

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "common.hpp"
#include "pruning.hpp"

namespace bncred {

// On-disk interchange format for local scores.  Scores are higher-is-better
// on disk (interoperability with existing score-and-search tooling) and
// lower-is-better in memory; the negation boundary lives in this module only.
struct ScoreFile {
    std::vector<std::string> names;
    std::vector<CandidateList> lists;

    int var_count() const { return static_cast<int>(names.size()); }
};

inline void write_scores(const std::vector<CandidateList>& lists,
                         const std::vector<std::string>& names, std::ostream& out) {
    out << lists.size() << "\n";
    for (std::size_t i = 0; i < lists.size(); ++i) {
        auto kept = lists[i].kept();

        // Parent names per entry, sorted lexicographically for determinism.
        std::vector<std::vector<std::string>> parent_names(kept.size());
        for (std::size_t e = 0; e < kept.size(); ++e) {
            for (int p : mask_to_indices(kept[e].parents))
                parent_names[e].push_back(names[static_cast<std::size_t>(p)]);
            std::sort(parent_names[e].begin(), parent_names[e].end());
        }
        std::vector<std::size_t> order(kept.size());
        for (std::size_t e = 0; e < order.size(); ++e) order[e] = e;
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            if (kept[a].score.value != kept[b].score.value)
                return kept[a].score.value < kept[b].score.value;
            return parent_names[a] < parent_names[b];
        });

        out << names[i] << " " << kept.size() << "\n";
        for (std::size_t e : order) {
            out << format_double(-kept[e].score.value) << " " << parent_names[e].size();
            for (const auto& p : parent_names[e]) out << " " << p;
            out << "\n";
        }
    }
}

inline std::string write_scores(const std::vector<CandidateList>& lists,
                                const std::vector<std::string>& names) {
    std::ostringstream out;
    write_scores(lists, names, out);
    return out.str();
}

inline ScoreFile read_scores(std::istream& in) {
    struct Line {
        std::string text;
        std::size_t number = 0;
    };
    std::vector<Line> lines;
    {
        std::string raw;
        std::size_t lineno = 0;
        while (std::getline(in, raw)) {
            ++lineno;
            if (!raw.empty() && raw.back() == '\r') raw.pop_back();
            if (raw.find_first_not_of(" \t") == std::string::npos) continue;
            lines.push_back(Line{raw, lineno});
        }
    }

    auto split = [](const std::string& s) {
        std::vector<std::string> toks;
        std::istringstream ss(s);
        std::string t;
        while (ss >> t) toks.push_back(t);
        return toks;
    };

    std::size_t pos = 0;
    auto need = [&](const char* what) -> const Line& {
        if (pos >= lines.size()) {
            const std::size_t at = lines.empty() ? 1 : lines.back().number + 1;
            throw parse_error(std::string("unexpected end of file: expected ") + what, at);
        }
        return lines[pos++];
    };

    const Line& header = need("variable count");
    const auto htoks = split(header.text);
    if (htoks.size() != 1)
        throw parse_error("malformed variable count line", header.number);
    const std::uint64_t n = parse_uint(htoks[0], header.number);
    if (n == 0) throw parse_error("variable count must be positive", header.number);

    // Pass 1: locate all section headers so parent names can refer to any
    // declared variable regardless of section order.
    struct Section {
        std::string name;
        std::size_t header_line = 0;
        std::size_t first = 0;  // index into `lines` of the first score line
        std::uint64_t count = 0;
    };
    std::vector<Section> sections;
    for (std::uint64_t s = 0; s < n; ++s) {
        const Line& h = need("section header");
        const auto toks = split(h.text);
        if (toks.size() != 2)
            throw parse_error("malformed section header: expected 'name count'", h.number);
        Section sec;
        sec.name = toks[0];
        sec.header_line = h.number;
        sec.count = parse_uint(toks[1], h.number);
        sec.first = pos;
        for (std::uint64_t e = 0; e < sec.count; ++e) need("score line");
        sections.push_back(std::move(sec));
    }
    if (pos < lines.size())
        throw parse_error("section count mismatch: content after " + std::to_string(n) +
                              " declared sections",
                          lines[pos].number);

    std::unordered_map<std::string, int> index;
    for (std::size_t s = 0; s < sections.size(); ++s) {
        if (!index.emplace(sections[s].name, static_cast<int>(s)).second)
            throw parse_error("duplicate variable name '" + sections[s].name + "'",
                              sections[s].header_line);
    }

    // Pass 2: parse score lines with full name resolution.
    ScoreFile file;
    for (const auto& sec : sections) file.names.push_back(sec.name);
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t s = 0; s < sections.size(); ++s) {
        const auto& sec = sections[s];
        CandidateList list;
        list.child = static_cast<int>(s);
        list.epsilon = nan;  // unknown/imported
        list.max_size = 0;
        std::unordered_set<mask_t> seen;
        for (std::uint64_t e = 0; e < sec.count; ++e) {
            const Line& ln = lines[sec.first + e];
            const auto toks = split(ln.text);
            if (toks.size() < 2)
                throw parse_error("malformed score line: expected 'score count parents...'",
                                  ln.number);
            const double external = parse_double(toks[0], ln.number);
            const std::uint64_t k = parse_uint(toks[1], ln.number);
            if (toks.size() != 2 + k)
                throw parse_error("parent count mismatch: declared " + std::to_string(k) +
                                      " parents, found " + std::to_string(toks.size() - 2),
                                  ln.number);
            mask_t parents = 0;
            for (std::uint64_t p = 0; p < k; ++p) {
                const auto it = index.find(toks[2 + p]);
                if (it == index.end())
                    throw parse_error("unknown parent name '" + toks[2 + p] + "'", ln.number);
                if (it->second == static_cast<int>(s))
                    throw parse_error("variable '" + toks[2 + p] + "' listed as its own parent",
                                      ln.number);
                if (has_bit(parents, it->second))
                    throw parse_error("duplicate parent '" + toks[2 + p] + "'", ln.number);
                parents |= bit(it->second);
            }
            if (!seen.insert(parents).second)
                throw parse_error("duplicate parent set", ln.number);
            CandidateEntry entry;
            entry.parents = parents;
            entry.score.child = static_cast<int>(s);
            entry.score.parents = parents;
            entry.score.value = -external;
            entry.score.log_lik = nan;
            entry.score.penalty = nan;
            entry.pruned_by = 0;
            list.max_size = std::max(list.max_size, popcount(parents));
            list.entries.push_back(entry);
        }
        file.lists.push_back(std::move(list));
    }
    return file;
}

inline ScoreFile read_scores(const std::string& text) {
    std::istringstream in(text);
    return read_scores(in);
}

}  // namespace bncred
