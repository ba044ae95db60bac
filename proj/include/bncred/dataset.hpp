#pragma once

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "common.hpp"

namespace bncred {

struct Variable {
    std::string name;
    std::uint32_t arity = 0;
    std::vector<std::string> labels;  // state labels in encoding order
};

enum class data_format { native, csv };

// Joint counts for one (child, parent set) query.  Cells are stored sparsely:
// only parent instantiations that occur in the data appear, keyed by the
// mixed-radix instantiation index (lowest-index parent least significant) and
// sorted ascending by that index.
struct ContingencyTable {
    struct Cell {
        std::uint64_t index = 0;               // parent instantiation j
        std::uint64_t total = 0;               // n_ij
        std::vector<std::uint64_t> counts;     // n_ijk per child state k
    };

    int child = -1;
    mask_t parents = 0;
    std::uint32_t child_arity = 0;
    std::uint64_t parent_instantiations = 1;   // r_Pi = product of parent arities
    std::uint64_t positive_count = 0;          // r_i^+ = #{j : n_ij > 0}
    std::vector<Cell> cells;
};

class Dataset {
public:
    static Dataset parse(std::istream& in, data_format fmt) {
        return fmt == data_format::native ? parse_native(in) : parse_csv(in);
    }

    static Dataset parse(const std::string& text, data_format fmt) {
        std::istringstream in(text);
        return parse(in, fmt);
    }

    int var_count() const { return static_cast<int>(vars_.size()); }
    std::uint64_t row_count() const { return rows_; }
    const Variable& variable(int i) const { return vars_[static_cast<std::size_t>(i)]; }
    std::uint32_t arity(int i) const { return vars_[static_cast<std::size_t>(i)].arity; }

    std::uint32_t value(std::uint64_t row, int var) const {
        return data_[row * static_cast<std::uint64_t>(var_count()) + static_cast<std::uint64_t>(var)];
    }

    // Product of arities over a variable set; throws if it overflows 64 bits
    // (such a parent set cannot be indexed, let alone scored).
    std::uint64_t instantiation_count(mask_t vars) const {
        std::uint64_t prod = 1;
        for (int i = 0; i < var_count(); ++i) {
            if (!has_bit(vars, i)) continue;
            if (__builtin_mul_overflow(prod, static_cast<std::uint64_t>(arity(i)), &prod))
                throw capacity_error("parent set too large: instantiation count overflows");
        }
        return prod;
    }

    ContingencyTable counts(int child, mask_t parents) const {
        if (has_bit(parents, child))
            throw invalid_query("child variable appears in its own parent set");
        ContingencyTable t;
        t.child = child;
        t.parents = parents;
        t.child_arity = arity(child);
        t.parent_instantiations = instantiation_count(parents);
        const auto pidx = mask_to_indices(parents);
        std::map<std::uint64_t, std::vector<std::uint64_t>> cells;
        for (std::uint64_t row = 0; row < rows_; ++row) {
            std::uint64_t j = 0, stride = 1;
            for (int p : pidx) {
                j += stride * value(row, p);
                stride *= arity(p);
            }
            auto& cell = cells[j];
            if (cell.empty()) cell.assign(t.child_arity, 0);
            ++cell[value(row, child)];
        }
        t.cells.reserve(cells.size());
        for (auto& [j, cnt] : cells) {
            ContingencyTable::Cell c;
            c.index = j;
            c.counts = std::move(cnt);
            for (std::uint64_t k : c.counts) c.total += k;
            t.cells.push_back(std::move(c));
        }
        t.positive_count = t.cells.size();
        return t;
    }

    // Empirical joint entropy of a variable set, in nats; entropy(empty) = 0.
    double entropy(mask_t vars) const {
        if (vars == 0 || rows_ == 0) return 0.0;
        const auto idx = mask_to_indices(vars);
        instantiation_count(vars);  // reject unindexable queries
        std::unordered_map<std::uint64_t, std::uint64_t> tally;
        for (std::uint64_t row = 0; row < rows_; ++row) {
            std::uint64_t j = 0, stride = 1;
            for (int v : idx) {
                j += stride * value(row, v);
                stride *= arity(v);
            }
            ++tally[j];
        }
        const double n = static_cast<double>(rows_);
        double h = 0.0;
        for (const auto& [j, c] : tally) {
            const double p = static_cast<double>(c) / n;
            h -= p * std::log(p);
        }
        return h < 0.0 ? 0.0 : h;
    }

    // H(X | Y) = H(X u Y) - H(Y), clamped at zero against rounding.
    double conditional_entropy(mask_t x, mask_t y) const {
        const double h = entropy(x | y) - entropy(y);
        return h < 0.0 ? 0.0 : h;
    }

private:
    std::vector<Variable> vars_;
    std::uint64_t rows_ = 0;
    std::vector<std::uint32_t> data_;  // row-major, stride = var_count()

    static std::vector<std::string> split_ws(const std::string& line) {
        std::vector<std::string> out;
        std::istringstream ss(line);
        std::string tok;
        while (ss >> tok) out.push_back(tok);
        return out;
    }

    static std::vector<std::string> split_csv(const std::string& line) {
        std::vector<std::string> out;
        std::string cur;
        for (char c : line) {
            if (c == ',') {
                out.push_back(cur);
                cur.clear();
            } else {
                cur += c;
            }
        }
        out.push_back(cur);
        for (auto& s : out) {
            const auto b = s.find_first_not_of(" \t\r");
            const auto e = s.find_last_not_of(" \t\r");
            s = b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        }
        return out;
    }

    static bool next_line(std::istream& in, std::string& line, std::size_t& lineno) {
        while (std::getline(in, line)) {
            ++lineno;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.find_first_not_of(" \t") != std::string::npos) return true;
        }
        return false;
    }

    void check_names(std::size_t lineno) const {
        for (std::size_t i = 0; i < vars_.size(); ++i) {
            if (vars_[i].name.empty())
                throw parse_error("empty variable name", lineno);
            for (std::size_t j = i + 1; j < vars_.size(); ++j)
                if (vars_[i].name == vars_[j].name)
                    throw parse_error("duplicate variable name '" + vars_[i].name + "'", lineno);
        }
    }

    static Dataset parse_native(std::istream& in) {
        Dataset d;
        std::string line;
        std::size_t lineno = 0;
        if (!next_line(in, line, lineno))
            throw parse_error("missing header: expected variable names", lineno + 1);
        const std::size_t name_line = lineno;
        for (auto& name : split_ws(line))
            d.vars_.push_back(Variable{std::move(name), 0, {}});
        if (d.vars_.empty())
            throw parse_error("missing header: expected variable names", name_line);
        d.check_names(name_line);

        if (!next_line(in, line, lineno))
            throw parse_error("missing header: expected arities", lineno + 1);
        const auto arities = split_ws(line);
        if (arities.size() != d.vars_.size())
            throw parse_error("arity count mismatch: expected " + std::to_string(d.vars_.size()) +
                                  " arities, found " + std::to_string(arities.size()),
                              lineno);
        for (std::size_t i = 0; i < arities.size(); ++i) {
            const std::uint64_t r = parse_uint(arities[i], lineno);
            if (r < 2)
                throw parse_error("arity < 2 for variable '" + d.vars_[i].name + "'", lineno);
            if (r > 0xffffffffULL)
                throw parse_error("arity too large for variable '" + d.vars_[i].name + "'", lineno);
            d.vars_[i].arity = static_cast<std::uint32_t>(r);
            for (std::uint32_t k = 0; k < d.vars_[i].arity; ++k)
                d.vars_[i].labels.push_back(std::to_string(k));
        }

        while (next_line(in, line, lineno)) {
            const auto cells = split_ws(line);
            if (cells.size() != d.vars_.size())
                throw parse_error("row length " + std::to_string(cells.size()) + " != " +
                                      std::to_string(d.vars_.size()) + " variables",
                                  lineno);
            for (std::size_t i = 0; i < cells.size(); ++i) {
                const std::uint64_t v = parse_uint(cells[i], lineno);
                if (v >= d.vars_[i].arity)
                    throw parse_error("value out of range for variable '" + d.vars_[i].name +
                                          "': " + cells[i] + " >= " + std::to_string(d.vars_[i].arity),
                                      lineno);
                d.data_.push_back(static_cast<std::uint32_t>(v));
            }
            ++d.rows_;
        }
        if (d.rows_ == 0)
            throw parse_error("empty dataset: no data rows", lineno + 1);
        return d;
    }

    static Dataset parse_csv(std::istream& in) {
        Dataset d;
        std::string line;
        std::size_t lineno = 0;
        if (!next_line(in, line, lineno))
            throw parse_error("missing header: expected variable names", lineno + 1);
        const std::size_t name_line = lineno;
        for (auto& name : split_csv(line))
            d.vars_.push_back(Variable{std::move(name), 0, {}});
        d.check_names(name_line);

        // State labels are assigned codes in first-occurrence order.
        std::vector<std::unordered_map<std::string, std::uint32_t>> codes(d.vars_.size());
        while (next_line(in, line, lineno)) {
            const auto cells = split_csv(line);
            if (cells.size() != d.vars_.size())
                throw parse_error("row length " + std::to_string(cells.size()) + " != " +
                                      std::to_string(d.vars_.size()) + " variables",
                                  lineno);
            for (std::size_t i = 0; i < cells.size(); ++i) {
                if (cells[i].empty())
                    throw parse_error("missing value for variable '" + d.vars_[i].name + "'", lineno);
                auto [it, fresh] = codes[i].emplace(cells[i], static_cast<std::uint32_t>(codes[i].size()));
                if (fresh) d.vars_[i].labels.push_back(cells[i]);
                d.data_.push_back(it->second);
            }
            ++d.rows_;
        }
        if (d.rows_ == 0)
            throw parse_error("empty dataset: no data rows", lineno + 1);
        for (std::size_t i = 0; i < d.vars_.size(); ++i) {
            d.vars_[i].arity = static_cast<std::uint32_t>(codes[i].size());
            if (d.vars_[i].arity < 2)
                throw parse_error("arity < 2 for variable '" + d.vars_[i].name +
                                      "': only " + std::to_string(d.vars_[i].arity) +
                                      " distinct value(s) observed",
                                  name_line);
        }
        return d;
    }
};

}  // namespace bncred
