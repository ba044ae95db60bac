#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "common.hpp"
#include "pruning.hpp"
#include "scoring.hpp"

namespace bncred {

// Numeric slack on all credible-window comparisons: a network scoring exactly
// opt + eps is credible, so boundary members must survive floating point.
inline constexpr double kScoreSlack = 1e-9;

struct EpsilonSpec {
    enum class origin { direct, bayes_factor, factor };
    origin kind = origin::direct;
    double value = 0.0;

    static EpsilonSpec direct(double eps) { return {origin::direct, eps}; }
    static EpsilonSpec bayes_factor(double bf) { return {origin::bayes_factor, bf}; }
    static EpsilonSpec factor(double rho) { return {origin::factor, rho}; }
};

inline double resolve_epsilon(const EpsilonSpec& spec, double opt = 0.0) {
    switch (spec.kind) {
        case EpsilonSpec::origin::direct:
            if (spec.value < 0.0) throw config_error("epsilon must be nonnegative");
            return spec.value;
        case EpsilonSpec::origin::bayes_factor:
            if (spec.value <= 1.0) throw config_error("Bayes factor must exceed 1");
            return std::log(spec.value);
        case EpsilonSpec::origin::factor:
            if (spec.value < 1.0) throw config_error("rho must be at least 1");
            return (spec.value - 1.0) * std::abs(opt);
    }
    throw config_error("unknown epsilon origin");
}

struct SubsetTables {
    int n = 0;
    // best_parents[i][m]: minimal kept local score for variable i over parent
    // sets contained in m, where m indexes subsets of the other variables
    // (variable i's slot squeezed out).
    std::vector<std::vector<double>> best_parents;
    // best_net[S]: minimal total score of a network over variable subset S.
    std::vector<double> best_net;
};

struct Dag {
    std::vector<mask_t> parent_sets;
    double score = 0.0;
    std::string canonical_key;
};

inline std::string make_canonical_key(const std::vector<mask_t>& parent_sets) {
    std::string key;
    for (std::size_t i = 0; i < parent_sets.size(); ++i) {
        if (i) key += ';';
        key += std::to_string(i);
        key += ':';
        bool first = true;
        for (int p : mask_to_indices(parent_sets[i])) {
            if (!first) key += ',';
            key += std::to_string(p);
            first = false;
        }
    }
    return key;
}

struct CredibleSet {
    std::vector<Dag> networks;  // sorted by (score, canonical_key)
    double opt = 0.0;
    double eps = 0.0;
    bool truncated = false;
};

inline constexpr std::uint64_t kDefaultCountingLimit = 150000;
inline constexpr int kDefaultDpLimit = 24;

namespace detail {

// Kept entries of one variable sorted ascending by (score, mask): the
// enumeration scans these in order and stops at the first over-budget score.
struct SortedCandidates {
    std::vector<std::pair<double, mask_t>> entries;
    std::unordered_map<mask_t, double> by_mask;
};

inline std::vector<SortedCandidates> sort_candidates(const std::vector<CandidateList>& lists) {
    std::vector<SortedCandidates> out(lists.size());
    for (std::size_t i = 0; i < lists.size(); ++i) {
        for (const auto& e : lists[i].entries) {
            if (e.pruned_by != 0) continue;
            out[i].entries.emplace_back(e.score.value, e.parents);
            out[i].by_mask.emplace(e.parents, e.score.value);
        }
        std::sort(out[i].entries.begin(), out[i].entries.end());
    }
    return out;
}

}  // namespace detail

struct SolveResult {
    double opt = 0.0;
    SubsetTables tables;
    Dag witness;
};

inline SolveResult solve_opt(const std::vector<CandidateList>& lists,
                             int dp_limit = kDefaultDpLimit) {
    const int n = static_cast<int>(lists.size());
    if (n < 1) throw config_error("no variables to solve");
    if (dp_limit > 63) dp_limit = 63;
    if (n > dp_limit)
        throw capacity_error("instance has " + std::to_string(n) +
                             " variables, exceeding the exact-solver limit of " +
                             std::to_string(dp_limit) +
                             "; reduce the dataset or raise the limit");

    const double inf = std::numeric_limits<double>::infinity();
    const auto cands = detail::sort_candidates(lists);

    SubsetTables t;
    t.n = n;
    t.best_parents.assign(static_cast<std::size_t>(n), {});
    const std::size_t sub = std::size_t{1} << (n - 1);
    for (int i = 0; i < n; ++i) {
        auto& bp = t.best_parents[static_cast<std::size_t>(i)];
        bp.assign(sub, inf);
        for (const auto& [val, m] : cands[static_cast<std::size_t>(i)].entries) {
            const mask_t sq = squeeze_mask(m, i);
            if (val < bp[sq]) bp[sq] = val;
        }
        // Superset sweep: bp[m] = min over kept parent sets contained in m.
        for (int b = 0; b < n - 1; ++b)
            for (mask_t m = 0; m < sub; ++m)
                if (has_bit(m, b) && bp[m ^ bit(b)] < bp[m]) bp[m] = bp[m ^ bit(b)];
    }

    t.best_net.assign(std::size_t{1} << n, inf);
    t.best_net[0] = 0.0;
    for (mask_t S = 1; S < (mask_t{1} << n); ++S) {
        double best = inf;
        for (int v = 0; v < n; ++v) {
            if (!has_bit(S, v)) continue;
            const mask_t rem = S & ~bit(v);
            const double c =
                t.best_parents[static_cast<std::size_t>(v)][squeeze_mask(rem, v)] +
                t.best_net[rem];
            if (c < best) best = c;
        }
        t.best_net[S] = best;
    }

    SolveResult res;
    res.opt = t.best_net[full_mask(n)];
    if (!(res.opt < inf))
        throw input_error("score lists admit no acyclic network");

    // Witness reconstruction by exact backtracking of the DP minima.
    res.witness.parent_sets.assign(static_cast<std::size_t>(n), 0);
    mask_t S = full_mask(n);
    while (S != 0) {
        bool found = false;
        for (int v = 0; v < n && !found; ++v) {
            if (!has_bit(S, v)) continue;
            const mask_t rem = S & ~bit(v);
            const double bp =
                t.best_parents[static_cast<std::size_t>(v)][squeeze_mask(rem, v)];
            if (bp + t.best_net[rem] != t.best_net[S]) continue;
            for (const auto& [val, m] : cands[static_cast<std::size_t>(v)].entries) {
                if (val != bp) {
                    if (val > bp) break;
                    continue;
                }
                if ((m & ~rem) == 0) {
                    res.witness.parent_sets[static_cast<std::size_t>(v)] = m;
                    S = rem;
                    found = true;
                    break;
                }
            }
        }
        if (!found)
            throw input_error("internal inconsistency: DP witness reconstruction failed");
    }
    res.witness.canonical_key = make_canonical_key(res.witness.parent_sets);
    res.witness.score = res.opt;
    res.tables = std::move(t);
    return res;
}

inline CredibleSet enumerate_credible(const std::vector<CandidateList>& lists,
                                      const SubsetTables& tables, double opt, double eps,
                                      std::uint64_t limit = kDefaultCountingLimit) {
    if (limit < 1) throw config_error("counting limit must be at least 1");
    const int n = tables.n;
    const auto cands = detail::sort_candidates(lists);
    const double bound = opt + eps + kScoreSlack;

    // Best-`limit` collection ordered by (score, canonical key).
    std::map<std::pair<double, std::string>, std::vector<mask_t>> best;
    bool truncated = false;

    std::vector<mask_t> current(static_cast<std::size_t>(n), 0);

    auto finalize = [&]() {
        std::string key = make_canonical_key(current);
        // Canonical score: ascending-variable summation, independent of the
        // construction order that produced the DAG.
        double score = 0.0;
        for (int i = 0; i < n; ++i)
            score += cands[static_cast<std::size_t>(i)].by_mask.at(
                current[static_cast<std::size_t>(i)]);
        auto entry = std::make_pair(score, std::move(key));
        if (best.size() < limit) {
            best.emplace(std::move(entry), current);
            return;
        }
        truncated = true;
        auto worst = std::prev(best.end());
        if (entry < worst->first) {
            best.erase(worst);
            best.emplace(std::move(entry), current);
        }
    };

    // Each DAG is generated exactly once, by its canonical elimination order:
    // at every step remove the largest-index sink of the remaining graph.
    // Choosing v commits every larger remaining variable outside v's parent
    // set to acquire a child later (otherwise it would have been a larger
    // sink); `marked` carries those obligations, and a marked variable can
    // only be removed after some later choice adopts it as a parent.
    const mask_t all = full_mask(n);
    auto dfs = [&](auto&& self, mask_t S, double cost, mask_t marked) -> void {
        if (S == 0) {
            finalize();
            return;
        }
        for (int v = 0; v < n; ++v) {
            if (!has_bit(S, v) || has_bit(marked, v)) continue;
            const mask_t rem = S & ~bit(v);
            const mask_t above = all & ~(bit(v) | (bit(v) - 1));
            const double base = cost + tables.best_net[rem];
            for (const auto& [val, m] : cands[static_cast<std::size_t>(v)].entries) {
                if (base + val > bound) break;
                if ((m & ~rem) != 0) continue;
                current[static_cast<std::size_t>(v)] = m;
                self(self, rem, cost + val, ((marked | (rem & above)) & ~m));
            }
        }
    };
    dfs(dfs, all, 0.0, 0);

    CredibleSet out;
    out.opt = opt;
    out.eps = eps;
    out.truncated = truncated;
    out.networks.reserve(best.size());
    for (auto& [sk, parents] : best) {
        Dag g;
        g.score = sk.first;
        g.canonical_key = sk.second;
        g.parent_sets = parents;
        out.networks.push_back(std::move(g));
    }
    return out;
}

inline bool is_acyclic(const std::vector<mask_t>& parent_sets) {
    const int n = static_cast<int>(parent_sets.size());
    mask_t remaining = full_mask(n);
    while (remaining != 0) {
        bool removed = false;
        for (int v = 0; v < n; ++v) {
            if (!has_bit(remaining, v)) continue;
            if ((parent_sets[static_cast<std::size_t>(v)] & remaining) == 0) {
                remaining &= ~bit(v);
                removed = true;
            }
        }
        if (!removed) return false;
    }
    return true;
}

struct VerifyResult {
    bool ok = true;
    std::vector<std::string> failures;

    explicit operator bool() const { return ok; }

    void fail(std::string msg) {
        ok = false;
        failures.push_back(std::move(msg));
    }
};

inline VerifyResult verify_credible(const CredibleSet& set,
                                    const std::vector<CandidateList>& lists) {
    VerifyResult res;
    const auto cands = detail::sort_candidates(lists);
    if (set.networks.empty()) {
        res.fail("empty credible set");
        return res;
    }
    std::unordered_set<std::string> keys;
    double min_score = std::numeric_limits<double>::infinity();
    const Dag* prev = nullptr;
    for (const auto& g : set.networks) {
        const std::string where = "network '" + g.canonical_key + "'";
        if (g.parent_sets.size() != lists.size()) {
            res.fail(where + ": wrong variable count");
            continue;
        }
        if (g.canonical_key != make_canonical_key(g.parent_sets))
            res.fail(where + ": canonical key mismatch");
        if (!keys.insert(g.canonical_key).second)
            res.fail(where + ": duplicate canonical key");
        if (!is_acyclic(g.parent_sets))
            res.fail(where + ": cycle detected");
        double score = 0.0;
        bool score_ok = true;
        for (std::size_t i = 0; i < g.parent_sets.size(); ++i) {
            const auto it = cands[i].by_mask.find(g.parent_sets[i]);
            if (it == cands[i].by_mask.end()) {
                res.fail(where + ": no kept local score for variable " + std::to_string(i));
                score_ok = false;
                break;
            }
            score += it->second;
        }
        if (score_ok && std::abs(score - g.score) > kScoreSlack)
            res.fail(where + ": score mismatch (recomputed " + format_double(score) +
                     ", stored " + format_double(g.score) + ")");
        if (g.score < set.opt - kScoreSlack)
            res.fail(where + ": score below opt");
        if (g.score > set.opt + set.eps + kScoreSlack)
            res.fail(where + ": score out of credible window");
        if (prev && std::make_pair(prev->score, prev->canonical_key) >
                        std::make_pair(g.score, g.canonical_key))
            res.fail(where + ": networks not sorted by (score, key)");
        prev = &g;
        min_score = std::min(min_score, g.score);
    }
    if (std::abs(min_score - set.opt) > kScoreSlack)
        res.fail("minimal member score " + format_double(min_score) +
                 " does not equal opt " + format_double(set.opt));
    return res;
}

// Serialization: header line `#opt=<opt> eps=<eps> truncated=<0|1>`, then one
// network per line as `score<TAB>child:parent,parent;child:...` with children
// and parent lists in ascending variable-name order.
inline void write_credible_set(const CredibleSet& set, const std::vector<std::string>& names,
                               std::ostream& out) {
    std::vector<int> by_name(names.size());
    for (std::size_t i = 0; i < names.size(); ++i) by_name[i] = static_cast<int>(i);
    std::sort(by_name.begin(), by_name.end(),
              [&](int a, int b) { return names[static_cast<std::size_t>(a)] < names[static_cast<std::size_t>(b)]; });

    out << "#opt=" << format_double(set.opt) << " eps=" << format_double(set.eps)
        << " truncated=" << (set.truncated ? 1 : 0) << "\n";
    for (const auto& g : set.networks) {
        out << format_double(g.score) << "\t";
        bool first_child = true;
        for (int child : by_name) {
            if (!first_child) out << ";";
            first_child = false;
            out << names[static_cast<std::size_t>(child)] << ":";
            std::vector<std::string> pnames;
            for (int p : mask_to_indices(g.parent_sets[static_cast<std::size_t>(child)]))
                pnames.push_back(names[static_cast<std::size_t>(p)]);
            std::sort(pnames.begin(), pnames.end());
            for (std::size_t p = 0; p < pnames.size(); ++p)
                out << (p ? "," : "") << pnames[p];
        }
        out << "\n";
    }
}

}  // namespace bncred
