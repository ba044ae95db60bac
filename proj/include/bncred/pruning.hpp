#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <mutex>
#include <optional>
#include <thread>
#include <unordered_map>
#include <vector>

#include "common.hpp"
#include "dataset.hpp"
#include "scoring.hpp"

namespace bncred {

// A candidate parent set together with its exact local score.  pruned_by is 0
// for kept entries, otherwise the id (1..6) of the rule that removed the set
// after scoring.  Sets discarded before scoring never become entries; they are
// only counted in PruneStats.
struct CandidateEntry {
    mask_t parents = 0;
    LocalScore score;
    int pruned_by = 0;
};

struct CandidateList {
    int child = -1;
    double epsilon = 0.0;  // NaN when imported from a score file
    int max_size = 0;      // cardinality cap actually applied
    std::vector<CandidateEntry> entries;

    std::vector<CandidateEntry> kept() const {
        std::vector<CandidateEntry> out;
        for (const auto& e : entries)
            if (e.pruned_by == 0) out.push_back(e);
        return out;
    }
};

struct PruneStats {
    std::uint64_t visited = 0;  // lattice nodes reached (within the cap)
    std::uint64_t scored = 0;
    std::uint64_t skipped = 0;  // visited - scored
    std::uint64_t kept = 0;
    std::array<std::uint64_t, 7> by_rule{};  // index 1..6; [0] unused
    std::uint64_t cap_skipped = 0;  // sets excluded by the cardinality cap alone
    bool unsafe_cap = false;        // cap below the provably safe bound

    void merge(const PruneStats& o) {
        visited += o.visited;
        scored += o.scored;
        skipped += o.skipped;
        kept += o.kept;
        for (std::size_t i = 0; i < by_rule.size(); ++i) by_rule[i] += o.by_rule[i];
        cap_skipped += o.cap_skipped;
        unsafe_cap = unsafe_cap || o.unsafe_cap;
    }
};

// ---------------------------------------------------------------------------
// Rule predicates.  All comparisons are strict so that networks scoring
// exactly opt + eps survive; each returns true when the candidate (and, where
// noted, its supersets) can be discarded from every credible network.
// ---------------------------------------------------------------------------

// Rule 1: a scored subset beats the superset by more than eps.  Removes only
// the superset itself.
inline bool rule_subset_eps(double sigma_subset, double sigma_superset, double eps) {
    return sigma_subset + eps < sigma_superset;
}

// Rule 2 (BIC): the superset's penalty alone already exceeds a known subset
// score by more than eps.  Removes the superset and all its supersets.
inline bool rule_bic_penalty(double sigma_subset, double penalty_superset, double eps) {
    return sigma_subset - penalty_superset + eps < 0.0;
}

// Rule 3 (BIC): the candidate's own penalty exceeds the worst possible
// likelihood gain by more than eps.  Removes all proper supersets of the
// candidate; the candidate itself stays.
inline bool rule_bic_instantiations(std::uint64_t r_parent_inst, std::uint32_t r_child,
                                    std::uint64_t n_rows, double w, double eps) {
    return static_cast<double>(r_parent_inst) * static_cast<double>(r_child - 1) * w -
               static_cast<double>(n_rows) * std::log(static_cast<double>(r_child)) >
           eps;
}

inline int bic_cardinality_cap(std::uint64_t n_rows, double eps) {
    return static_cast<int>(std::ceil(std::log2(static_cast<double>(n_rows)) + eps));
}

// Rule 4 (BIC): parent sets beyond ceil(log2 N + eps) elements cannot appear
// in any credible network and are skipped without scoring.
inline bool rule_bic_cardinality(int parent_count, std::uint64_t n_rows, double eps) {
    return parent_count > bic_cardinality_cap(n_rows, eps);
}

// Rule 5 (BIC): extending parents by candidate_new_parent j costs
// (r_j - 1) * t(parents) * w extra penalty while the likelihood can improve by
// at most N * min{H(child | parents), H(j | parents)}; when the ceiling falls
// short of the extra penalty by more than eps, the extension and all its
// supersets are discarded.
inline bool rule_bic_entropy(const Dataset& d, int child, mask_t parents,
                             int candidate_new_parent, const ScoreConfig& cfg, double eps) {
    const double h_child = d.conditional_entropy(bit(child), parents);
    const double h_new = d.conditional_entropy(bit(candidate_new_parent), parents);
    const double gain_cap = static_cast<double>(d.row_count()) * std::min(h_child, h_new);
    const double t = static_cast<double>(d.instantiation_count(parents)) *
                     static_cast<double>(d.arity(child) - 1);
    const double extra_penalty =
        static_cast<double>(d.arity(candidate_new_parent) - 1) * t * cfg.w;
    return gain_cap < extra_penalty - eps;
}

// Rule 6 (BDeu): the superset's score is bounded below by
// positive_count * log r_child; when that floor exceeds a known subset score
// by more than eps, the superset and all its supersets are discarded (the
// floor only grows with more parents).
inline bool rule_bdeu_positive_counts(double sigma_subset, std::uint64_t positive_count_superset,
                                      std::uint32_t r_child, double eps) {
    return sigma_subset + eps <
           static_cast<double>(positive_count_superset) * std::log(static_cast<double>(r_child));
}

// ---------------------------------------------------------------------------
// Candidate generation: breadth-first lattice expansion by cardinality with
// superset blockers.  Every parent set appearing in any credible network at
// level eps is guaranteed to be kept (soundness), provided the cardinality
// cap is not tightened below the provably safe bound.
// ---------------------------------------------------------------------------

namespace detail {

class EntropyCache {
public:
    explicit EntropyCache(const Dataset& d) : d_(d) {}

    double get(mask_t vars) {
        {
            std::lock_guard<std::mutex> lock(mu_);
            auto it = cache_.find(vars);
            if (it != cache_.end()) return it->second;
        }
        const double h = d_.entropy(vars);
        std::lock_guard<std::mutex> lock(mu_);
        cache_.emplace(vars, h);
        return h;
    }

private:
    const Dataset& d_;
    std::unordered_map<mask_t, double> cache_;
    std::mutex mu_;
};

inline std::uint64_t binomial_saturating(int n, int k) {
    if (k < 0 || k > n) return 0;
    std::uint64_t c = 1;
    for (int i = 1; i <= k; ++i) {
        if (__builtin_mul_overflow(c, static_cast<std::uint64_t>(n - k + i), &c))
            return ~std::uint64_t{0};
        c /= static_cast<std::uint64_t>(i);
    }
    return c;
}

struct Blocker {
    mask_t set = 0;
    bool include_self = false;  // false: blocks proper supersets only
    int rule = 0;
};

inline CandidateList generate_for_child(const Dataset& d, const ScoreConfig& cfg, double eps,
                                        int child, int cap, EntropyCache& entropies,
                                        PruneStats& stats) {
    const int n = d.var_count();
    const std::uint64_t n_rows = d.row_count();
    const std::uint32_t r_child = d.arity(child);
    const bool bic = cfg.function == score_fn::bic;
    const double inf = std::numeric_limits<double>::infinity();

    std::vector<int> others;
    for (int v = 0; v < n; ++v)
        if (v != child) others.push_back(v);

    CandidateList list;
    list.child = child;
    list.epsilon = eps;
    list.max_size = cap;

    std::vector<Blocker> blockers;
    std::unordered_map<mask_t, double> best_incl;  // min score over scored subsets incl. self

    for (int card = 0; card <= cap; ++card) {
        // Standard combination walk over `others` at this cardinality.
        std::vector<int> comb(static_cast<std::size_t>(card));
        for (int i = 0; i < card; ++i) comb[static_cast<std::size_t>(i)] = i;
        while (card <= static_cast<int>(others.size())) {
            mask_t set = 0;
            for (int i : comb) set |= bit(others[static_cast<std::size_t>(i)]);

            ++stats.visited;
            int blocked_by = 0;
            for (const auto& b : blockers) {
                if ((b.set & set) == b.set && (b.include_self || b.set != set)) {
                    blocked_by = b.rule;
                    break;
                }
            }
            if (blocked_by != 0) {
                ++stats.skipped;
                ++stats.by_rule[static_cast<std::size_t>(blocked_by)];
            } else {
                // Every immediate subset of an unblocked set was scored (all
                // skipping rules propagate to supersets), so the best known
                // strict-subset score is exact here.
                double best_subset = inf;
                for (int i : mask_to_indices(set)) {
                    const double s = best_incl.at(set & ~bit(i));
                    if (s < best_subset) best_subset = s;
                }

                const std::uint64_t r_pi = d.instantiation_count(set);
                const double penalty = static_cast<double>(r_pi) *
                                       static_cast<double>(r_child - 1) * cfg.w;

                bool discard = false;
                ContingencyTable table;
                if (bic) {
                    if (rule_bic_penalty(best_subset, penalty, eps)) {
                        blockers.push_back(Blocker{set, true, 2});
                        ++stats.skipped;
                        ++stats.by_rule[2];
                        discard = true;
                    }
                } else {
                    table = d.counts(child, set);
                    if (rule_bdeu_positive_counts(best_subset, table.positive_count, r_child, eps)) {
                        blockers.push_back(Blocker{set, true, 6});
                        ++stats.skipped;
                        ++stats.by_rule[6];
                        discard = true;
                    }
                }

                if (!discard) {
                    if (bic) {
                        if (rule_bic_instantiations(r_pi, r_child, n_rows, cfg.w, eps))
                            blockers.push_back(Blocker{set, false, 3});
                        table = d.counts(child, set);
                    }
                    const LocalScore score = local_score(table, cfg);
                    ++stats.scored;

                    CandidateEntry entry;
                    entry.parents = set;
                    entry.score = score;
                    if (rule_subset_eps(best_subset, score.value, eps)) {
                        entry.pruned_by = 1;
                        ++stats.by_rule[1];
                    } else {
                        ++stats.kept;
                    }
                    list.entries.push_back(entry);

                    best_incl[set] = std::min(best_subset, score.value);

                    if (bic) {
                        const double h_child =
                            std::max(0.0, entropies.get(set | bit(child)) - entropies.get(set));
                        const double t_w = static_cast<double>(r_pi) *
                                           static_cast<double>(r_child - 1) * cfg.w;
                        for (int j : others) {
                            if (has_bit(set, j)) continue;
                            const double h_new =
                                std::max(0.0, entropies.get(set | bit(j)) - entropies.get(set));
                            const double gain_cap =
                                static_cast<double>(n_rows) * std::min(h_child, h_new);
                            const double extra =
                                static_cast<double>(d.arity(j) - 1) * t_w;
                            if (gain_cap < extra - eps)
                                blockers.push_back(Blocker{set | bit(j), true, 5});
                        }
                    }
                }
            }

            // advance combination
            int i = card - 1;
            while (i >= 0 &&
                   comb[static_cast<std::size_t>(i)] ==
                       static_cast<int>(others.size()) - card + i)
                --i;
            if (i < 0) break;
            ++comb[static_cast<std::size_t>(i)];
            for (int k = i + 1; k < card; ++k)
                comb[static_cast<std::size_t>(k)] = comb[static_cast<std::size_t>(k - 1)] + 1;
        }
    }
    return list;
}

}  // namespace detail

inline std::vector<CandidateList> generate_candidates(const Dataset& d, const ScoreConfig& cfg,
                                                      double eps,
                                                      std::optional<int> hard_cap = std::nullopt,
                                                      int jobs = 1,
                                                      PruneStats* stats_out = nullptr) {
    if (eps < 0.0) throw config_error("epsilon must be nonnegative");
    const int n = d.var_count();
    const int avail = n - 1;
    const bool bic = cfg.function == score_fn::bic;
    constexpr int kDefaultBdeuCap = 8;

    // Provably safe cardinality bound: ceil(log2 N + eps) for BIC; none is
    // known for BDeu, where a configurable cap (default 8) bounds the search.
    const int provable = bic ? bic_cardinality_cap(d.row_count(), eps) : avail;
    int cap = std::min(avail, provable);
    if (bic) {
        if (hard_cap) cap = std::min(cap, std::max(0, *hard_cap));
    } else {
        cap = std::min(cap, std::max(0, hard_cap.value_or(kDefaultBdeuCap)));
    }

    PruneStats totals;
    totals.unsafe_cap = cap < std::min(avail, provable);
    if (cap < avail) {
        std::uint64_t excluded = 0;
        for (int k = cap + 1; k <= avail; ++k) {
            const std::uint64_t c = detail::binomial_saturating(avail, k);
            if (__builtin_add_overflow(excluded, c, &excluded)) excluded = ~std::uint64_t{0};
        }
        // One lattice per child variable.
        std::uint64_t total_excluded = 0;
        if (__builtin_mul_overflow(excluded, static_cast<std::uint64_t>(n), &total_excluded))
            total_excluded = ~std::uint64_t{0};
        totals.cap_skipped = total_excluded;
        if (bic && !totals.unsafe_cap) totals.by_rule[4] = total_excluded;
    }

    detail::EntropyCache entropies(d);
    std::vector<CandidateList> lists(static_cast<std::size_t>(n));
    std::vector<PruneStats> per_child(static_cast<std::size_t>(n));

    const int workers = std::max(1, std::min(jobs, n));
    if (workers == 1) {
        for (int i = 0; i < n; ++i)
            lists[static_cast<std::size_t>(i)] = detail::generate_for_child(
                d, cfg, eps, i, cap, entropies, per_child[static_cast<std::size_t>(i)]);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        for (int t = 0; t < workers; ++t) {
            pool.emplace_back([&, t]() {
                for (int i = t; i < n; i += workers)
                    lists[static_cast<std::size_t>(i)] = detail::generate_for_child(
                        d, cfg, eps, i, cap, entropies, per_child[static_cast<std::size_t>(i)]);
            });
        }
        for (auto& th : pool) th.join();
    }

    for (const auto& s : per_child) totals.merge(s);
    if (stats_out) *stats_out = totals;
    return lists;
}

}  // namespace bncred
