#pragma once

// Brute-force reference implementations used by the test suites.  These are
// deliberately written from the definitions (exhaustive DAG enumeration, naive
// map-based counting) rather than reusing the library's pruning/solver code,
// so they can serve as an independent oracle at small scale.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <bncred/dataset.hpp>
#include <bncred/scoring.hpp>

namespace oracle {

using bncred::Dataset;
using bncred::mask_t;

// Every DAG over n variables, each as a per-variable parent-set vector.
inline std::vector<std::vector<mask_t>> all_dags(int n) {
    std::vector<std::vector<mask_t>> per_var(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const mask_t others = bncred::full_mask(n) & ~bncred::bit(i);
        for (mask_t s = 0;; s = (s - others) & others) {
            per_var[static_cast<std::size_t>(i)].push_back(s);
            if (s == others) break;
        }
    }
    std::vector<std::vector<mask_t>> dags;
    std::vector<std::size_t> pick(static_cast<std::size_t>(n), 0);
    while (true) {
        std::vector<mask_t> assign(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i)
            assign[static_cast<std::size_t>(i)] = per_var[static_cast<std::size_t>(i)][pick[static_cast<std::size_t>(i)]];
        // acyclic iff repeated source removal empties the variable set
        mask_t remaining = bncred::full_mask(n);
        bool progress = true;
        while (remaining != 0 && progress) {
            progress = false;
            for (int v = 0; v < n; ++v)
                if (bncred::has_bit(remaining, v) &&
                    (assign[static_cast<std::size_t>(v)] & remaining) == 0) {
                    remaining &= ~bncred::bit(v);
                    progress = true;
                }
        }
        if (remaining == 0) dags.push_back(assign);
        int i = 0;
        for (; i < n; ++i) {
            auto& p = pick[static_cast<std::size_t>(i)];
            if (++p < per_var[static_cast<std::size_t>(i)].size()) break;
            p = 0;
        }
        if (i == n) break;
    }
    return dags;
}

// Naive local scores computed with map-based tallies straight from the score
// definitions (independent of ContingencyTable).
inline double naive_bic(const Dataset& d, int child, mask_t parents, double w) {
    std::map<std::vector<std::uint32_t>, std::map<std::uint32_t, std::uint64_t>> cells;
    const auto pidx = bncred::mask_to_indices(parents);
    for (std::uint64_t row = 0; row < d.row_count(); ++row) {
        std::vector<std::uint32_t> key;
        for (int p : pidx) key.push_back(d.value(row, p));
        ++cells[key][d.value(row, child)];
    }
    double ll = 0.0;
    for (const auto& [key, counts] : cells) {
        std::uint64_t nj = 0;
        for (const auto& [k, c] : counts) nj += c;
        for (const auto& [k, c] : counts)
            ll += static_cast<double>(c) *
                  std::log(static_cast<double>(c) / static_cast<double>(nj));
    }
    double r_pi = 1.0;
    for (int p : pidx) r_pi *= static_cast<double>(d.arity(p));
    return -ll + r_pi * static_cast<double>(d.arity(child) - 1) * w;
}

inline double naive_bdeu(const Dataset& d, int child, mask_t parents, double alpha) {
    std::map<std::vector<std::uint32_t>, std::map<std::uint32_t, std::uint64_t>> cells;
    const auto pidx = bncred::mask_to_indices(parents);
    for (std::uint64_t row = 0; row < d.row_count(); ++row) {
        std::vector<std::uint32_t> key;
        for (int p : pidx) key.push_back(d.value(row, p));
        ++cells[key][d.value(row, child)];
    }
    double r_pi = 1.0;
    for (int p : pidx) r_pi *= static_cast<double>(d.arity(p));
    const double ap = alpha / r_pi;
    const double ac = ap / static_cast<double>(d.arity(child));
    double acc = 0.0;
    for (const auto& [key, counts] : cells) {
        std::uint64_t nj = 0;
        for (const auto& [k, c] : counts) nj += c;
        acc += std::lgamma(ap) - std::lgamma(ap + static_cast<double>(nj));
        for (const auto& [k, c] : counts)
            acc += std::lgamma(ac + static_cast<double>(c)) - std::lgamma(ac);
    }
    return -acc;
}

inline double naive_local(const Dataset& d, int child, mask_t parents, bncred::score_fn fn,
                          double alpha) {
    const double w = 0.5 * std::log(static_cast<double>(d.row_count()));
    return fn == bncred::score_fn::bic ? naive_bic(d, child, parents, w)
                                       : naive_bdeu(d, child, parents, alpha);
}

// Canonical structure key, re-derived here so set comparisons against the
// library do not depend on the library's own key maker.
inline std::string key_of(const std::vector<mask_t>& parent_sets) {
    std::string key;
    for (std::size_t i = 0; i < parent_sets.size(); ++i) {
        if (i) key += ';';
        key += std::to_string(i);
        key += ':';
        const auto idx = bncred::mask_to_indices(parent_sets[i]);
        for (std::size_t p = 0; p < idx.size(); ++p) {
            if (p) key += ',';
            key += std::to_string(idx[p]);
        }
    }
    return key;
}

struct BruteNetwork {
    double score = 0.0;
    std::vector<mask_t> parent_sets;
    std::string key;
};

struct BruteResult {
    double opt = 0.0;
    std::vector<BruteNetwork> credible;  // sorted by (score, key)
    std::size_t dag_count = 0;
};

inline BruteResult brute_credible(const Dataset& d, bncred::score_fn fn, double alpha,
                                  double eps) {
    const int n = d.var_count();
    std::vector<std::map<mask_t, double>> memo(static_cast<std::size_t>(n));
    auto local = [&](int child, mask_t parents) {
        auto& m = memo[static_cast<std::size_t>(child)];
        auto it = m.find(parents);
        if (it == m.end()) it = m.emplace(parents, naive_local(d, child, parents, fn, alpha)).first;
        return it->second;
    };

    const auto dags = all_dags(n);
    std::vector<std::pair<double, std::size_t>> scored;
    for (std::size_t g = 0; g < dags.size(); ++g) {
        double s = 0.0;
        for (int i = 0; i < n; ++i) s += local(i, dags[g][static_cast<std::size_t>(i)]);
        scored.emplace_back(s, g);
    }
    BruteResult res;
    res.dag_count = dags.size();
    res.opt = std::min_element(scored.begin(), scored.end())->first;
    for (const auto& [s, g] : scored) {
        if (s <= res.opt + eps + 1e-9) {
            BruteNetwork net;
            net.score = s;
            net.parent_sets = dags[g];
            net.key = key_of(dags[g]);
            res.credible.push_back(std::move(net));
        }
    }
    std::sort(res.credible.begin(), res.credible.end(),
              [](const BruteNetwork& a, const BruteNetwork& b) {
                  if (a.score != b.score) return a.score < b.score;
                  return a.key < b.key;
              });
    return res;
}

// ---------------------------------------------------------------------------
// Fixtures.
// ---------------------------------------------------------------------------

// Two binary variables, N = 8: A uniform; B mostly copies A.
inline Dataset d1() {
    return Dataset::parse(
        "A B\n2 2\n0 0\n0 0\n0 0\n0 1\n1 0\n1 1\n1 1\n1 1\n",
        bncred::data_format::native);
}

// Random discrete dataset sampled from a random DAG-structured process so the
// credible sets exercise nontrivial structure.  Arities are drawn from {2,3}.
inline Dataset random_dataset(std::mt19937& rng, int n, int rows) {
    std::vector<std::uint32_t> arity(static_cast<std::size_t>(n));
    for (auto& r : arity) r = 2 + rng() % 2;

    // random topological order + sparse parents among predecessors
    std::vector<int> order(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<std::vector<int>> parents(static_cast<std::size_t>(n));
    for (int pos = 1; pos < n; ++pos) {
        const int v = order[static_cast<std::size_t>(pos)];
        for (int prev = 0; prev < pos; ++prev)
            if (rng() % 100 < 45)
                parents[static_cast<std::size_t>(v)].push_back(order[static_cast<std::size_t>(prev)]);
    }

    std::ostringstream text;
    for (int i = 0; i < n; ++i) text << (i ? " " : "") << "V" << i;
    text << "\n";
    for (int i = 0; i < n; ++i) text << (i ? " " : "") << arity[static_cast<std::size_t>(i)];
    text << "\n";

    std::vector<std::uint32_t> row(static_cast<std::size_t>(n));
    for (int r = 0; r < rows; ++r) {
        for (int v : order) {
            std::uint32_t sum = 0;
            for (int p : parents[static_cast<std::size_t>(v)]) sum += row[static_cast<std::size_t>(p)];
            const auto rv = arity[static_cast<std::size_t>(v)];
            row[static_cast<std::size_t>(v)] =
                (rng() % 100 < 35) ? rng() % rv : (sum + rng() % 2) % rv;
        }
        for (int i = 0; i < n; ++i) text << (i ? " " : "") << row[static_cast<std::size_t>(i)];
        text << "\n";
    }
    return Dataset::parse(text.str(), bncred::data_format::native);
}

}  // namespace oracle
