#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <tuple>
#include <utility>
#include <vector>

#include "common.hpp"
#include "solver.hpp"

namespace bncred {

// Two DAGs are Markov equivalent iff they share the same skeleton and the
// same v-structures (a -> c <- b with a, b non-adjacent).
struct MecKey {
    std::vector<std::pair<int, int>> skeleton;          // (u, v) with u < v, sorted
    std::vector<std::array<int, 3>> vstructures;        // (a, c, b) with a < b, sorted

    bool operator==(const MecKey& o) const {
        return skeleton == o.skeleton && vstructures == o.vstructures;
    }
    bool operator<(const MecKey& o) const {
        return std::tie(skeleton, vstructures) < std::tie(o.skeleton, o.vstructures);
    }
};

inline MecKey mec_key(const std::vector<mask_t>& parent_sets) {
    const int n = static_cast<int>(parent_sets.size());
    MecKey key;
    std::vector<mask_t> adjacent(static_cast<std::size_t>(n), 0);
    for (int c = 0; c < n; ++c) {
        for (int p : mask_to_indices(parent_sets[static_cast<std::size_t>(c)])) {
            key.skeleton.emplace_back(std::min(p, c), std::max(p, c));
            adjacent[static_cast<std::size_t>(c)] |= bit(p);
            adjacent[static_cast<std::size_t>(p)] |= bit(c);
        }
    }
    std::sort(key.skeleton.begin(), key.skeleton.end());
    for (int c = 0; c < n; ++c) {
        const auto parents = mask_to_indices(parent_sets[static_cast<std::size_t>(c)]);
        for (std::size_t x = 0; x < parents.size(); ++x)
            for (std::size_t y = x + 1; y < parents.size(); ++y) {
                const int a = parents[x], b = parents[y];
                if (!has_bit(adjacent[static_cast<std::size_t>(a)], b))
                    key.vstructures.push_back({a, c, b});
            }
    }
    std::sort(key.vstructures.begin(), key.vstructures.end());
    return key;
}

inline MecKey mec_key(const Dag& g) { return mec_key(g.parent_sets); }

struct MecClass {
    MecKey key;
    std::vector<std::size_t> members;  // indices into CredibleSet::networks
    double best_score = 0.0;
    std::string representative;        // canonical key of the best member
};

struct ArcStat {
    int from = -1;
    int to = -1;
    std::uint64_t count = 0;    // networks containing the arc
    double probability = 0.0;   // weight-averaged presence probability
};

struct MecPartition {
    std::vector<MecClass> classes;  // sorted by (best_score, representative)
    std::vector<ArcStat> arcs;      // arcs with count > 0, sorted by (from, to)
};

// Groups a credible set by MEC key and aggregates model-averaged arc
// statistics with weights w(G) = exp(-(score(G) - opt)) normalized over the
// collected members (truncated averaging: networks outside the credible set
// contribute nothing).
inline MecPartition partition(const CredibleSet& set) {
    MecPartition out;
    if (set.networks.empty()) return out;
    const int n = static_cast<int>(set.networks.front().parent_sets.size());

    std::map<MecKey, MecClass> classes;
    double total_weight = 0.0;
    std::vector<std::vector<double>> arc_weight(
        static_cast<std::size_t>(n), std::vector<double>(static_cast<std::size_t>(n), 0.0));
    std::vector<std::vector<std::uint64_t>> arc_count(
        static_cast<std::size_t>(n), std::vector<std::uint64_t>(static_cast<std::size_t>(n), 0));

    for (std::size_t idx = 0; idx < set.networks.size(); ++idx) {
        const Dag& g = set.networks[idx];
        auto [it, fresh] = classes.try_emplace(mec_key(g));
        MecClass& cls = it->second;
        if (fresh || g.score < cls.best_score ||
            (g.score == cls.best_score && g.canonical_key < cls.representative)) {
            cls.best_score = g.score;
            cls.representative = g.canonical_key;
        }
        cls.members.push_back(idx);

        const double w = std::exp(-(g.score - set.opt));
        total_weight += w;
        for (int c = 0; c < n; ++c)
            for (int p : mask_to_indices(g.parent_sets[static_cast<std::size_t>(c)])) {
                arc_weight[static_cast<std::size_t>(p)][static_cast<std::size_t>(c)] += w;
                ++arc_count[static_cast<std::size_t>(p)][static_cast<std::size_t>(c)];
            }
    }

    for (auto& [key, cls] : classes) {
        cls.key = key;
        out.classes.push_back(std::move(cls));
    }
    std::sort(out.classes.begin(), out.classes.end(), [](const MecClass& a, const MecClass& b) {
        if (a.best_score != b.best_score) return a.best_score < b.best_score;
        return a.representative < b.representative;
    });

    for (int u = 0; u < n; ++u)
        for (int v = 0; v < n; ++v) {
            if (arc_count[static_cast<std::size_t>(u)][static_cast<std::size_t>(v)] == 0) continue;
            ArcStat a;
            a.from = u;
            a.to = v;
            a.count = arc_count[static_cast<std::size_t>(u)][static_cast<std::size_t>(v)];
            a.probability =
                arc_weight[static_cast<std::size_t>(u)][static_cast<std::size_t>(v)] / total_weight;
            out.arcs.push_back(a);
        }
    return out;
}

}  // namespace bncred
