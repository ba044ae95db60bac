#pragma once

#include <cmath>
#include <unordered_map>
#include <vector>

#include "common.hpp"
#include "dataset.hpp"

namespace bncred {

enum class score_fn { bic, bdeu };

// All scores are lower-is-better: sigma_BIC = -logLik + t(Pi) * w with
// w = ln(N)/2, and sigma_BDeu = -(log marginal likelihood of the family).
struct ScoreConfig {
    score_fn function = score_fn::bic;
    double alpha = 1.0;  // BDeu equivalent sample size
    double w = 0.0;      // BIC penalty weight ln(N)/2

    static ScoreConfig make(const Dataset& d, score_fn fn, double alpha = 1.0) {
        if (alpha <= 0.0) throw config_error("alpha must be positive");
        ScoreConfig cfg;
        cfg.function = fn;
        cfg.alpha = alpha;
        cfg.w = 0.5 * std::log(static_cast<double>(d.row_count()));
        return cfg;
    }
};

struct LocalScore {
    int child = -1;
    mask_t parents = 0;
    double value = 0.0;    // lower is better
    double log_lik = 0.0;  // maximized log-likelihood (BIC only; 0 for BDeu)
    double penalty = 0.0;  // t(Pi) * w (BIC only; 0 for BDeu)
};

inline LocalScore bic_local(const ContingencyTable& t, const ScoreConfig& cfg) {
    double ll = 0.0;
    for (const auto& cell : t.cells) {
        const double nj = static_cast<double>(cell.total);
        for (std::uint64_t c : cell.counts)
            if (c > 0) ll += static_cast<double>(c) * std::log(static_cast<double>(c) / nj);
    }
    LocalScore s;
    s.child = t.child;
    s.parents = t.parents;
    s.log_lik = ll;
    s.penalty = static_cast<double>(t.parent_instantiations) *
                static_cast<double>(t.child_arity - 1) * cfg.w;
    s.value = -ll + s.penalty;
    return s;
}

inline LocalScore bdeu_local(const ContingencyTable& t, const ScoreConfig& cfg) {
    const double ap = cfg.alpha / static_cast<double>(t.parent_instantiations);
    const double ac = ap / static_cast<double>(t.child_arity);
    const double lg_ap = std::lgamma(ap);
    const double lg_ac = std::lgamma(ac);
    double acc = 0.0;
    for (const auto& cell : t.cells) {
        acc += lg_ap - std::lgamma(ap + static_cast<double>(cell.total));
        for (std::uint64_t c : cell.counts)
            if (c > 0) acc += std::lgamma(ac + static_cast<double>(c)) - lg_ac;
    }
    LocalScore s;
    s.child = t.child;
    s.parents = t.parents;
    s.value = -acc;
    return s;
}

inline LocalScore local_score(const ContingencyTable& t, const ScoreConfig& cfg) {
    return cfg.function == score_fn::bic ? bic_local(t, cfg) : bdeu_local(t, cfg);
}

// Certified lower bound on the BDeu score of this table and of every table
// for a superset of its parent set (positive counts only grow with more
// parents, and the bound is monotone in the positive count).
inline double bdeu_lower_bound(const ContingencyTable& t) {
    return static_cast<double>(t.positive_count) * std::log(static_cast<double>(t.child_arity));
}

// Per-variable lookup from parent-set mask to local score value.
using score_lookup = std::vector<std::unordered_map<mask_t, double>>;

inline double network_score(const std::vector<mask_t>& parent_sets, const score_lookup& locals) {
    double total = 0.0;
    for (std::size_t i = 0; i < parent_sets.size(); ++i) {
        const auto& table = locals[i];
        const auto it = table.find(parent_sets[i]);
        if (it == table.end()) {
            std::string names;
            for (int p : mask_to_indices(parent_sets[i]))
                names += (names.empty() ? "" : ",") + std::to_string(p);
            throw lookup_error("no local score for variable " + std::to_string(i) +
                               " with parents {" + names + "}");
        }
        total += it->second;
    }
    return total;
}

}  // namespace bncred
