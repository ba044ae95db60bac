#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "common.hpp"
#include "dataset.hpp"
#include "equivalence.hpp"
#include "pruning.hpp"
#include "scorefile.hpp"
#include "scoring.hpp"
#include "solver.hpp"

namespace bncred {

struct RunConfig {
    std::string command;
    std::string input;
    std::string format = "auto";  // auto | native | csv | scores
    std::string fn = "bic";       // bic | bdeu
    double alpha = 1.0;
    std::optional<double> epsilon;
    std::optional<double> bf;
    std::optional<double> rho;
    std::uint64_t limit = kDefaultCountingLimit;
    std::optional<int> max_parents;
    int dp_limit = kDefaultDpLimit;
    int jobs = 1;
    std::uint64_t seed = 0;  // reserved for auxiliary tooling; unused by the core
    std::string out;         // score file (score) / report CSV (report; empty = stdout)
    std::string out_dir = ".";  // solve outputs
    std::vector<double> sweep;  // report: Bayes-factor reference values
};

namespace detail {

inline std::string detect_format(const RunConfig& cfg) {
    if (cfg.format != "auto") return cfg.format;
    const auto ext = std::filesystem::path(cfg.input).extension().string();
    if (ext == ".csv") return "csv";
    if (ext == ".scores") return "scores";
    return "native";
}

inline std::optional<EpsilonSpec> epsilon_spec(const RunConfig& cfg) {
    int given = 0;
    given += cfg.epsilon.has_value();
    given += cfg.bf.has_value();
    given += cfg.rho.has_value();
    if (given > 1) throw config_error("conflicting epsilon options: pass exactly one of --epsilon, --bf, --rho");
    if (cfg.epsilon) return EpsilonSpec::direct(*cfg.epsilon);
    if (cfg.bf) return EpsilonSpec::bayes_factor(*cfg.bf);
    if (cfg.rho) return EpsilonSpec::factor(*cfg.rho);
    return std::nullopt;
}

struct Pipeline {
    std::vector<std::string> names;
    std::vector<CandidateList> lists;
    SolveResult solved;
    bool have_solved = false;
    double eps = 0.0;
    PruneStats stats;
    bool from_scores = false;
    std::uint64_t n_rows = 0;  // 0 when unknown (score-file input)
};

// Runs input loading, candidate generation / import, epsilon resolution and
// (optionally) the exact solve.  extra_eps is an additional lower bound on the
// enumeration window (used by `report` sweeps); -inf means "none".
inline Pipeline run_pipeline(const RunConfig& cfg, double extra_eps, bool need_solve) {
    const double neg_inf = -std::numeric_limits<double>::infinity();
    const auto spec = epsilon_spec(cfg);
    if (!spec && extra_eps == neg_inf)
        throw config_error("no epsilon specified: pass exactly one of --epsilon, --bf, --rho");
    if (cfg.jobs < 1) throw config_error("--jobs must be at least 1");
    if (cfg.limit < 1) throw config_error("--limit must be at least 1");

    const std::string format = detect_format(cfg);
    std::ifstream in(cfg.input, std::ios::binary);
    if (!in) throw config_error("cannot open '" + cfg.input + "'");

    Pipeline p;
    if (format == "scores") {
        ScoreFile file = read_scores(in);
        p.from_scores = true;
        p.names = std::move(file.names);
        p.lists = std::move(file.lists);
        const bool needs_opt = spec && spec->kind == EpsilonSpec::origin::factor;
        if (need_solve || needs_opt) {
            p.solved = solve_opt(p.lists, cfg.dp_limit);
            p.have_solved = true;
        }
        double resolved = neg_inf;
        if (spec) resolved = resolve_epsilon(*spec, p.have_solved ? p.solved.opt : 0.0);
        p.eps = std::max(resolved, extra_eps);
        return p;
    }
    if (format != "native" && format != "csv")
        throw config_error("unknown input format '" + format + "'");

    const Dataset d =
        Dataset::parse(in, format == "csv" ? data_format::csv : data_format::native);
    p.n_rows = d.row_count();
    for (int i = 0; i < d.var_count(); ++i) p.names.push_back(d.variable(i).name);
    const score_fn fn = cfg.fn == "bdeu" ? score_fn::bdeu : score_fn::bic;
    const ScoreConfig scfg = ScoreConfig::make(d, fn, cfg.alpha);

    double resolved = neg_inf;
    if (spec) {
        if (spec->kind == EpsilonSpec::origin::factor) {
            // The window depends on OPT, which is not yet known: find OPT from
            // an eps=0 pass (safe: eps=0 pruning keeps every optimal network),
            // then regenerate candidates at the resolved window.
            auto lists0 = generate_candidates(d, scfg, 0.0, cfg.max_parents, cfg.jobs);
            const auto solved0 = solve_opt(lists0, cfg.dp_limit);
            resolved = resolve_epsilon(*spec, solved0.opt);
        } else {
            resolved = resolve_epsilon(*spec);
        }
    }
    p.eps = std::max(resolved, extra_eps);
    p.lists = generate_candidates(d, scfg, p.eps, cfg.max_parents, cfg.jobs, &p.stats);
    if (need_solve) {
        p.solved = solve_opt(p.lists, cfg.dp_limit);
        p.have_solved = true;
    }
    return p;
}

inline void print_prune_stats(const Pipeline& p, std::ostream& out) {
    if (p.from_scores) return;
    const auto& s = p.stats;
    out << "pruning: visited=" << s.visited << " scored=" << s.scored << " kept=" << s.kept
        << " skipped=" << s.skipped << "\n";
    out << "rules: r1=" << s.by_rule[1] << " r2=" << s.by_rule[2] << " r3=" << s.by_rule[3]
        << " r4=" << s.by_rule[4] << " r5=" << s.by_rule[5] << " r6=" << s.by_rule[6] << "\n";
    out << "parent cap: max_size=" << (p.lists.empty() ? 0 : p.lists.front().max_size)
        << " excluded=" << s.cap_skipped << "\n";
    if (s.unsafe_cap)
        out << "warning: parent-set cap below the provably safe bound; "
               "candidate lists may be incomplete\n";
}

inline std::ofstream open_output(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw config_error("cannot open '" + path.string() + "' for writing");
    return out;
}

inline int cmd_score(const RunConfig& cfg, std::ostream& diag) {
    if (cfg.out.empty()) throw config_error("score output path required: pass --out");
    Pipeline p = run_pipeline(cfg, -std::numeric_limits<double>::infinity(), false);
    auto out = open_output(cfg.out);
    write_scores(p.lists, p.names, out);
    print_prune_stats(p, diag);
    return 0;
}

inline int cmd_solve(const RunConfig& cfg, std::ostream& diag) {
    Pipeline p = run_pipeline(cfg, -std::numeric_limits<double>::infinity(), true);
    const CredibleSet cred =
        enumerate_credible(p.lists, p.solved.tables, p.solved.opt, p.eps, cfg.limit);
    const MecPartition part = partition(cred);

    const std::filesystem::path dir(cfg.out_dir);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw config_error("cannot create output directory '" + dir.string() + "'");

    {
        auto out = open_output(dir / "credible.tsv");
        write_credible_set(cred, p.names, out);
    }
    {
        auto out = open_output(dir / "mec.csv");
        out << "mec_id,size,best_score,representative\n";
        for (std::size_t i = 0; i < part.classes.size(); ++i) {
            const auto& cls = part.classes[i];
            out << (i + 1) << "," << cls.members.size() << ","
                << format_double(cls.best_score) << ",\"" << cls.representative << "\"\n";
        }
    }
    {
        auto out = open_output(dir / "arcs.csv");
        out << "from,to,presence_count,weighted_probability\n";
        auto arcs = part.arcs;
        std::sort(arcs.begin(), arcs.end(), [&](const ArcStat& a, const ArcStat& b) {
            const auto& na = p.names[static_cast<std::size_t>(a.from)];
            const auto& nb = p.names[static_cast<std::size_t>(b.from)];
            if (na != nb) return na < nb;
            return p.names[static_cast<std::size_t>(a.to)] < p.names[static_cast<std::size_t>(b.to)];
        });
        for (const auto& a : arcs)
            out << p.names[static_cast<std::size_t>(a.from)] << ","
                << p.names[static_cast<std::size_t>(a.to)] << "," << a.count << ","
                << format_double(a.probability) << "\n";
    }

    print_prune_stats(p, diag);
    diag << "n=" << p.names.size() << " N=";
    if (p.from_scores)
        diag << "?";
    else
        diag << p.n_rows;
    diag << " OPT=" << format_double(p.solved.opt) << " eps=" << format_double(p.eps)
         << " |G|=" << cred.networks.size() << " |M|=" << part.classes.size()
         << " truncated=" << (cred.truncated ? 1 : 0) << "\n";
    return 0;
}

inline int cmd_report(const RunConfig& cfg, std::ostream& diag) {
    std::vector<double> sweep = cfg.sweep;
    for (double bf : sweep)
        if (bf <= 1.0) throw config_error("sweep values must be Bayes factors > 1");
    std::sort(sweep.begin(), sweep.end());
    sweep.erase(std::unique(sweep.begin(), sweep.end()), sweep.end());

    double extra = -std::numeric_limits<double>::infinity();
    if (!sweep.empty()) extra = std::log(sweep.back());

    Pipeline p = run_pipeline(cfg, extra, true);
    const CredibleSet cred =
        enumerate_credible(p.lists, p.solved.tables, p.solved.opt, p.eps, cfg.limit);

    std::ostringstream csv;
    csv << "kind,k_or_bf,value\n";
    for (std::size_t k = 0; k < cred.networks.size(); ++k)
        csv << "data," << (k + 1) << ","
            << format_double(cred.networks[k].score - cred.opt) << "\n";
    for (double bf : sweep)
        csv << "ref," << format_double(bf) << "," << format_double(std::log(bf)) << "\n";

    if (cfg.out.empty()) {
        diag << csv.str();
    } else {
        auto out = open_output(cfg.out);
        out << csv.str();
    }
    return 0;
}

inline void add_common_options(CLI::App* sub, RunConfig& cfg) {
    sub->add_option("--in", cfg.input, "input file (dataset or score file)")->required();
    sub->add_option("--format", cfg.format, "input format: auto, native, csv, scores")
        ->check(CLI::IsMember({"auto", "native", "csv", "scores"}));
    sub->add_option("--fn", cfg.fn, "scoring function: bic or bdeu")
        ->check(CLI::IsMember({"bic", "bdeu"}));
    sub->add_option("--alpha", cfg.alpha, "BDeu equivalent sample size (default 1)");
    sub->add_option("--epsilon", cfg.epsilon, "credible window width (nats)");
    sub->add_option("--bf", cfg.bf, "Bayes factor; window = ln(BF)");
    sub->add_option("--rho", cfg.rho, "score factor; window = (rho-1)*|OPT|");
    sub->add_option("--limit", cfg.limit, "counting limit on collected networks");
    sub->add_option("--max-parents", cfg.max_parents, "cardinality cap override");
    sub->add_option("--dp-limit", cfg.dp_limit, "exact-solver variable limit (default 24)");
    sub->add_option("--jobs", cfg.jobs, "worker threads for candidate generation");
    sub->add_option("--seed", cfg.seed, "seed for auxiliary tooling (unused by the core)");
}

}  // namespace detail

inline int run_cli(const std::vector<std::string>& args, std::ostream& out = std::cout,
                   std::ostream& err = std::cerr) {
    RunConfig cfg;
    CLI::App app{"bncred: credible-set enumeration for Bayesian network structures"};
    app.require_subcommand(1);

    CLI::App* score = app.add_subcommand("score", "compute, prune and export local scores");
    detail::add_common_options(score, cfg);
    score->add_option("--out", cfg.out, "score file to write")->required();

    CLI::App* solve = app.add_subcommand("solve", "enumerate the credible set and MEC reports");
    detail::add_common_options(solve, cfg);
    solve->add_option("--out-dir", cfg.out_dir, "directory for credible.tsv, mec.csv, arcs.csv");

    CLI::App* report = app.add_subcommand("report", "score-deviation curve with BF reference lines");
    detail::add_common_options(report, cfg);
    report->add_option("--out", cfg.out, "CSV output path (default: stdout)");
    report->add_option("--sweep", cfg.sweep, "Bayes factors for reference rows")->delimiter(',');

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 2;
    }

    try {
        if (score->parsed()) {
            cfg.command = "score";
            return detail::cmd_score(cfg, out);
        }
        if (solve->parsed()) {
            cfg.command = "solve";
            return detail::cmd_solve(cfg, out);
        }
        cfg.command = "report";
        return detail::cmd_report(cfg, out);
    } catch (const config_error& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const input_error& e) {
        err << "error: " << e.what() << "\n";
        return 3;
    } catch (const capacity_error& e) {
        err << "error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

inline int run_cli(int argc, const char* const* argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run_cli(args);
}

}  // namespace bncred
