#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <bncred/cli.hpp>

using Catch::Matchers::ContainsSubstring;

namespace {

namespace fs = std::filesystem;

const char* kD1Native = "A B\n2 2\n0 0\n0 0\n0 0\n0 1\n1 0\n1 1\n1 1\n1 1\n";
const char* kD1Csv = "A,B\n0,0\n0,0\n0,0\n0,1\n1,0\n1,1\n1,1\n1,1\n";

const char* kD1Credible =
    "#opt=13.163020913949783 eps=2.995732273553991 truncated=0\n"
    "13.163020913949783\tA:B;B:\n"
    "13.163020913949783\tA:;B:A\n"
    "13.16979643063896\tA:;B:\n";

struct Scratch {
    fs::path dir;
    explicit Scratch(const std::string& tag) {
        dir = fs::temp_directory_path() / "bncred_cli_tests" / tag;
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    fs::path file(const std::string& name, const std::string& content) const {
        const fs::path p = dir / name;
        std::ofstream out(p, std::ios::binary);
        out << content;
        return p;
    }
    fs::path path(const std::string& name) const { return dir / name; }
    ~Scratch() {
        std::error_code ec;
        fs::remove_all(dir, ec);
    }
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct Run {
    int code = -1;
    std::string out;
    std::string err;
};

Run cli(std::vector<std::string> args) {
    std::ostringstream out, err;
    Run r;
    r.code = bncred::run_cli(args, out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

}  // namespace

TEST_CASE("usage and configuration errors exit with code 2", "[cli]") {
    Scratch s("usage");
    const auto d1 = s.file("d1.txt", kD1Native).string();

    REQUIRE(cli({}).code == 2);                             // missing subcommand
    REQUIRE(cli({"solve"}).code == 2);                      // missing --in
    REQUIRE(cli({"score", "--in", d1, "--epsilon", "1"}).code == 2);  // missing --out
    REQUIRE(cli({"solve", "--in", d1, "--fn", "quux", "--epsilon", "1"}).code == 2);

    const auto missing = cli({"solve", "--in", (s.dir / "nope.txt").string(), "--epsilon", "1"});
    REQUIRE(missing.code == 2);
    REQUIRE_THAT(missing.err, ContainsSubstring("cannot open"));

    const auto conflict = cli({"solve", "--in", d1, "--epsilon", "0.5", "--bf", "3"});
    REQUIRE(conflict.code == 2);
    REQUIRE_THAT(conflict.err, ContainsSubstring("conflicting"));

    const auto none = cli({"solve", "--in", d1});
    REQUIRE(none.code == 2);
    REQUIRE_THAT(none.err, ContainsSubstring("no epsilon"));

    REQUIRE(cli({"solve", "--in", d1, "--epsilon", "-0.5"}).code == 2);
    REQUIRE(cli({"solve", "--in", d1, "--bf", "1"}).code == 2);
    REQUIRE(cli({"solve", "--in", d1, "--rho", "0.5"}).code == 2);
    REQUIRE(cli({"solve", "--in", d1, "--epsilon", "1", "--jobs", "0"}).code == 2);

    const auto help = cli({"--help"});
    REQUIRE(help.code == 0);
    REQUIRE_THAT(help.out, ContainsSubstring("solve"));
}

TEST_CASE("malformed input content exits with code 3", "[cli]") {
    Scratch s("badinput");
    const auto bad = s.file("bad.txt", "A B\n2 2\n0 2\n").string();
    const auto r = cli({"solve", "--in", bad, "--epsilon", "1"});
    REQUIRE(r.code == 3);
    REQUIRE_THAT(r.err, ContainsSubstring("line 3"));
    REQUIRE_THAT(r.err, ContainsSubstring("out of range"));

    const auto bad_scores = s.file("bad.scores", "2\nA 1\n-1.5 1 Q\nB 0\n").string();
    const auto rs = cli({"solve", "--in", bad_scores, "--epsilon", "1"});
    REQUIRE(rs.code == 3);
    REQUIRE_THAT(rs.err, ContainsSubstring("unknown parent name"));

    const auto cyclic =
        s.file("cyclic.scores", "2\nA 1\n-1.5 1 B\nB 1\n-1.5 1 A\n").string();
    const auto rc = cli({"solve", "--in", cyclic, "--epsilon", "1"});
    REQUIRE(rc.code == 3);
    REQUIRE_THAT(rc.err, ContainsSubstring("no acyclic network"));
}

TEST_CASE("capacity limits exit with code 4", "[cli]") {
    Scratch s("capacity");
    const auto d3 =
        s.file("d3.txt", "A B C\n2 2 2\n0 0 0\n0 1 1\n1 0 1\n1 1 0\n0 0 1\n1 1 1\n").string();
    const auto r = cli({"solve", "--in", d3, "--epsilon", "0.5", "--dp-limit", "2"});
    REQUIRE(r.code == 4);
    REQUIRE_THAT(r.err, ContainsSubstring("exceeding"));
}

TEST_CASE("solve writes the three reports", "[cli]") {
    Scratch s("solve");
    const auto d1 = s.file("d1.txt", kD1Native).string();
    const auto out_dir = s.path("reports/nested");

    const auto r = cli({"solve", "--in", d1, "--bf", "20", "--out-dir", out_dir.string()});
    REQUIRE(r.code == 0);
    REQUIRE(r.err.empty());
    REQUIRE(r.out ==
            "pruning: visited=4 scored=4 kept=4 skipped=0\n"
            "rules: r1=0 r2=0 r3=0 r4=0 r5=0 r6=0\n"
            "parent cap: max_size=1 excluded=0\n"
            "n=2 N=8 OPT=13.163020913949783 eps=2.995732273553991 |G|=3 |M|=2 truncated=0\n");

    REQUIRE(slurp(out_dir / "credible.tsv") == kD1Credible);
    REQUIRE(slurp(out_dir / "mec.csv") ==
            "mec_id,size,best_score,representative\n"
            "1,2,13.163020913949783,\"0:1;1:\"\n"
            "2,1,13.16979643063896,\"0:;1:\"\n");

    const double p = 1.0 / (2.0 + std::exp(-(13.16979643063896 - 13.163020913949783)));
    const std::string ps = bncred::format_double(p);
    REQUIRE(slurp(out_dir / "arcs.csv") ==
            "from,to,presence_count,weighted_probability\n"
            "A,B,1," + ps + "\n"
            "B,A,1," + ps + "\n");
}

TEST_CASE("zero epsilon keeps only the optima", "[cli]") {
    Scratch s("eps0");
    const auto d1 = s.file("d1.txt", kD1Native).string();
    const auto r = cli({"solve", "--in", d1, "--epsilon", "0", "--out-dir", s.dir.string()});
    REQUIRE(r.code == 0);
    REQUIRE_THAT(r.out, ContainsSubstring(
        "n=2 N=8 OPT=13.163020913949783 eps=0 |G|=2 |M|=1 truncated=0\n"));
}

TEST_CASE("rho windows resolve against the optimum", "[cli]") {
    Scratch s("rho");
    const auto d1 = s.file("d1.txt", kD1Native).string();
    const auto r = cli({"solve", "--in", d1, "--rho", "1.001", "--out-dir", s.dir.string()});
    REQUIRE(r.code == 0);
    const std::string eps = bncred::format_double((1.001 - 1.0) * 13.163020913949783);
    REQUIRE_THAT(r.out, ContainsSubstring(" eps=" + eps + " |G|=3 |M|=2 truncated=0\n"));
}

TEST_CASE("score exports and solve imports the same analysis", "[cli]") {
    Scratch s("roundtrip");
    const auto d1 = s.file("d1.txt", kD1Native).string();
    const auto scores = s.path("d1.scores");

    const auto rs = cli({"score", "--in", d1, "--bf", "20", "--out", scores.string()});
    REQUIRE(rs.code == 0);
    REQUIRE(slurp(scores) ==
            "2\n"
            "A 2\n"
            "-6.5781226986303025 1 B\n"
            "-6.58489821531948 0\n"
            "B 2\n"
            "-6.5781226986303025 1 A\n"
            "-6.58489821531948 0\n");

    const auto dir = s.path("from_scores");
    const auto r = cli({"solve", "--in", scores.string(), "--bf", "20", "--out-dir", dir.string()});
    REQUIRE(r.code == 0);
    REQUIRE(r.out == "n=2 N=? OPT=13.163020913949783 eps=2.995732273553991 "
                     "|G|=3 |M|=2 truncated=0\n");
    REQUIRE(slurp(dir / "credible.tsv") == kD1Credible);
}

TEST_CASE("csv datasets give the same results", "[cli]") {
    Scratch s("csv");
    const auto d1 = s.file("d1.csv", kD1Csv).string();
    const auto dir = s.path("out");
    const auto r = cli({"solve", "--in", d1, "--bf", "20", "--out-dir", dir.string()});
    REQUIRE(r.code == 0);
    REQUIRE_THAT(r.out, ContainsSubstring("n=2 N=8 OPT=13.163020913949783"));
    REQUIRE(slurp(dir / "credible.tsv") == kD1Credible);
}

TEST_CASE("worker threads do not change any output", "[cli]") {
    Scratch s("jobs");
    std::string text = "V0 V1 V2 V3\n2 2 2 2\n";
    for (int r = 0; r < 24; ++r) {
        const int a = r & 1, b = (r >> 1) & 1;
        const int c = (r % 7 == 0) ? 1 - (a ^ b) : (a ^ b);
        const int e = (r >> 2) & 1;
        text += std::to_string(a) + " " + std::to_string(b) + " " + std::to_string(c) + " " +
                std::to_string(e) + "\n";
    }
    const auto data = s.file("d4.txt", text).string();

    const auto d_serial = s.path("serial");
    const auto d_parallel = s.path("parallel");
    const auto r1 = cli({"solve", "--in", data, "--bf", "10", "--out-dir", d_serial.string()});
    const auto r4 = cli({"solve", "--in", data, "--bf", "10", "--jobs", "4", "--out-dir",
                         d_parallel.string()});
    REQUIRE(r1.code == 0);
    REQUIRE(r4.code == 0);
    REQUIRE(r1.out == r4.out);
    for (const char* name : {"credible.tsv", "mec.csv", "arcs.csv"})
        REQUIRE(slurp(d_serial / name) == slurp(d_parallel / name));
}

TEST_CASE("report emits the deviation curve with reference rows", "[cli]") {
    Scratch s("report");
    const auto d1 = s.file("d1.txt", kD1Native).string();

    const std::string expected =
        "kind,k_or_bf,value\n"
        "data,1,0\n"
        "data,2,0\n"
        "data,3,0.006775516689177863\n"
        "ref,3,1.0986122886681098\n"
        "ref,20,2.995732273553991\n"
        "ref,150,5.0106352940962555\n";

    const auto to_stdout =
        cli({"report", "--in", d1, "--bf", "3", "--sweep", "3,20,150"});
    REQUIRE(to_stdout.code == 0);
    REQUIRE(to_stdout.out == expected);

    const auto csv = s.path("curve.csv");
    const auto to_file = cli({"report", "--in", d1, "--bf", "3", "--sweep", "3,20,150",
                              "--out", csv.string()});
    REQUIRE(to_file.code == 0);
    REQUIRE(to_file.out.empty());
    REQUIRE(slurp(csv) == expected);

    // A sweep alone fixes the window at its largest reference value.
    const auto sweep_only = cli({"report", "--in", d1, "--sweep", "20"});
    REQUIRE(sweep_only.code == 0);
    REQUIRE_THAT(sweep_only.out, ContainsSubstring("data,3,0.006775516689177863\n"));

    REQUIRE(cli({"report", "--in", d1}).code == 2);  // no window at all
    REQUIRE(cli({"report", "--in", d1, "--sweep", "0.5"}).code == 2);
}
