#include <doctest.h>

#include <set>

#include <json.hpp>

#include "dicov/report.hpp"
#include "test_util.hpp"

using nlohmann::json;

namespace {

std::string sh_quote(const std::string& s) { return "'" + s + "'"; }

std::string analyze_cmd(const std::string& extra) {
    return sh_quote(testutil::cli_path()) + " analyze --fixture " +
           sh_quote(testutil::data_file("loopsum.dbgfx")) + " --source-root " +
           sh_quote(testutil::data_dir()) + " " + extra;
}

} // namespace

TEST_CASE("cli: analyze reproduces the golden loopsum ratios") {
    testutil::TempDir tmp;
    std::string out = tmp.file("report.json").string();
    auto rr = testutil::run_command(analyze_cmd("--out " + sh_quote(out)));
    REQUIRE(rr.exit_code == 0);
    CHECK(rr.err.empty());

    json j = json::parse(testutil::read_file(out));
    REQUIRE(j["variables"].size() == 4);
    std::map<std::string, std::pair<std::int64_t, std::int64_t>> got;
    for (const auto& v : j["variables"])
        got[v["name"]] = {v["num"]["n"].get<std::int64_t>() * v["den"]["d"].get<std::int64_t>(),
                          v["num"]["d"].get<std::int64_t>() * v["den"]["n"].get<std::int64_t>()};
    CHECK(got["p"] == std::make_pair<std::int64_t, std::int64_t>(5, 6));
    CHECK(got["x"] == std::make_pair<std::int64_t, std::int64_t>(4, 4));
    CHECK(got["y"] == std::make_pair<std::int64_t, std::int64_t>(4, 5));
    CHECK(got["i"] == std::make_pair<std::int64_t, std::int64_t>(2, 2));
    CHECK(j["excluded"].empty());
    CHECK(j["aggregate"]["variables"] == 4);
}

TEST_CASE("cli: repeated runs are byte-identical") {
    testutil::TempDir tmp;
    std::string out1 = tmp.file("r1.json").string();
    std::string out2 = tmp.file("r2.json").string();
    REQUIRE(testutil::run_command(analyze_cmd("--out " + sh_quote(out1))).exit_code == 0);
    REQUIRE(testutil::run_command(analyze_cmd("--out " + sh_quote(out2))).exit_code == 0);
    CHECK(testutil::read_file(out1) == testutil::read_file(out2));
}

TEST_CASE("cli: csv output contains the sorted curve") {
    auto rr = testutil::run_command(analyze_cmd("--format csv"));
    REQUIRE(rr.exit_code == 0);
    CHECK(rr.out.find("index,ratio\n") == 0);
    CHECK(rr.out.find("0,0.800000\n") != std::string::npos);
    CHECK(rr.out.find("1,0.833333\n") != std::string::npos);

    auto line_rr = testutil::run_command(analyze_cmd("--format csv --mode line"));
    REQUIRE(line_rr.exit_code == 0);
    CHECK(line_rr.out.find("file,line,numerator,denominator\n") == 0);
    CHECK(line_rr.out.find(",5,3.000000,3\n") != std::string::npos);
    CHECK(line_rr.out.find(",10,1.000000,3\n") != std::string::npos);
}

TEST_CASE("cli: naive byte metric rides along when requested") {
    auto rr = testutil::run_command(analyze_cmd("--metric accurate,naive-bytes"));
    REQUIRE(rr.exit_code == 0);
    json j = json::parse(rr.out);
    for (const auto& v : j["variables"]) {
        REQUIRE(v.contains("naive_bytes"));
        if (v["name"] == "p") {
            CHECK(v["naive_bytes"]["num"]["n"] == 96); // 0x60 of 0x80 scope bytes
            CHECK(v["naive_bytes"]["den"]["n"] == 128);
            CHECK(v["naive_bytes"]["ratio"] == 0.75);
        }
    }
    // Default runs carry only the accurate metric.
    auto plain = testutil::run_command(analyze_cmd(""));
    json pj = json::parse(plain.out);
    for (const auto& v : pj["variables"])
        CHECK_FALSE(v.contains("naive_bytes"));
}

TEST_CASE("cli: trace flag filters every denominator") {
    auto rr = testutil::run_command(
        analyze_cmd("--trace " + sh_quote(testutil::data_file("loopsum_trace_subset.txt"))));
    REQUIRE(rr.exit_code == 0);
    json j = json::parse(rr.out);
    CHECK(j["meta"]["filter"] == "trace");
    std::set<int> traced = {1, 4, 5, 6};
    for (const auto& l : j["lines"])
        CHECK(traced.count(l["line"].get<int>()) == 1);
    for (const auto& v : j["variables"]) {
        if (v["name"] == "x") {
            CHECK(v["den"]["n"] == 2); // {5,6} of {5,6,8,10} executed
            CHECK(v["num"]["n"] == 2);
        }
    }
}

TEST_CASE("cli: variables with no executed coverable line move to excluded") {
    auto rr = testutil::run_command(
        analyze_cmd("--trace " + sh_quote(testutil::data_file("loopsum_trace_tiny.txt"))));
    REQUIRE(rr.exit_code == 0);
    json j = json::parse(rr.out);
    // Only lines 1 and 4 executed: p keeps {1,4}, y keeps {4}; x and i have
    // no executed coverable line left and drop out of the aggregates.
    std::set<std::string> reported, excluded;
    for (const auto& v : j["variables"])
        reported.insert(v["name"].get<std::string>());
    for (const auto& e : j["excluded"]) {
        excluded.insert(e["name"].get<std::string>());
        CHECK(e["reason"] == "undefined-coverage");
    }
    CHECK(reported == std::set<std::string>{"p", "y"});
    CHECK(excluded == std::set<std::string>{"i", "x"});
}

TEST_CASE("cli: missing inputs and bad flags use distinct exit codes") {
    auto missing = testutil::run_command(sh_quote(testutil::cli_path()) +
                                         " analyze --fixture /nonexistent/m.dbgfx");
    CHECK(missing.exit_code == 2);
    CHECK(missing.err.find("error") != std::string::npos);

    auto unknown = testutil::run_command(analyze_cmd("--frobnicate"));
    CHECK(unknown.exit_code == 1);

    auto neither = testutil::run_command(sh_quote(testutil::cli_path()) + " analyze");
    CHECK(neither.exit_code == 1);

    auto both = testutil::run_command(sh_quote(testutil::cli_path()) + " analyze --binary a --fixture b");
    CHECK(both.exit_code == 1);

    auto bad_mode = testutil::run_command(analyze_cmd("--mode sideways"));
    CHECK(bad_mode.exit_code == 1);

    auto bad_metric = testutil::run_command(analyze_cmd("--metric bogus"));
    CHECK(bad_metric.exit_code == 1);
}

TEST_CASE("cli: --help enumerates every flag") {
    auto rr = testutil::run_command(sh_quote(testutil::cli_path()) + " analyze --help");
    CHECK(rr.exit_code == 0);
    for (const char* flag :
         {"--binary", "--fixture", "--source-root", "--mode", "--metric", "--trace",
          "--knowledge-extension", "--strict", "--format", "--out", "--meta-timestamps"}) {
        CAPTURE(flag);
        CHECK(rr.out.find(flag) != std::string::npos);
    }
    auto top = testutil::run_command(sh_quote(testutil::cli_path()) + " --help");
    CHECK(top.exit_code == 0);
    CHECK(top.out.find("analyze") != std::string::npos);
    CHECK(top.out.find("compare") != std::string::npos);

    auto version = testutil::run_command(sh_quote(testutil::cli_path()) + " --version");
    CHECK(version.exit_code == 0);
    CHECK(version.out.find(dicov::kToolVersion) != std::string::npos);
}

TEST_CASE("cli: missing source files warn and exclude, strict fails") {
    testutil::TempDir tmp; // empty dir: loopsum.c not resolvable
    std::string cmd = sh_quote(testutil::cli_path()) + " analyze --fixture " +
                      sh_quote(testutil::data_file("loopsum.dbgfx")) + " --source-root " +
                      sh_quote(tmp.path().string());
    auto rr = testutil::run_command(cmd);
    CHECK(rr.exit_code == 0);
    CHECK(rr.err.find("warning") != std::string::npos);
    json j = json::parse(rr.out);
    CHECK(j["variables"].empty());
    CHECK(j["excluded"].size() == 4);
    for (const auto& e : j["excluded"])
        CHECK(e["reason"] == "source-missing");

    auto strict = testutil::run_command(cmd + " --strict");
    CHECK(strict.exit_code == 2);
}

TEST_CASE("cli: compare workflow") {
    testutil::TempDir tmp;
    std::string before = tmp.file("before.json").string();
    std::string after = tmp.file("after.json").string();
    REQUIRE(testutil::run_command(
                sh_quote(testutil::cli_path()) + " analyze --fixture " +
                sh_quote(testutil::data_file("loopsum_before.dbgfx")) + " --source-root " +
                sh_quote(testutil::data_dir()) + " --out " + sh_quote(before)).exit_code == 0);
    REQUIRE(testutil::run_command(analyze_cmd("--out " + sh_quote(after))).exit_code == 0);

    auto same = testutil::run_command(sh_quote(testutil::cli_path()) + " compare --before " +
                                      sh_quote(after) + " --after " + sh_quote(after));
    REQUIRE(same.exit_code == 0);
    json sj = json::parse(same.out);
    CHECK(sj["summary"]["improved"] == 0);
    CHECK(sj["summary"]["regressed"] == 0);

    auto fixed = testutil::run_command(sh_quote(testutil::cli_path()) + " compare --before " +
                                       sh_quote(before) + " --after " + sh_quote(after));
    REQUIRE(fixed.exit_code == 0);
    json fj = json::parse(fixed.out);
    CHECK(fj["summary"]["improved"].get<int>() >= 1);
    CHECK(fj["summary"]["regressed"] == 0);

    testutil::write_file(tmp.file("broken.json"), "{ nope");
    auto broken = testutil::run_command(sh_quote(testutil::cli_path()) + " compare --before " +
                                        sh_quote(tmp.file("broken.json").string()) + " --after " +
                                        sh_quote(after));
    CHECK(broken.exit_code == 2);
    CHECK(broken.err.find("error") != std::string::npos);
}

TEST_CASE("cli: dump canonicalizes fixtures") {
    auto rr = testutil::run_command(sh_quote(testutil::cli_path()) + " dump --fixture " +
                                    sh_quote(testutil::data_file("loopsum.dbgfx")));
    REQUIRE(rr.exit_code == 0);
    CHECK(rr.out == testutil::read_file(testutil::data_file("loopsum.dbgfx")));

    auto neither = testutil::run_command(sh_quote(testutil::cli_path()) + " dump");
    CHECK(neither.exit_code == 1);
}

TEST_CASE("cli: facts emits the source baseline as JSON") {
    auto rr = testutil::run_command(sh_quote(testutil::cli_path()) + " facts --source " +
                                    sh_quote(testutil::data_file("loopsum.c")));
    REQUIRE(rr.exit_code == 0);
    json j = json::parse(rr.out);
    REQUIRE(j["variables"].size() == 4);
    std::map<std::string, json> by_name;
    for (const auto& v : j["variables"])
        by_name[v["name"]] = v;
    CHECK(by_name["p"]["scope_lines"] == json::array({1, 4, 5, 6, 8, 10}));
    CHECK(by_name["x"]["defined_lines"] == json::array({5, 6, 8, 10}));
    CHECK(by_name["x"]["first_def_line"] == 5);
    CHECK(by_name["i"]["scope_lines"] == json::array({6, 8}));
    CHECK(by_name["y"]["function"] == "f");

    auto bad = testutil::run_command(sh_quote(testutil::cli_path()) +
                                     " facts --source /nonexistent/x.c");
    CHECK(bad.exit_code == 2);
}

TEST_CASE("cli: timestamps appear only on request") {
    auto plain = testutil::run_command(analyze_cmd(""));
    REQUIRE(plain.exit_code == 0);
    CHECK(plain.out.find("timestamp") == std::string::npos);

    auto stamped = testutil::run_command(analyze_cmd("--meta-timestamps"));
    REQUIRE(stamped.exit_code == 0);
    json j = json::parse(stamped.out);
    CHECK(j["meta"].contains("timestamp"));
}

TEST_CASE("cli: knowledge extension raises y to full coverage") {
    auto rr = testutil::run_command(analyze_cmd("--knowledge-extension"));
    REQUIRE(rr.exit_code == 0);
    json j = json::parse(rr.out);
    CHECK(j["meta"]["knowledge_extension"] == true);
    for (const auto& v : j["variables"]) {
        if (v["name"] == "y") {
            // B={4,5,6,8} latches over {10} as well.
            CHECK(v["num"]["n"] == 5);
            CHECK(v["den"]["n"] == 5);
        }
        if (v["name"] == "p") {
            CHECK(v["num"]["n"] == 6);
            CHECK(v["den"]["n"] == 6);
        }
    }
}
