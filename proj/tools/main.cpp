#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "dicov/analyze.hpp"
#include "dicov/error.hpp"
#include "dicov/model.hpp"
#include "dicov/report.hpp"
#include "dicov/source.hpp"

namespace {

// Exit codes: 0 success, 1 usage error, 2 input/parse error, 3 internal
// invariant violation.
int exit_code_for(const dicov::Error& e) {
    switch (e.kind()) {
    case dicov::Error::Kind::Usage:
        return 1;
    case dicov::Error::Kind::Internal:
        return 3;
    default:
        return 2;
    }
}

void write_output(const std::string& out_path, const std::string& data) {
    if (out_path.empty()) {
        std::cout << data;
        return;
    }
    std::ofstream out(out_path, std::ios::binary);
    if (!out)
        throw dicov::Error::io("cannot open output file: " + out_path);
    out << data;
    if (!out.good())
        throw dicov::Error::io("error writing output file: " + out_path);
}

std::vector<std::string> split_csv_list(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == ',') {
            if (!cur.empty())
                out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!cur.empty())
        out.push_back(cur);
    return out;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"dicov: measures how completely debugging information covers local variables"};
    app.set_version_flag("--version", dicov::kToolVersion);
    app.require_subcommand(1);

    // analyze
    auto* analyze = app.add_subcommand(
        "analyze", "Compute per-variable and per-line coverage for one binary or fixture");
    dicov::AnalysisConfig config;
    std::string metric_list = "accurate";
    analyze->add_option("--binary", config.binary_path,
                        "Object file or executable with debugging information");
    analyze->add_option("--fixture", config.fixture_path, "Text fixture (.dbgfx) input");
    analyze->add_option("--source-root", config.source_root,
                        "Directory to resolve source files against (default: .)");
    analyze->add_option("--mode", config.mode, "Report mode: variable or line (default: variable)");
    analyze->add_option("--metric", metric_list,
                        "Comma list from: accurate, unshrunk, naive-bytes (default: accurate)");
    analyze->add_option("--trace", config.trace_path,
                        "Restrict all line sets to executed lines from this path:line trace file");
    analyze->add_flag("--knowledge-extension", config.knowledge_extension,
                      "Extend each variable's last described value to the end of its scope");
    analyze->add_flag("--strict", config.strict, "Fail instead of warning on partial analysis");
    analyze->add_option("--format", config.format, "Output format: json or csv (default: json)");
    analyze->add_option("--out", config.out_path, "Output path (default: stdout)");
    analyze->add_flag("--meta-timestamps", config.meta_timestamps,
                      "Include a timestamp in report metadata (breaks byte-for-byte determinism)");

    // compare
    auto* compare = app.add_subcommand("compare", "Diff two analyze reports variable by variable");
    std::string before_path, after_path, compare_out;
    compare->add_option("--before", before_path, "Baseline report (JSON)")->required();
    compare->add_option("--after", after_path, "Report to compare against the baseline (JSON)")
        ->required();
    compare->add_option("--out", compare_out, "Output path (default: stdout)");

    // dump
    auto* dump = app.add_subcommand(
        "dump", "Write the neutral debug model of a binary or fixture as canonical fixture text");
    std::string dump_binary, dump_fixture, dump_out;
    dump->add_option("--binary", dump_binary, "Object file or executable to read");
    dump->add_option("--fixture", dump_fixture, "Fixture to reload and canonicalize");
    dump->add_option("--out", dump_out, "Output path (default: stdout)");

    // facts
    auto* facts = app.add_subcommand(
        "facts", "Emit the source-analysis baseline (per-variable scope/defined lines) as JSON");
    std::string facts_source, facts_out;
    facts->add_option("--source", facts_source, "C source file to analyze")->required();
    facts->add_option("--out", facts_out, "Output path (default: stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) // --help
            return app.exit(e);
        app.exit(e);
        return 1;
    }

    try {
        if (analyze->parsed()) {
            config.metrics = split_csv_list(metric_list);
            dicov::AnalysisResult result = dicov::run_analyze(config);
            for (const auto& w : result.warnings)
                std::cerr << "warning: " << w << "\n";
            write_output(config.out_path, dicov::render_report(result.report, config.format));
        } else if (compare->parsed()) {
            dicov::Comparison cmp = dicov::run_compare(before_path, after_path);
            write_output(compare_out, dicov::comparison_to_json(cmp));
        } else if (dump->parsed()) {
            if (dump_binary.empty() == dump_fixture.empty())
                throw dicov::Error::usage("exactly one of --binary and --fixture must be given");
            dicov::NeutralDebugModel model = dump_binary.empty()
                                                 ? dicov::load_fixture(dump_fixture)
                                                 : dicov::load_binary(dump_binary);
            write_output(dump_out, dicov::serialize_fixture(model));
        } else if (facts->parsed()) {
            dicov::SourceAst ast = dicov::parse_source(facts_source);
            write_output(facts_out, dicov::facts_to_json(ast, dicov::variable_source_facts(ast)));
        }
    } catch (const dicov::Error& e) {
        std::cerr << "dicov: error: " << e.what() << "\n";
        return exit_code_for(e);
    } catch (const std::exception& e) {
        std::cerr << "dicov: internal error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
