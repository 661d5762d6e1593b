#pragma once

#include <string>
#include <vector>

#include "dicov/report.hpp"

namespace dicov {

// End-to-end configuration of one `analyze` run. Exactly one of binary_path
// and fixture_path must be set.
struct AnalysisConfig {
    std::string binary_path;
    std::string fixture_path;
    std::string source_root = ".";
    std::string mode = "variable"; // variable | line
    std::vector<std::string> metrics = {"accurate"}; // accurate | unshrunk | naive-bytes
    std::string trace_path;
    bool knowledge_extension = false;
    bool strict = false;
    std::string format = "json"; // json | csv
    std::string out_path;        // empty writes to stdout
    bool meta_timestamps = false;
};

struct AnalysisResult {
    CoverageReport report;
    std::vector<std::string> warnings;
};

// Deterministic: identical inputs and config produce identical report bytes
// (unless meta_timestamps opts into a timestamp).
AnalysisResult run_analyze(const AnalysisConfig& config);

std::string render_report(const CoverageReport& report, const std::string& format);

Comparison run_compare(const std::string& before_path, const std::string& after_path);

} // namespace dicov
