#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dicov/rational.hpp"

namespace dicov {

inline constexpr const char* kToolVersion = "0.1.0";

struct DeclRef {
    std::string file;
    std::uint32_t line = 0;

    friend auto operator<=>(const DeclRef&, const DeclRef&) = default;
};

struct MetricValue {
    Rational numerator;
    Rational denominator;
    double ratio() const { return (numerator / denominator).to_double(); }

    friend bool operator==(const MetricValue&, const MetricValue&) = default;
};

struct VariableRecord {
    std::string function;
    std::string name;
    std::optional<DeclRef> decl;
    Rational numerator;
    Rational denominator; // whole; > 0 for included records
    std::uint32_t instance_count = 1;
    std::optional<MetricValue> unshrunk;
    std::optional<MetricValue> naive_bytes;
    std::optional<std::string> state; // life-cycle name when supplied upstream

    Rational ratio() const { return numerator / denominator; }
};

struct LineRecord {
    std::string file;
    std::uint32_t line = 0;
    Rational numerator;
    Rational denominator;
};

struct ExcludedRecord {
    std::string function;
    std::string name;
    std::optional<DeclRef> decl;
    std::string reason;
};

struct Aggregate {
    std::uint64_t variable_count = 0;
    Rational mean_ratio;
    std::uint64_t fully_covered = 0;
    std::uint64_t zero_covered = 0;
};

struct ReportMeta {
    std::string version = kToolVersion;
    std::string input_path;
    std::string input_hash;
    std::string source_root;
    std::string mode = "variable";   // variable | line
    std::string filter = "static";   // static | trace
    bool knowledge_extension = false;
    std::vector<std::string> metrics; // subset of accurate, unshrunk, naive-bytes
    std::optional<std::string> timestamp; // omitted unless explicitly requested
};

struct CoverageReport {
    ReportMeta meta;
    std::vector<VariableRecord> variables; // sorted: ratio asc, function, name
    std::vector<LineRecord> lines;
    std::vector<ExcludedRecord> excluded;
    Aggregate aggregate;
};

// Recomputes the aggregate block and sorts records canonically.
void finalize_report(CoverageReport& report);

// Canonical JSON: fixed key order, rationals as {"n":..,"d":..}, ratios at
// fixed 6 decimals. Emit -> parse -> emit is byte-identical.
std::string report_to_json(const CoverageReport& report);

// Parses and revalidates (aggregate recomputable, canonical record order).
CoverageReport report_from_json(const std::string& text, const std::string& origin);

// `index,ratio` rows of the sorted coverage curve, or
// `file,line,numerator,denominator` rows in line mode.
std::string report_to_csv(const CoverageReport& report);

// Ratios in non-decreasing order with 0-based indexes; excluded variables
// are already absent from the report's variable records.
std::vector<std::pair<std::size_t, double>> sorted_curve(const CoverageReport& report);

// Sample Pearson correlation. Exactly affine inputs return exactly +/-1;
// zero variance or mismatched lengths are errors.
double pearson(std::span<const double> xs, std::span<const double> ys);

struct VariableDelta {
    std::string function;
    std::string name;
    std::optional<DeclRef> decl;
    Rational before;
    Rational after;
    Rational delta;
};

struct Comparison {
    std::string before_path, before_hash;
    std::string after_path, after_hash;
    std::string mode;
    std::vector<VariableDelta> matched;
    std::vector<std::string> only_before; // "function/name[/declline]"
    std::vector<std::string> only_after;
    std::uint64_t improved = 0, regressed = 0, unchanged = 0;
    std::optional<double> correlation; // absent when undefined
};

Comparison compare_reports(const CoverageReport& before, const CoverageReport& after);
std::string comparison_to_json(const Comparison& cmp);

// FNV-1a over file bytes; identifies report inputs.
std::string hash_file(const std::string& path);

} // namespace dicov
