#include "dicov/analyze.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "dicov/coverage.hpp"
#include "dicov/error.hpp"
#include "dicov/model.hpp"
#include "dicov/source.hpp"
#include "dicov/trace.hpp"

namespace dicov {
namespace {

namespace fs = std::filesystem;

struct ParsedSource {
    bool ok = false;
    std::string failure;
    std::set<std::uint32_t> computational;
    std::vector<VariableSourceFacts> facts;
    std::vector<FunctionSpan> spans;
};

const std::vector<std::string> kKnownMetrics = {"accurate", "unshrunk", "naive-bytes"};

void check_config(const AnalysisConfig& c) {
    if (c.binary_path.empty() == c.fixture_path.empty())
        throw Error::usage("exactly one of --binary and --fixture must be given");
    if (c.mode != "variable" && c.mode != "line")
        throw Error::usage("mode must be 'variable' or 'line', got '" + c.mode + "'");
    if (c.format != "json" && c.format != "csv")
        throw Error::usage("format must be 'json' or 'csv', got '" + c.format + "'");
    if (c.metrics.empty())
        throw Error::usage("at least one metric is required");
    for (const auto& m : c.metrics)
        if (std::find(kKnownMetrics.begin(), kKnownMetrics.end(), m) == kKnownMetrics.end())
            throw Error::usage("unknown metric '" + m + "' (known: accurate, unshrunk, naive-bytes)");
}

std::vector<std::string> canonical_metrics(const std::vector<std::string>& metrics) {
    std::vector<std::string> out;
    for (const auto& known : kKnownMetrics)
        if (std::find(metrics.begin(), metrics.end(), known) != metrics.end())
            out.push_back(known);
    return out;
}

// Locates a model path on disk: absolute paths as-is, then relative to the
// source root, then by basename under the source root.
std::optional<fs::path> resolve_source(const std::string& model_path,
                                       const std::string& source_root) {
    fs::path p(model_path);
    std::error_code ec;
    if (p.is_absolute() && fs::is_regular_file(p, ec))
        return p;
    fs::path rooted = fs::path(source_root) / p;
    if (fs::is_regular_file(rooted, ec))
        return rooted;
    fs::path by_name = fs::path(source_root) / p.filename();
    if (fs::is_regular_file(by_name, ec))
        return by_name;
    return std::nullopt;
}

std::string timestamp_now() {
    auto now = std::chrono::system_clock::now();
    std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

struct GroupKey {
    std::string name;
    std::optional<SourceLineKey> decl;

    friend auto operator<=>(const GroupKey&, const GroupKey&) = default;
};

} // namespace

AnalysisResult run_analyze(const AnalysisConfig& config) {
    check_config(config);
    AnalysisResult result;
    CoverageReport& report = result.report;

    const std::string& input = config.binary_path.empty() ? config.fixture_path
                                                          : config.binary_path;
    NeutralDebugModel model =
        config.binary_path.empty() ? load_fixture(input) : load_binary(input);

    report.meta.input_path = input;
    report.meta.input_hash = hash_file(input);
    report.meta.source_root = config.source_root;
    report.meta.mode = config.mode;
    report.meta.filter = config.trace_path.empty() ? "static" : "trace";
    report.meta.knowledge_extension = config.knowledge_extension;
    report.meta.metrics = canonical_metrics(config.metrics);
    if (config.meta_timestamps)
        report.meta.timestamp = timestamp_now();

    bool want_unshrunk = std::find(report.meta.metrics.begin(), report.meta.metrics.end(),
                                   "unshrunk") != report.meta.metrics.end();
    bool want_bytes = std::find(report.meta.metrics.begin(), report.meta.metrics.end(),
                                "naive-bytes") != report.meta.metrics.end();

    // Parse every source file the model references.
    std::set<FileId> referenced;
    for (const auto& row : model.line_rows)
        referenced.insert(row.line_key.file);
    for (const auto& fn : model.functions)
        for (const auto& var : fn.variables)
            if (var.decl)
                referenced.insert(var.decl->file);

    std::map<FileId, ParsedSource> sources;
    for (FileId id : referenced) {
        auto it = model.files.find(id);
        if (it == model.files.end())
            continue; // validate_model already rejected dangling ids
        ParsedSource parsed;
        auto path = resolve_source(it->second, config.source_root);
        if (!path) {
            parsed.failure = "source-missing";
            result.warnings.push_back("cannot resolve source file '" + it->second +
                                      "' under '" + config.source_root + "'");
        } else {
            try {
                SourceAst ast = parse_source(*path);
                parsed.computational = computational_lines(ast);
                parsed.facts = variable_source_facts(ast);
                parsed.spans = function_spans(ast);
                parsed.ok = true;
            } catch (const Error& e) {
                parsed.failure = "source-unparsable";
                result.warnings.push_back(std::string("cannot analyze source: ") + e.what());
            }
        }
        sources.emplace(id, std::move(parsed));
    }

    std::optional<std::set<SourceLineKey>> executed;
    if (!config.trace_path.empty())
        executed = load_trace(config.trace_path).resolve(model.files);

    // Primary file per function: the file of its lowest-address line row
    // (rows are sorted by address, so each range is a binary-searched slice).
    auto primary_file = [&](const FunctionInfo& fn) -> std::optional<FileId> {
        std::optional<FileId> best;
        std::uint64_t best_addr = UINT64_MAX;
        for (const auto& r : fn.all_ranges()) {
            auto it = std::lower_bound(model.line_rows.begin(), model.line_rows.end(), r.low,
                                       [](const LineTableRow& row, std::uint64_t addr) {
                                           return row.address < addr;
                                       });
            if (it != model.line_rows.end() && it->address < r.high && it->address < best_addr) {
                best = it->line_key.file;
                best_addr = it->address;
            }
        }
        return best;
    };

    std::map<SourceLineKey, std::pair<Rational, std::int64_t>> line_tally;
    std::vector<VariableFacts> all_facts;

    auto exclude = [&](const FunctionInfo& fn, const std::string& name,
                       std::optional<SourceLineKey> decl, const std::string& reason) {
        ExcludedRecord e;
        e.function = fn.name;
        e.name = name;
        if (decl) {
            auto fit = model.files.find(decl->file);
            e.decl = DeclRef{fit == model.files.end() ? "" : fit->second, decl->line};
        }
        e.reason = reason;
        report.excluded.push_back(std::move(e));
    };

    // Shared by binary-described variables, by source variables the binary
    // omitted, and by dissolved functions (the source analysis owns the
    // denominator, so none of them may vanish from the aggregates).
    auto measure = [&](const FunctionInfo& fn, const std::string& name,
                       std::optional<SourceLineKey> decl, FileId file,
                       const VariableSourceFacts& src_var,
                       const std::vector<const VariableEntry*>& instances) {
        std::set<SourceLineKey> scope, defined;
        for (std::uint32_t l : src_var.scope_lines)
            scope.insert({file, l});
        for (std::uint32_t l : src_var.defined_lines)
            defined.insert({file, l});

        std::set<SourceLineKey> coverable;
        std::set_intersection(scope.begin(), scope.end(), defined.begin(), defined.end(),
                              std::inserter(coverable, coverable.begin()));
        auto raw_described =
            describe_lines(model, fn, std::span<const VariableEntry* const>(instances),
                           coverable);

        VariableFacts facts = VariableFacts::make(
            fn.name, name, decl, std::move(scope), std::move(defined), raw_described,
            static_cast<std::uint32_t>(fn.instances.size()));
        if (executed)
            facts = apply_filter(facts, *executed);
        if (config.knowledge_extension)
            facts.described = knowledge_extend(facts.described, facts.coverable());

        CoverageValue accurate =
            coverage_ratio(facts.described, facts.scope_lines, facts.defined_lines);
        if (!accurate.defined()) {
            exclude(fn, name, decl, "undefined-coverage");
            return;
        }

        VariableRecord rec;
        rec.function = fn.name;
        rec.name = name;
        if (decl) {
            auto fit = model.files.find(decl->file);
            rec.decl = DeclRef{fit == model.files.end() ? "" : fit->second, decl->line};
        }
        rec.numerator = accurate.numerator;
        rec.denominator = accurate.denominator;
        rec.instance_count = std::max<std::uint32_t>(
            1, static_cast<std::uint32_t>(fn.instances.size()));

        if (want_unshrunk) {
            auto raw_set = described_line_set(
                model, fn, std::span<const VariableEntry* const>(instances));
            if (executed) {
                std::set<SourceLineKey> filtered;
                std::set_intersection(raw_set.begin(), raw_set.end(), executed->begin(),
                                      executed->end(),
                                      std::inserter(filtered, filtered.begin()));
                raw_set = std::move(filtered);
            }
            CoverageValue u = unshrunk_line_coverage(raw_set, facts.scope_lines);
            if (u.defined())
                rec.unshrunk = MetricValue{u.numerator, u.denominator};
        }
        if (want_bytes && !instances.empty()) {
            std::vector<DescriptionRange> descs;
            std::vector<AddressRange> scopes;
            for (const auto* v : instances) {
                descs.insert(descs.end(), v->description_ranges.begin(),
                             v->description_ranges.end());
                scopes.insert(scopes.end(), v->scope_ranges.begin(), v->scope_ranges.end());
            }
            CoverageValue b = naive_byte_coverage(descs, scopes);
            if (b.defined())
                rec.naive_bytes = MetricValue{b.numerator, b.denominator};
        }

        for (const auto& line : facts.coverable()) {
            auto& t = line_tally[line];
            t.second += 1;
            auto dit = facts.described.find(line);
            if (dit != facts.described.end())
                t.first += dit->second;
        }
        all_facts.push_back(std::move(facts));
        report.variables.push_back(std::move(rec));
    };

    auto parsed_source = [&](FileId file) -> const ParsedSource* {
        auto src_it = sources.find(file);
        if (src_it == sources.end()) {
            // File never appears in rows or the referenced set: resolve lazily.
            ParsedSource parsed;
            auto mit = model.files.find(file);
            auto path = mit == model.files.end()
                            ? std::nullopt
                            : resolve_source(mit->second, config.source_root);
            if (path) {
                try {
                    SourceAst ast = parse_source(*path);
                    parsed.computational = computational_lines(ast);
                    parsed.facts = variable_source_facts(ast);
                    parsed.spans = function_spans(ast);
                    parsed.ok = true;
                } catch (const Error&) {
                    parsed.failure = "source-unparsable";
                }
            } else {
                parsed.failure = "source-missing";
            }
            src_it = sources.emplace(file, std::move(parsed)).first;
        }
        return &src_it->second;
    };

    for (const auto& fn : model.functions) {
        std::map<GroupKey, std::vector<const VariableEntry*>> groups;
        for (const auto& var : fn.variables)
            groups[{var.name, var.decl}].push_back(&var);
        std::optional<FileId> fn_file = primary_file(fn);
        std::set<const VariableSourceFacts*> consumed;

        for (const auto& [key, instances] : groups) {
            FileId file = key.decl ? key.decl->file : (fn_file ? *fn_file : 0);
            if (file == 0) {
                exclude(fn, key.name, key.decl, "source-missing");
                continue;
            }
            const ParsedSource& src = *parsed_source(file);
            if (!src.ok) {
                exclude(fn, key.name, key.decl, src.failure);
                continue;
            }

            // Match the source-side variable: decl line first, then unique name.
            const VariableSourceFacts* matched = nullptr;
            std::vector<const VariableSourceFacts*> by_name;
            for (const auto& f : src.facts)
                if (f.function == fn.name && f.name == key.name)
                    by_name.push_back(&f);
            if (key.decl) {
                for (const auto* f : by_name)
                    if (f->decl_line == key.decl->line) {
                        matched = f;
                        break;
                    }
            }
            if (!matched && by_name.size() == 1)
                matched = by_name.front();
            if (!matched && by_name.size() > 1) {
                // Contested name: leave all candidates out of the sweep below.
                for (const auto* f : by_name)
                    consumed.insert(f);
                exclude(fn, key.name, key.decl, "ambiguous-source-variable");
                continue;
            }
            if (!matched) {
                exclude(fn, key.name, key.decl, "source-variable-missing");
                continue;
            }
            consumed.insert(matched);
            measure(fn, key.name, key.decl, file, *matched, instances);
        }

        // Source variables of this function with no counterpart anywhere in
        // the debug info: coverable but entirely undescribed.
        if (fn_file) {
            const ParsedSource& src = *parsed_source(*fn_file);
            if (src.ok) {
                for (const auto& f : src.facts) {
                    if (f.function != fn.name || consumed.count(&f))
                        continue;
                    measure(fn, f.name, SourceLineKey{*fn_file, f.decl_line}, *fn_file, f, {});
                }
            }
        }
    }

    // Functions the optimiser dissolved without leaving any realised
    // instance or inline record: when their source lines still appear in the
    // line table, those positions are reachable in the object program yet no
    // debug info can even name the variables there, so each variable scores
    // zero rather than disappearing from the aggregates.
    std::map<FileId, std::set<std::uint32_t>> realised_lines;
    for (const auto& row : model.line_rows)
        realised_lines[row.line_key.file].insert(row.line_key.line);
    for (const auto& [file, src] : sources) {
        if (!src.ok)
            continue;
        auto rl = realised_lines.find(file);
        if (rl == realised_lines.end())
            continue;
        for (const auto& span : src.spans) {
            const FunctionInfo* existing = model.function(span.name);
            if (existing && !existing->instances.empty())
                continue;
            auto it = rl->second.lower_bound(span.start_line);
            if (it == rl->second.end() || *it > span.end_line)
                continue; // no evidence this function's body was realised
            FunctionInfo stub;
            stub.name = span.name;
            for (const auto& f : src.facts) {
                if (f.function != span.name)
                    continue;
                measure(stub, f.name, SourceLineKey{file, f.decl_line}, file, f, {});
            }
        }
    }

    for (const auto& [line, tally] : line_tally) {
        LineRecord lr;
        auto fit = model.files.find(line.file);
        lr.file = fit == model.files.end() ? "" : fit->second;
        lr.line = line.line;
        lr.numerator = tally.first;
        lr.denominator = Rational::whole(tally.second);
        report.lines.push_back(std::move(lr));
    }

    finalize_report(report);

    if (config.strict && !result.warnings.empty()) {
        std::string all = "strict mode: analysis produced warnings:";
        for (const auto& w : result.warnings)
            all += "\n  " + w;
        throw Error::validate(all);
    }
    return result;
}

std::string render_report(const CoverageReport& report, const std::string& format) {
    if (format == "csv")
        return report_to_csv(report);
    return report_to_json(report);
}

Comparison run_compare(const std::string& before_path, const std::string& after_path) {
    auto read = [](const std::string& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in)
            throw Error::io("cannot open report: " + path);
        std::ostringstream buf;
        buf << in.rdbuf();
        return report_from_json(buf.str(), path);
    };
    CoverageReport before = read(before_path);
    CoverageReport after = read(after_path);
    return compare_reports(before, after);
}

} // namespace dicov
