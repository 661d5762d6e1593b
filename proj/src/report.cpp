#include "dicov/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>

#include <json.hpp>

#include "dicov/error.hpp"

namespace dicov {
namespace {

std::string esc(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
        case '"': out += "\\\""; break;
        case '\\': out += "\\\\"; break;
        case '\n': out += "\\n"; break;
        case '\r': out += "\\r"; break;
        case '\t': out += "\\t"; break;
        default:
            if (static_cast<unsigned char>(c) < 0x20) {
                char buf[8];
                std::snprintf(buf, sizeof buf, "\\u%04x", c);
                out += buf;
            } else {
                out += c;
            }
        }
    }
    return out;
}

std::string jstr(const std::string& s) { return "\"" + esc(s) + "\""; }

std::string jrat(const Rational& r) {
    return "{\"n\": " + std::to_string(r.num()) + ", \"d\": " + std::to_string(r.den()) + "}";
}

std::string jdecl(const std::optional<DeclRef>& d) {
    if (!d)
        return "null";
    return "{\"file\": " + jstr(d->file) + ", \"line\": " + std::to_string(d->line) + "}";
}

std::string jmetric(const MetricValue& m) {
    return "{\"num\": " + jrat(m.numerator) + ", \"den\": " + jrat(m.denominator) +
           ", \"ratio\": " + format_fixed6(m.ratio()) + "}";
}

bool record_order(const VariableRecord& a, const VariableRecord& b) {
    Rational ra = a.ratio(), rb = b.ratio();
    if (ra < rb) return true;
    if (rb < ra) return false;
    return std::tie(a.function, a.name) < std::tie(b.function, b.name);
}

std::string ident_str(const std::string& function, const std::string& name,
                      const std::optional<DeclRef>& decl) {
    std::string s = function + "/" + name;
    if (decl)
        s += "/" + std::to_string(decl->line);
    return s;
}

} // namespace

void finalize_report(CoverageReport& report) {
    std::stable_sort(report.variables.begin(), report.variables.end(), record_order);
    std::stable_sort(report.lines.begin(), report.lines.end(),
                     [](const LineRecord& a, const LineRecord& b) {
                         return std::tie(a.file, a.line) < std::tie(b.file, b.line);
                     });
    std::stable_sort(report.excluded.begin(), report.excluded.end(),
                     [](const ExcludedRecord& a, const ExcludedRecord& b) {
                         return std::tie(a.function, a.name) < std::tie(b.function, b.name);
                     });
    Aggregate agg;
    agg.variable_count = report.variables.size();
    Rational sum;
    for (const auto& v : report.variables) {
        Rational r = v.ratio();
        sum += r;
        if (r == Rational::whole(1))
            ++agg.fully_covered;
        if (r.is_zero())
            ++agg.zero_covered;
    }
    agg.mean_ratio = report.variables.empty()
                         ? Rational()
                         : sum / Rational::whole(static_cast<std::int64_t>(report.variables.size()));
    report.aggregate = agg;
}

std::string report_to_json(const CoverageReport& report) {
    const auto& m = report.meta;
    std::string out = "{\n  \"meta\": {\n";
    out += "    \"version\": " + jstr(m.version) + ",\n";
    out += "    \"input\": {\"path\": " + jstr(m.input_path) + ", \"hash\": " +
           jstr(m.input_hash) + "},\n";
    out += "    \"source_root\": " + jstr(m.source_root) + ",\n";
    out += "    \"mode\": " + jstr(m.mode) + ",\n";
    out += "    \"filter\": " + jstr(m.filter) + ",\n";
    out += "    \"knowledge_extension\": " + std::string(m.knowledge_extension ? "true" : "false") +
           ",\n";
    out += "    \"metrics\": [";
    for (size_t i = 0; i < m.metrics.size(); ++i)
        out += (i ? ", " : "") + jstr(m.metrics[i]);
    out += "]";
    if (m.timestamp)
        out += ",\n    \"timestamp\": " + jstr(*m.timestamp);
    out += "\n  },\n  \"variables\": [";
    for (size_t i = 0; i < report.variables.size(); ++i) {
        const auto& v = report.variables[i];
        out += i ? ",\n    " : "\n    ";
        out += "{\"function\": " + jstr(v.function) + ", \"name\": " + jstr(v.name) +
               ", \"decl\": " + jdecl(v.decl) + ", \"num\": " + jrat(v.numerator) +
               ", \"den\": " + jrat(v.denominator) +
               ", \"ratio\": " + format_fixed6(v.ratio().to_double()) +
               ", \"instances\": " + std::to_string(v.instance_count);
        if (v.unshrunk)
            out += ", \"unshrunk\": " + jmetric(*v.unshrunk);
        if (v.naive_bytes)
            out += ", \"naive_bytes\": " + jmetric(*v.naive_bytes);
        if (v.state)
            out += ", \"state\": " + jstr(*v.state);
        out += "}";
    }
    out += report.variables.empty() ? "],\n" : "\n  ],\n";
    out += "  \"lines\": [";
    for (size_t i = 0; i < report.lines.size(); ++i) {
        const auto& l = report.lines[i];
        out += i ? ",\n    " : "\n    ";
        out += "{\"file\": " + jstr(l.file) + ", \"line\": " + std::to_string(l.line) +
               ", \"num\": " + jrat(l.numerator) + ", \"den\": " + jrat(l.denominator) + "}";
    }
    out += report.lines.empty() ? "],\n" : "\n  ],\n";
    out += "  \"excluded\": [";
    for (size_t i = 0; i < report.excluded.size(); ++i) {
        const auto& e = report.excluded[i];
        out += i ? ",\n    " : "\n    ";
        out += "{\"function\": " + jstr(e.function) + ", \"name\": " + jstr(e.name) +
               ", \"decl\": " + jdecl(e.decl) + ", \"reason\": " + jstr(e.reason) + "}";
    }
    out += report.excluded.empty() ? "],\n" : "\n  ],\n";
    out += "  \"aggregate\": {\"variables\": " + std::to_string(report.aggregate.variable_count) +
           ", \"mean_ratio\": " + jrat(report.aggregate.mean_ratio) +
           ", \"mean\": " + format_fixed6(report.aggregate.mean_ratio.to_double()) +
           ", \"fully_covered\": " + std::to_string(report.aggregate.fully_covered) +
           ", \"zero_covered\": " + std::to_string(report.aggregate.zero_covered) + "}\n}\n";
    return out;
}

namespace {

using nlohmann::json;

Rational parse_rat(const json& j, const std::string& ctx) {
    if (!j.is_object() || !j.contains("n") || !j.contains("d"))
        throw Error::parse(ctx + ": expected rational object {\"n\":..,\"d\":..}");
    return Rational(j["n"].get<std::int64_t>(), j["d"].get<std::int64_t>());
}

std::optional<DeclRef> parse_decl(const json& j) {
    if (j.is_null())
        return std::nullopt;
    DeclRef d;
    d.file = j.at("file").get<std::string>();
    d.line = j.at("line").get<std::uint32_t>();
    return d;
}

MetricValue parse_metric(const json& j, const std::string& ctx) {
    MetricValue m;
    m.numerator = parse_rat(j.at("num"), ctx);
    m.denominator = parse_rat(j.at("den"), ctx);
    return m;
}

} // namespace

CoverageReport report_from_json(const std::string& text, const std::string& origin) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw Error::parse(origin + ": " + e.what());
    }
    try {
        CoverageReport r;
        const json& meta = j.at("meta");
        r.meta.version = meta.at("version").get<std::string>();
        r.meta.input_path = meta.at("input").at("path").get<std::string>();
        r.meta.input_hash = meta.at("input").at("hash").get<std::string>();
        r.meta.source_root = meta.at("source_root").get<std::string>();
        r.meta.mode = meta.at("mode").get<std::string>();
        r.meta.filter = meta.at("filter").get<std::string>();
        r.meta.knowledge_extension = meta.at("knowledge_extension").get<bool>();
        for (const auto& m : meta.at("metrics"))
            r.meta.metrics.push_back(m.get<std::string>());
        if (meta.contains("timestamp"))
            r.meta.timestamp = meta.at("timestamp").get<std::string>();
        for (const auto& vj : j.at("variables")) {
            VariableRecord v;
            v.function = vj.at("function").get<std::string>();
            v.name = vj.at("name").get<std::string>();
            v.decl = parse_decl(vj.at("decl"));
            v.numerator = parse_rat(vj.at("num"), "variable " + v.name);
            v.denominator = parse_rat(vj.at("den"), "variable " + v.name);
            v.instance_count = vj.at("instances").get<std::uint32_t>();
            if (vj.contains("unshrunk"))
                v.unshrunk = parse_metric(vj.at("unshrunk"), "variable " + v.name);
            if (vj.contains("naive_bytes"))
                v.naive_bytes = parse_metric(vj.at("naive_bytes"), "variable " + v.name);
            if (vj.contains("state"))
                v.state = vj.at("state").get<std::string>();
            if (v.denominator.is_zero())
                throw Error::validate(origin + ": variable record with zero denominator");
            r.variables.push_back(std::move(v));
        }
        for (const auto& lj : j.at("lines")) {
            LineRecord l;
            l.file = lj.at("file").get<std::string>();
            l.line = lj.at("line").get<std::uint32_t>();
            l.numerator = parse_rat(lj.at("num"), "line record");
            l.denominator = parse_rat(lj.at("den"), "line record");
            r.lines.push_back(std::move(l));
        }
        for (const auto& ej : j.at("excluded")) {
            ExcludedRecord e;
            e.function = ej.at("function").get<std::string>();
            e.name = ej.at("name").get<std::string>();
            e.decl = parse_decl(ej.at("decl"));
            e.reason = ej.at("reason").get<std::string>();
            r.excluded.push_back(std::move(e));
        }
        const json& aj = j.at("aggregate");
        r.aggregate.variable_count = aj.at("variables").get<std::uint64_t>();
        r.aggregate.mean_ratio = parse_rat(aj.at("mean_ratio"), "aggregate");
        r.aggregate.fully_covered = aj.at("fully_covered").get<std::uint64_t>();
        r.aggregate.zero_covered = aj.at("zero_covered").get<std::uint64_t>();

        // The aggregate block must be recomputable from the records, and
        // records must already be in canonical order.
        CoverageReport check = r;
        finalize_report(check);
        if (check.aggregate.variable_count != r.aggregate.variable_count ||
            !(check.aggregate.mean_ratio == r.aggregate.mean_ratio) ||
            check.aggregate.fully_covered != r.aggregate.fully_covered ||
            check.aggregate.zero_covered != r.aggregate.zero_covered)
            throw Error::validate(origin + ": aggregate block does not match its records");
        for (size_t i = 0; i < r.variables.size(); ++i) {
            const auto& a = check.variables[i];
            const auto& b = r.variables[i];
            if (a.function != b.function || a.name != b.name)
                throw Error::validate(origin + ": variable records are not in canonical order");
        }
        return r;
    } catch (const json::exception& e) {
        throw Error::parse(origin + ": malformed report: " + e.what());
    }
}

std::string report_to_csv(const CoverageReport& report) {
    std::string out;
    if (report.meta.mode == "line") {
        out = "file,line,numerator,denominator\n";
        for (const auto& l : report.lines)
            out += "\"" + l.file + "\"," + std::to_string(l.line) + "," +
                   format_fixed6(l.numerator.to_double()) + "," +
                   std::to_string(l.denominator.num()) + "\n";
        return out;
    }
    out = "index,ratio\n";
    for (const auto& [index, ratio] : sorted_curve(report))
        out += std::to_string(index) + "," + format_fixed6(ratio) + "\n";
    return out;
}

std::vector<std::pair<std::size_t, double>> sorted_curve(const CoverageReport& report) {
    std::vector<double> ratios;
    for (const auto& v : report.variables)
        ratios.push_back(v.ratio().to_double());
    std::sort(ratios.begin(), ratios.end());
    std::vector<std::pair<std::size_t, double>> out;
    for (std::size_t i = 0; i < ratios.size(); ++i)
        out.emplace_back(i, ratios[i]);
    return out;
}

double pearson(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size())
        throw Error::usage("pearson: sequence lengths differ (" + std::to_string(xs.size()) +
                           " vs " + std::to_string(ys.size()) + ")");
    size_t n = xs.size();
    if (n == 0)
        throw Error::usage("pearson: empty sequences");
    bool xs_const = std::all_of(xs.begin(), xs.end(), [&](double v) { return v == xs[0]; });
    bool ys_const = std::all_of(ys.begin(), ys.end(), [&](double v) { return v == ys[0]; });
    if (xs_const || ys_const)
        throw Error::usage("pearson: undefined correlation (zero variance)");

    // Exactly affine pairs get the exact answer; verifying the relation in
    // the same arithmetic the caller used keeps this an honest fast path.
    size_t pivot = 0;
    while (pivot < n && xs[pivot] == xs[0])
        ++pivot;
    if (pivot < n) {
        double slope = (ys[pivot] - ys[0]) / (xs[pivot] - xs[0]);
        double intercept = ys[0] - slope * xs[0];
        bool affine = slope != 0.0 && std::isfinite(slope) && std::isfinite(intercept);
        for (size_t i = 0; affine && i < n; ++i)
            affine = ys[i] == intercept + slope * xs[i];
        if (affine)
            return slope > 0 ? 1.0 : -1.0;
    }

    double mx = 0, my = 0;
    for (size_t i = 0; i < n; ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxy = 0, sxx = 0, syy = 0;
    for (size_t i = 0; i < n; ++i) {
        double dx = xs[i] - mx, dy = ys[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0 || syy == 0)
        throw Error::usage("pearson: undefined correlation (zero variance)");
    double r = sxy / std::sqrt(sxx * syy);
    return std::clamp(r, -1.0, 1.0);
}

Comparison compare_reports(const CoverageReport& before, const CoverageReport& after) {
    if (before.meta.mode != after.meta.mode)
        throw Error::usage("compare: reports have different modes ('" + before.meta.mode +
                           "' vs '" + after.meta.mode + "')");
    Comparison cmp;
    cmp.before_path = before.meta.input_path;
    cmp.before_hash = before.meta.input_hash;
    cmp.after_path = after.meta.input_path;
    cmp.after_hash = after.meta.input_hash;
    cmp.mode = before.meta.mode;

    // Match key: (function, name, decl line). Renames look like remove+add.
    auto key = [](const VariableRecord& v) {
        return std::make_tuple(v.function, v.name,
                               v.decl ? v.decl->line : std::uint32_t(0));
    };
    std::map<std::tuple<std::string, std::string, std::uint32_t>, const VariableRecord*> b_index;
    for (const auto& v : before.variables)
        b_index[key(v)] = &v;
    std::set<std::tuple<std::string, std::string, std::uint32_t>> matched_keys;
    for (const auto& v : after.variables) {
        auto it = b_index.find(key(v));
        if (it == b_index.end()) {
            cmp.only_after.push_back(ident_str(v.function, v.name, v.decl));
            continue;
        }
        matched_keys.insert(key(v));
        VariableDelta d;
        d.function = v.function;
        d.name = v.name;
        d.decl = v.decl;
        d.before = it->second->ratio();
        d.after = v.ratio();
        d.delta = d.after - d.before;
        if (d.before < d.after)
            ++cmp.improved;
        else if (d.after < d.before)
            ++cmp.regressed;
        else
            ++cmp.unchanged;
        cmp.matched.push_back(std::move(d));
    }
    for (const auto& v : before.variables)
        if (!matched_keys.count(key(v)))
            cmp.only_before.push_back(ident_str(v.function, v.name, v.decl));
    if (cmp.matched.empty())
        throw Error::usage("compare: no variables matched between the reports");

    std::sort(cmp.matched.begin(), cmp.matched.end(),
              [](const VariableDelta& a, const VariableDelta& b) {
                  return std::tie(a.function, a.name) < std::tie(b.function, b.name);
              });
    std::sort(cmp.only_before.begin(), cmp.only_before.end());
    std::sort(cmp.only_after.begin(), cmp.only_after.end());

    std::vector<double> xs, ys;
    for (const auto& d : cmp.matched) {
        xs.push_back(d.before.to_double());
        ys.push_back(d.after.to_double());
    }
    try {
        cmp.correlation = pearson(xs, ys);
    } catch (const Error&) {
        cmp.correlation.reset(); // too few points or zero variance
    }
    return cmp;
}

std::string comparison_to_json(const Comparison& cmp) {
    std::string out = "{\n  \"meta\": {\n";
    out += "    \"version\": " + jstr(kToolVersion) + ",\n";
    out += "    \"before\": {\"path\": " + jstr(cmp.before_path) + ", \"hash\": " +
           jstr(cmp.before_hash) + "},\n";
    out += "    \"after\": {\"path\": " + jstr(cmp.after_path) + ", \"hash\": " +
           jstr(cmp.after_hash) + "},\n";
    out += "    \"mode\": " + jstr(cmp.mode) + "\n  },\n";
    out += "  \"matched\": [";
    for (size_t i = 0; i < cmp.matched.size(); ++i) {
        const auto& d = cmp.matched[i];
        out += i ? ",\n    " : "\n    ";
        out += "{\"function\": " + jstr(d.function) + ", \"name\": " + jstr(d.name) +
               ", \"decl\": " + jdecl(d.decl) + ", \"before\": " + jrat(d.before) +
               ", \"after\": " + jrat(d.after) + ", \"delta\": " + jrat(d.delta) +
               ", \"delta_value\": " + format_fixed6(d.delta.to_double()) + "}";
    }
    out += cmp.matched.empty() ? "],\n" : "\n  ],\n";
    out += "  \"only_before\": [";
    for (size_t i = 0; i < cmp.only_before.size(); ++i)
        out += (i ? ", " : "") + jstr(cmp.only_before[i]);
    out += "],\n  \"only_after\": [";
    for (size_t i = 0; i < cmp.only_after.size(); ++i)
        out += (i ? ", " : "") + jstr(cmp.only_after[i]);
    out += "],\n";
    out += "  \"summary\": {\"improved\": " + std::to_string(cmp.improved) +
           ", \"regressed\": " + std::to_string(cmp.regressed) +
           ", \"unchanged\": " + std::to_string(cmp.unchanged) + ", \"pearson\": " +
           (cmp.correlation ? format_fixed6(*cmp.correlation) : std::string("null")) + "}\n}\n";
    return out;
}

std::string hash_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error::io("cannot open input for hashing: " + path);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    char buf[65536];
    while (in.read(buf, sizeof buf) || in.gcount() > 0) {
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 0x100000001b3ULL;
        }
        if (!in)
            break;
    }
    char out[32];
    std::snprintf(out, sizeof out, "fnv1a64:%016llx", static_cast<unsigned long long>(h));
    return out;
}

} // namespace dicov
