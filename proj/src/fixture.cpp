#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "dicov/error.hpp"
#include "dicov/model.hpp"

namespace dicov {
namespace {

struct Token {
    std::string text;
    std::uint32_t col = 0; // 1-based
};

// Splits one record line into tokens. A '#' at line start or after
// whitespace starts a comment.
std::vector<Token> split_line(const std::string& line) {
    std::vector<Token> out;
    size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t'))
            ++i;
        if (i >= line.size() || line[i] == '#')
            break;
        size_t start = i;
        while (i < line.size() && line[i] != ' ' && line[i] != '\t')
            ++i;
        out.push_back({line.substr(start, i - start), static_cast<std::uint32_t>(start + 1)});
    }
    return out;
}

class FixtureParser {
public:
    FixtureParser(const std::string& text, std::string origin)
        : text_(text), origin_(std::move(origin)) {}

    NeutralDebugModel run() {
        std::istringstream in(text_);
        std::string line;
        while (std::getline(in, line)) {
            ++lineno_;
            auto toks = split_line(line);
            if (toks.empty())
                continue;
            record(toks);
        }
        return build();
    }

private:
    struct VarRec {
        std::string func;
        std::uint32_t instance;
        VarKind kind;
        std::string name;
        std::optional<SourceLineKey> decl;
        std::uint32_t lineno;
    };
    struct DescRec {
        std::string func;
        std::uint32_t instance;
        std::string name;
        DescriptionRange desc;
        std::uint32_t lineno;
    };

    [[noreturn]] void fail(std::uint32_t col, const std::string& msg) const {
        throw parse_at(origin_, lineno_, col, msg);
    }
    [[noreturn]] void fail_validate(std::uint32_t lineno, const std::string& msg) const {
        throw Error::validate(origin_ + ":" + std::to_string(lineno) + ": " + msg);
    }

    std::uint64_t parse_hex(const Token& t) const {
        const std::string& s = t.text;
        size_t start = s.starts_with("0x") || s.starts_with("0X") ? 2 : 0;
        if (start == s.size())
            fail(t.col, "expected hexadecimal address, got '" + s + "'");
        std::uint64_t v = 0;
        for (size_t i = start; i < s.size(); ++i) {
            char c = s[i];
            int digit;
            if (c >= '0' && c <= '9') digit = c - '0';
            else if (c >= 'a' && c <= 'f') digit = c - 'a' + 10;
            else if (c >= 'A' && c <= 'F') digit = c - 'A' + 10;
            else fail(t.col, "expected hexadecimal address, got '" + s + "'");
            if (v > (UINT64_MAX >> 4))
                fail(t.col, "address overflows 64 bits");
            v = (v << 4) | static_cast<std::uint64_t>(digit);
        }
        return v;
    }

    std::uint64_t parse_dec(const Token& t, const char* what) const {
        if (t.text.empty())
            fail(t.col, std::string("expected ") + what);
        std::uint64_t v = 0;
        for (char c : t.text) {
            if (c < '0' || c > '9')
                fail(t.col, std::string("expected decimal ") + what + ", got '" + t.text + "'");
            v = v * 10 + static_cast<std::uint64_t>(c - '0');
            if (v > UINT32_MAX)
                fail(t.col, std::string(what) + " out of range");
        }
        return v;
    }

    void need(const std::vector<Token>& toks, size_t n, const char* grammar) const {
        if (toks.size() < n)
            fail(toks.empty() ? 1 : toks.back().col, std::string("expected: ") + grammar);
    }

    void record(const std::vector<Token>& toks) {
        const std::string& kind = toks[0].text;
        if (kind == "file") {
            need(toks, 3, "file <id> <path>");
            auto id = static_cast<FileId>(parse_dec(toks[1], "file id"));
            // Paths may contain spaces: rejoin remaining tokens.
            std::string path = toks[2].text;
            for (size_t i = 3; i < toks.size(); ++i)
                path += " " + toks[i].text;
            if (files_.count(id))
                fail_validate(lineno_, "duplicate file id " + std::to_string(id));
            files_[id] = normalize_path(path);
        } else if (kind == "func") {
            need(toks, 4, "func <name> <low> <high>");
            AddressRange r{parse_hex(toks[2]), parse_hex(toks[3])};
            if (r.low > r.high)
                fail_validate(lineno_, "function range with low > high");
            func_order_.push_back(toks[1].text);
            func_ranges_[toks[1].text].push_back(r);
        } else if (kind == "row") {
            need(toks, 5, "row <addr> <file_id> <line> <is_stmt>");
            LineTableRow row;
            row.address = parse_hex(toks[1]);
            row.line_key.file = static_cast<FileId>(parse_dec(toks[2], "file id"));
            row.line_key.line = static_cast<std::uint32_t>(parse_dec(toks[3], "line number"));
            if (toks[4].text == "0") row.is_statement = false;
            else if (toks[4].text == "1") row.is_statement = true;
            else fail(toks[4].col, "is_stmt must be 0 or 1");
            rows_.push_back(row);
        } else if (kind == "var") {
            need(toks, 5, "var <func> <instance> <kind> <name> [decl <file_id>:<line>]");
            VarRec v;
            v.func = toks[1].text;
            v.instance = static_cast<std::uint32_t>(parse_dec(toks[2], "instance id"));
            auto vk = var_kind_from_name(toks[3].text);
            if (!vk)
                fail(toks[3].col, "unknown variable kind '" + toks[3].text + "'");
            v.kind = *vk;
            v.name = toks[4].text;
            v.lineno = lineno_;
            if (toks.size() > 5) {
                if (toks[5].text != "decl" || toks.size() != 7)
                    fail(toks[5].col, "expected: decl <file_id>:<line>");
                auto colon = toks[6].text.find(':');
                if (colon == std::string::npos)
                    fail(toks[6].col, "expected: decl <file_id>:<line>");
                Token fid{toks[6].text.substr(0, colon), toks[6].col};
                Token ln{toks[6].text.substr(colon + 1), toks[6].col};
                SourceLineKey decl;
                decl.file = static_cast<FileId>(parse_dec(fid, "file id"));
                decl.line = static_cast<std::uint32_t>(parse_dec(ln, "line number"));
                v.decl = decl;
            }
            vars_.push_back(std::move(v));
        } else if (kind == "desc") {
            need(toks, 7, "desc <func> <instance> <name> <low> <high> <kind>");
            DescRec d;
            d.func = toks[1].text;
            d.instance = static_cast<std::uint32_t>(parse_dec(toks[2], "instance id"));
            d.name = toks[3].text;
            d.desc.range = {parse_hex(toks[4]), parse_hex(toks[5])};
            auto dk = desc_kind_from_name(toks[6].text);
            if (!dk)
                fail(toks[6].col, "unknown description kind '" + toks[6].text + "'");
            d.desc.kind = *dk;
            d.lineno = lineno_;
            descs_.push_back(std::move(d));
        } else {
            fail(toks[0].col, "unknown record type '" + kind + "'");
        }
    }

    NeutralDebugModel build() {
        NeutralDebugModel model;
        model.files = files_;

        // Repeated func records with one name declare its successive
        // instances; ids follow record order, 0 first.
        std::map<std::string, FunctionInfo> funcs;
        for (const auto& name : func_order_) {
            auto& fn = funcs[name];
            fn.name = name;
        }
        for (auto& [name, fn] : funcs) {
            const auto& ranges = func_ranges_[name];
            for (std::uint32_t i = 0; i < ranges.size(); ++i)
                fn.instances.push_back({i, {ranges[i]}});
        }

        for (auto& v : vars_) {
            auto it = funcs.find(v.func);
            if (it == funcs.end())
                fail_validate(v.lineno, "variable '" + v.name + "' references unknown function '" +
                                            v.func + "'");
            const FunctionInstance* inst = it->second.instance(v.instance);
            if (!inst)
                fail_validate(v.lineno, "variable '" + v.name + "' references unknown instance " +
                                            std::to_string(v.instance) + " of function '" + v.func +
                                            "'");
            VariableEntry entry;
            entry.name = v.name;
            entry.kind = v.kind;
            entry.decl = v.decl;
            entry.instance_id = v.instance;
            entry.scope_ranges = inst->ranges;
            it->second.variables.push_back(std::move(entry));
        }

        for (auto& d : descs_) {
            auto it = funcs.find(d.func);
            VariableEntry* target = nullptr;
            if (it != funcs.end()) {
                for (auto& var : it->second.variables)
                    if (var.instance_id == d.instance && var.name == d.name) {
                        target = &var;
                        break;
                    }
            }
            if (!target)
                fail_validate(d.lineno, "description references unknown variable '" + d.name +
                                            "' (instance " + std::to_string(d.instance) +
                                            ") of function '" + d.func + "'");
            target->description_ranges.push_back(d.desc);
        }

        for (auto& [name, fn] : funcs) {
            for (auto& var : fn.variables)
                std::sort(var.description_ranges.begin(), var.description_ranges.end());
            std::sort(fn.variables.begin(), fn.variables.end(),
                      [](const VariableEntry& a, const VariableEntry& b) {
                          return std::tie(a.instance_id, a.name) < std::tie(b.instance_id, b.name);
                      });
            model.functions.push_back(std::move(fn));
        }
        std::sort(rows_.begin(), rows_.end());
        rows_.erase(std::unique(rows_.begin(), rows_.end()), rows_.end());
        model.line_rows = std::move(rows_);

        try {
            validate_model(model);
        } catch (const Error& e) {
            throw Error::validate(origin_ + ": " + e.what());
        }
        return model;
    }

    const std::string& text_;
    std::string origin_;
    std::uint32_t lineno_ = 0;

    std::map<FileId, std::string> files_;
    std::vector<std::string> func_order_;
    std::map<std::string, std::vector<AddressRange>> func_ranges_;
    std::vector<LineTableRow> rows_;
    std::vector<VarRec> vars_;
    std::vector<DescRec> descs_;
};

std::string hex(std::uint64_t v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "0x%llx", static_cast<unsigned long long>(v));
    return buf;
}

} // namespace

NeutralDebugModel parse_fixture_text(const std::string& text, const std::string& origin) {
    return FixtureParser(text, origin).run();
}

NeutralDebugModel load_fixture(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error::io("cannot open fixture file: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    std::string text = buf.str();
    return parse_fixture_text(text, path.string());
}

std::string serialize_fixture(const NeutralDebugModel& model) {
    std::string out;
    for (const auto& [id, path] : model.files)
        out += "file " + std::to_string(id) + " " + path + "\n";

    std::vector<const FunctionInfo*> funcs;
    for (const auto& fn : model.functions)
        funcs.push_back(&fn);
    std::sort(funcs.begin(), funcs.end(),
              [](const FunctionInfo* a, const FunctionInfo* b) { return a->name < b->name; });

    for (const auto* fn : funcs) {
        auto instances = fn->instances;
        std::sort(instances.begin(), instances.end(),
                  [](const FunctionInstance& a, const FunctionInstance& b) { return a.id < b.id; });
        for (const auto& inst : instances)
            for (const auto& r : inst.ranges)
                out += "func " + fn->name + " " + hex(r.low) + " " + hex(r.high) + "\n";
    }

    auto rows = model.line_rows;
    std::sort(rows.begin(), rows.end());
    for (const auto& row : rows)
        out += "row " + hex(row.address) + " " + std::to_string(row.line_key.file) + " " +
               std::to_string(row.line_key.line) + " " + (row.is_statement ? "1" : "0") + "\n";

    for (const auto* fn : funcs) {
        auto vars = fn->variables;
        std::sort(vars.begin(), vars.end(), [](const VariableEntry& a, const VariableEntry& b) {
            return std::tie(a.instance_id, a.name) < std::tie(b.instance_id, b.name);
        });
        for (const auto& var : vars) {
            out += "var " + fn->name + " " + std::to_string(var.instance_id) + " " +
                   var_kind_name(var.kind) + " " + var.name;
            if (var.decl)
                out += " decl " + std::to_string(var.decl->file) + ":" +
                       std::to_string(var.decl->line);
            out += "\n";
        }
    }
    for (const auto* fn : funcs) {
        auto vars = fn->variables;
        std::sort(vars.begin(), vars.end(), [](const VariableEntry& a, const VariableEntry& b) {
            return std::tie(a.instance_id, a.name) < std::tie(b.instance_id, b.name);
        });
        for (const auto& var : vars) {
            auto descs = var.description_ranges;
            std::sort(descs.begin(), descs.end());
            for (const auto& d : descs)
                out += "desc " + fn->name + " " + std::to_string(var.instance_id) + " " + var.name +
                       " " + hex(d.range.low) + " " + hex(d.range.high) + " " +
                       desc_kind_name(d.kind) + "\n";
        }
    }
    return out;
}

} // namespace dicov
