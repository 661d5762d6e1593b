#include "dicov/model.hpp"

#include <algorithm>

#include "dicov/error.hpp"

namespace dicov {

const char* desc_kind_name(DescKind k) {
    switch (k) {
    case DescKind::RegisterLocation: return "register-location";
    case DescKind::MemoryLocation: return "memory-location";
    case DescKind::ValueExpression: return "value-expression";
    case DescKind::LiteralValue: return "literal-value";
    }
    return "?";
}

std::optional<DescKind> desc_kind_from_name(std::string_view name) {
    if (name == "register-location") return DescKind::RegisterLocation;
    if (name == "memory-location") return DescKind::MemoryLocation;
    if (name == "value-expression") return DescKind::ValueExpression;
    if (name == "literal-value") return DescKind::LiteralValue;
    return std::nullopt;
}

const char* var_kind_name(VarKind k) {
    return k == VarKind::Local ? "local" : "formal-parameter";
}

std::optional<VarKind> var_kind_from_name(std::string_view name) {
    if (name == "local") return VarKind::Local;
    if (name == "formal-parameter" || name == "param") return VarKind::FormalParameter;
    return std::nullopt;
}

const FunctionInstance* FunctionInfo::instance(std::uint32_t id) const {
    for (const auto& inst : instances)
        if (inst.id == id)
            return &inst;
    return nullptr;
}

std::vector<AddressRange> FunctionInfo::all_ranges() const {
    std::vector<AddressRange> out;
    for (const auto& inst : instances)
        out.insert(out.end(), inst.ranges.begin(), inst.ranges.end());
    return out;
}

const FunctionInfo* NeutralDebugModel::function(std::string_view name) const {
    for (const auto& fn : functions)
        if (fn.name == name)
            return &fn;
    return nullptr;
}

std::string normalize_path(const std::string& path) {
    namespace fs = std::filesystem;
    fs::path p(path);
    fs::path norm = p.lexically_normal();
    std::string s = norm.generic_string();
    // lexically_normal turns "" into "" and "./x" into "x"; strip a lone
    // trailing slash except for the root.
    if (s.size() > 1 && s.back() == '/')
        s.pop_back();
    return s;
}

std::set<SourceLineKey> project_to_lines(const NeutralDebugModel& model,
                                         std::span<const AddressRange> ranges) {
    std::set<SourceLineKey> out;
    if (ranges.empty())
        return out;
    for (const auto& row : model.line_rows) {
        for (const auto& r : ranges) {
            if (r.contains(row.address)) {
                out.insert(row.line_key);
                break;
            }
        }
    }
    return out;
}

namespace {

bool within_any(const AddressRange& r, const std::vector<AddressRange>& ranges) {
    if (r.empty()) {
        // Zero-length ranges sit at a boundary; accept the end address too.
        for (const auto& outer : ranges)
            if (outer.low <= r.low && r.low <= outer.high)
                return true;
        return false;
    }
    // Description ranges are contiguous in practice; require containment in
    // a single function range.
    for (const auto& outer : ranges)
        if (outer.low <= r.low && r.high <= outer.high)
            return true;
    return false;
}

std::string key_str(const SourceLineKey& k) {
    return std::to_string(k.file) + ":" + std::to_string(k.line);
}

} // namespace

void validate_model(const NeutralDebugModel& model) {
    for (const auto& row : model.line_rows) {
        if (row.line_key.line < 1)
            throw Error::validate("line table row at address 0x" +
                                  std::to_string(row.address) + " has line < 1");
        if (!model.files.count(row.line_key.file))
            throw Error::validate("line table row references undeclared file id " +
                                  std::to_string(row.line_key.file));
    }
    for (const auto& fn : model.functions) {
        for (const auto& inst : fn.instances)
            for (const auto& r : inst.ranges)
                if (r.low > r.high)
                    throw Error::validate("function '" + fn.name + "' has inverted range");
        auto fn_ranges = fn.all_ranges();
        std::set<std::tuple<std::string, std::string, std::uint32_t>> seen;
        for (const auto& var : fn.variables) {
            if (var.name.empty())
                throw Error::validate("unnamed variable in function '" + fn.name + "'");
            if (!fn.instance(var.instance_id))
                throw Error::validate("variable '" + var.name + "' in function '" + fn.name +
                                      "' references unknown instance " +
                                      std::to_string(var.instance_id));
            if (var.decl) {
                if (var.decl->line < 1)
                    throw Error::validate("variable '" + var.name + "' has decl line < 1");
                if (!model.files.count(var.decl->file))
                    throw Error::validate("variable '" + var.name +
                                          "' references undeclared file id " +
                                          std::to_string(var.decl->file));
            }
            std::string decl = var.decl ? key_str(*var.decl) : std::string("-");
            if (!seen.insert({var.name, decl, var.instance_id}).second)
                throw Error::validate("duplicate variable '" + var.name + "' (decl " + decl +
                                      ") for instance " + std::to_string(var.instance_id) +
                                      " of function '" + fn.name + "'");
            for (const auto& d : var.description_ranges) {
                if (d.range.low > d.range.high)
                    throw Error::validate("variable '" + var.name + "' has inverted description range");
                if (!within_any(d.range, fn_ranges))
                    throw Error::validate("description range of variable '" + var.name +
                                          "' lies outside function '" + fn.name + "'");
            }
        }
    }
}

} // namespace dicov
