#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace dicov {

using FileId = std::uint32_t;

// (file, line) pair; the unit every metric counts in. Lines are 1-based.
struct SourceLineKey {
    FileId file = 0;
    std::uint32_t line = 0;

    friend auto operator<=>(const SourceLineKey&, const SourceLineKey&) = default;
};

// Half-open machine address range. low == high is a zero-length range; those
// are kept to carry view-style coverage facts that exist between instructions.
struct AddressRange {
    std::uint64_t low = 0;
    std::uint64_t high = 0;

    bool contains(std::uint64_t addr) const { return low <= addr && addr < high; }
    bool empty() const { return low == high; }
    std::uint64_t bytes() const { return high - low; }

    friend auto operator<=>(const AddressRange&, const AddressRange&) = default;
};

struct LineTableRow {
    std::uint64_t address = 0;
    SourceLineKey line_key;
    bool is_statement = true;

    friend auto operator<=>(const LineTableRow&, const LineTableRow&) = default;
};

enum class DescKind {
    RegisterLocation,
    MemoryLocation,
    ValueExpression,
    LiteralValue,
};

const char* desc_kind_name(DescKind k);
std::optional<DescKind> desc_kind_from_name(std::string_view name);

struct DescriptionRange {
    AddressRange range;
    DescKind kind = DescKind::MemoryLocation;

    friend auto operator<=>(const DescriptionRange&, const DescriptionRange&) = default;
};

enum class VarKind { Local, FormalParameter };

const char* var_kind_name(VarKind k);
std::optional<VarKind> var_kind_from_name(std::string_view name);

// One realised copy of a source variable: the out-of-line copy or one
// inlined copy. Copies of the same source variable share (function, name,
// decl) and are told apart by instance_id.
struct VariableEntry {
    std::string name;
    VarKind kind = VarKind::Local;
    std::optional<SourceLineKey> decl;
    std::vector<AddressRange> scope_ranges;
    std::vector<DescriptionRange> description_ranges;
    std::uint32_t instance_id = 0;

    friend bool operator==(const VariableEntry&, const VariableEntry&) = default;
};

// One realised copy of a function body. Ids follow encounter order;
// conventionally the out-of-line copy comes first when one exists.
struct FunctionInstance {
    std::uint32_t id = 0;
    std::vector<AddressRange> ranges;

    friend bool operator==(const FunctionInstance&, const FunctionInstance&) = default;
};

struct FunctionInfo {
    std::string name;
    std::vector<FunctionInstance> instances;
    std::vector<VariableEntry> variables;

    const FunctionInstance* instance(std::uint32_t id) const;
    std::vector<AddressRange> all_ranges() const;

    friend bool operator==(const FunctionInfo&, const FunctionInfo&) = default;
};

// Compiler-independent view of one binary: line table, functions with their
// realised instances, variables with description ranges, and a file table of
// normalized paths. Immutable once built; safe to share across threads.
struct NeutralDebugModel {
    std::vector<FunctionInfo> functions;
    std::vector<LineTableRow> line_rows; // sorted by (address, file, line)
    std::map<FileId, std::string> files;

    const FunctionInfo* function(std::string_view name) const;

    friend bool operator==(const NeutralDebugModel&, const NeutralDebugModel&) = default;
};

// Separator canonicalization plus `.`/`..` resolution; producers spell the
// same file several ways and the file table must not care.
std::string normalize_path(const std::string& path);

// Line keys of rows whose address falls inside any of `ranges`. Zero-length
// ranges contain no addresses and contribute nothing here.
std::set<SourceLineKey> project_to_lines(const NeutralDebugModel& model,
                                         std::span<const AddressRange> ranges);

// Checks referential integrity and the per-variable range invariants;
// throws Error::validate naming the first violation.
void validate_model(const NeutralDebugModel& model);

// Text fixture format ("dbgfx"): load, and serialize in canonical order
// (files, funcs, rows by address, vars, descs). A canonical file reloads and
// re-serializes byte-identically.
NeutralDebugModel load_fixture(const std::filesystem::path& path);
NeutralDebugModel parse_fixture_text(const std::string& text, const std::string& origin);
std::string serialize_fixture(const NeutralDebugModel& model);

// DWARF 4/5 debugging information from an ELF object file or executable.
NeutralDebugModel load_binary(const std::filesystem::path& path);

} // namespace dicov
