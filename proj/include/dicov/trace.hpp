#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "dicov/coverage.hpp"
#include "dicov/model.hpp"

namespace dicov {

// Lines observed executing, from an external line-granularity tracer. The
// format is one `path:line` entry per line with `#` comments; paths get the
// same normalization as the debug model's file table.
struct ExecutionTrace {
    std::set<std::pair<std::string, std::uint32_t>> executed;

    // Maps trace paths onto the model's file ids: exact normalized match
    // first, then a unique path-component suffix match (trace entries often
    // omit the compilation directory prefix).
    std::set<SourceLineKey> resolve(const std::map<FileId, std::string>& files) const;
};

ExecutionTrace load_trace(const std::filesystem::path& path);
ExecutionTrace parse_trace_text(const std::string& text, const std::string& origin);

// Restricts S, D and B to the executed set. Idempotent; extension is applied
// after filtering so it cannot resurrect unexecuted lines.
VariableFacts apply_filter(const VariableFacts& facts, const std::set<SourceLineKey>& executed);

} // namespace dicov
