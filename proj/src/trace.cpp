#include "dicov/trace.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "dicov/error.hpp"

namespace dicov {
namespace {

std::vector<std::string> path_components(const std::string& p) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : p) {
        if (c == '/') {
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

bool is_component_suffix(const std::vector<std::string>& suffix,
                         const std::vector<std::string>& full) {
    if (suffix.empty() || suffix.size() > full.size())
        return false;
    return std::equal(suffix.rbegin(), suffix.rend(), full.rbegin());
}

} // namespace

ExecutionTrace parse_trace_text(const std::string& text, const std::string& origin) {
    ExecutionTrace trace;
    std::istringstream in(text);
    std::string line;
    std::uint32_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        auto hash = line.find('#');
        if (hash != std::string::npos)
            line = line.substr(0, hash);
        size_t begin = line.find_first_not_of(" \t");
        if (begin == std::string::npos)
            continue;
        size_t end = line.find_last_not_of(" \t");
        std::string entry = line.substr(begin, end - begin + 1);
        auto colon = entry.rfind(':');
        if (colon == std::string::npos || colon == 0 || colon + 1 == entry.size())
            throw parse_at(origin, lineno, 1, "expected 'path:line', got '" + entry + "'");
        std::string path = entry.substr(0, colon);
        std::string num = entry.substr(colon + 1);
        std::uint64_t value = 0;
        for (char c : num) {
            if (c < '0' || c > '9')
                throw parse_at(origin, lineno, 1, "expected 'path:line', got '" + entry + "'");
            value = value * 10 + static_cast<std::uint64_t>(c - '0');
            if (value > UINT32_MAX)
                throw parse_at(origin, lineno, 1, "line number out of range");
        }
        if (value == 0)
            throw Error::validate(origin + ":" + std::to_string(lineno) +
                                  ": line numbers are 1-based, got 0");
        trace.executed.emplace(normalize_path(path), static_cast<std::uint32_t>(value));
    }
    return trace;
}

ExecutionTrace load_trace(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error::io("cannot open trace file: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_trace_text(buf.str(), path.string());
}

std::set<SourceLineKey> ExecutionTrace::resolve(const std::map<FileId, std::string>& files) const {
    std::set<SourceLineKey> out;
    for (const auto& [path, line] : executed) {
        FileId matched = 0;
        bool found = false, ambiguous = false;
        for (const auto& [id, model_path] : files) {
            if (model_path == path) {
                matched = id;
                found = true;
                ambiguous = false;
                break;
            }
        }
        if (!found) {
            auto suffix = path_components(path);
            for (const auto& [id, model_path] : files) {
                if (is_component_suffix(suffix, path_components(model_path))) {
                    if (found)
                        ambiguous = true;
                    matched = id;
                    found = true;
                }
            }
        }
        if (found && !ambiguous)
            out.insert({matched, line});
        // Entries naming files outside the model are simply not coverage
        // relevant; they are dropped.
    }
    return out;
}

VariableFacts apply_filter(const VariableFacts& facts, const std::set<SourceLineKey>& executed) {
    VariableFacts out = facts;
    out.scope_lines.clear();
    out.defined_lines.clear();
    out.described.clear();
    std::set_intersection(facts.scope_lines.begin(), facts.scope_lines.end(), executed.begin(),
                          executed.end(), std::inserter(out.scope_lines, out.scope_lines.begin()));
    std::set_intersection(facts.defined_lines.begin(), facts.defined_lines.end(), executed.begin(),
                          executed.end(),
                          std::inserter(out.defined_lines, out.defined_lines.begin()));
    for (const auto& [line, fraction] : facts.described)
        if (executed.count(line))
            out.described.emplace(line, fraction);
    return out;
}

} // namespace dicov
