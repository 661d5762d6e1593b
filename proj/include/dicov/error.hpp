#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace dicov {

// One error type for the whole library. The kind decides the CLI exit code
// (usage -> 1, input/parse/decode/validation -> 2, internal -> 3).
class Error : public std::runtime_error {
public:
    enum class Kind {
        Io,          // unreadable or unwritable file
        NoDebugInfo, // object file lacks the needed debug sections
        Decode,      // malformed binary record
        Parse,       // malformed text input (fixture, source, trace, report)
        Validate,    // structurally valid input violating a model invariant
        Usage,       // bad configuration or flag combination
        Internal,    // invariant violation inside the library
    };

    Error(Kind kind, std::string message)
        : std::runtime_error(std::move(message)), kind_(kind) {}

    Kind kind() const { return kind_; }

    static Error io(const std::string& msg) { return {Kind::Io, msg}; }
    static Error no_debug_info(const std::string& msg) { return {Kind::NoDebugInfo, msg}; }
    static Error decode(const std::string& msg) { return {Kind::Decode, msg}; }
    static Error parse(const std::string& msg) { return {Kind::Parse, msg}; }
    static Error validate(const std::string& msg) { return {Kind::Validate, msg}; }
    static Error usage(const std::string& msg) { return {Kind::Usage, msg}; }
    static Error internal(const std::string& msg) { return {Kind::Internal, msg}; }

private:
    Kind kind_;
};

// Parse errors carry "file:line:col: message" so callers can surface the
// position without re-lexing the input.
inline Error parse_at(const std::string& file, std::uint32_t line, std::uint32_t col,
                      const std::string& msg) {
    return Error::parse(file + ":" + std::to_string(line) + ":" + std::to_string(col) +
                        ": " + msg);
}

inline Error decode_at(const std::string& what, std::uint64_t offset, const std::string& msg) {
    return Error::decode(what + " at offset 0x" + [](std::uint64_t v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%llx", static_cast<unsigned long long>(v));
        return std::string(buf);
    }(offset) + ": " + msg);
}

} // namespace dicov
