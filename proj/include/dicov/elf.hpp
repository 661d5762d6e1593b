#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace dicov {

// Minimal 64-bit little-endian ELF reader: section lookup plus RELA
// application on debug sections of relocatable objects, which is all the
// debug-info decoder needs.
struct ElfSection {
    std::string name;
    std::uint32_t type = 0;
    std::uint64_t flags = 0;
    std::uint32_t link = 0;
    std::uint32_t info = 0;
    std::vector<std::uint8_t> data;
};

class ElfFile {
public:
    static ElfFile load(const std::filesystem::path& path);

    const ElfSection* section(std::string_view name) const;
    bool relocatable() const { return relocatable_; }
    const std::string& path() const { return path_; }

private:
    void apply_debug_relocations();

    std::string path_;
    bool relocatable_ = false;
    std::vector<ElfSection> sections_;
};

} // namespace dicov
