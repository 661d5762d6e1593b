#include "dicov/elf.hpp"

#include <cstring>
#include <elf.h>
#include <fstream>

#include "dicov/error.hpp"

namespace dicov {
namespace {

template <typename T>
T read_struct(const std::vector<std::uint8_t>& bytes, std::uint64_t offset,
              const std::string& what) {
    if (offset + sizeof(T) > bytes.size())
        throw decode_at(what, offset, "truncated file");
    T out;
    std::memcpy(&out, bytes.data() + offset, sizeof(T));
    return out;
}

} // namespace

ElfFile ElfFile::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error::io("cannot open object file: " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());

    ElfFile elf;
    elf.path_ = path.string();
    if (bytes.size() < EI_NIDENT)
        throw decode_at(elf.path_, 0, "not an ELF file (too short)");
    if (std::memcmp(bytes.data(), ELFMAG, SELFMAG) != 0)
        throw decode_at(elf.path_, 0, "not an ELF file (bad magic)");
    if (bytes[EI_CLASS] != ELFCLASS64)
        throw decode_at(elf.path_, EI_CLASS, "unsupported ELF class (need 64-bit)");
    if (bytes[EI_DATA] != ELFDATA2LSB)
        throw decode_at(elf.path_, EI_DATA, "unsupported byte order (need little-endian)");

    auto ehdr = read_struct<Elf64_Ehdr>(bytes, 0, elf.path_);
    elf.relocatable_ = ehdr.e_type == ET_REL;
    if (ehdr.e_shoff == 0 || ehdr.e_shnum == 0)
        throw decode_at(elf.path_, 0, "no section headers");
    if (ehdr.e_shentsize != sizeof(Elf64_Shdr))
        throw decode_at(elf.path_, 0, "unexpected section header size");

    std::vector<Elf64_Shdr> shdrs;
    for (std::uint32_t i = 0; i < ehdr.e_shnum; ++i)
        shdrs.push_back(read_struct<Elf64_Shdr>(bytes, ehdr.e_shoff + i * sizeof(Elf64_Shdr),
                                                elf.path_));
    if (ehdr.e_shstrndx >= shdrs.size())
        throw decode_at(elf.path_, 0, "bad section string table index");
    const Elf64_Shdr& shstr = shdrs[ehdr.e_shstrndx];
    if (shstr.sh_offset + shstr.sh_size > bytes.size())
        throw decode_at(elf.path_, shstr.sh_offset, "section string table out of bounds");

    auto section_name = [&](std::uint32_t off) -> std::string {
        std::uint64_t pos = shstr.sh_offset + off;
        std::string name;
        while (pos < bytes.size() && bytes[pos] != 0)
            name += static_cast<char>(bytes[pos++]);
        return name;
    };

    for (const auto& sh : shdrs) {
        ElfSection sec;
        sec.name = section_name(sh.sh_name);
        sec.type = sh.sh_type;
        sec.flags = sh.sh_flags;
        sec.link = sh.sh_link;
        sec.info = sh.sh_info;
        if (sh.sh_type != SHT_NOBITS && sh.sh_size > 0) {
            if (sh.sh_offset + sh.sh_size > bytes.size())
                throw decode_at(elf.path_, sh.sh_offset, "section '" + sec.name +
                                                             "' out of bounds");
            sec.data.assign(bytes.begin() + static_cast<std::ptrdiff_t>(sh.sh_offset),
                            bytes.begin() + static_cast<std::ptrdiff_t>(sh.sh_offset + sh.sh_size));
        }
        if (sec.name.starts_with(".debug_") && (sh.sh_flags & SHF_COMPRESSED))
            throw decode_at(elf.path_, sh.sh_offset,
                            "compressed debug section '" + sec.name + "' is not supported");
        if (sec.name.starts_with(".zdebug_"))
            throw decode_at(elf.path_, sh.sh_offset,
                            "compressed debug section '" + sec.name + "' is not supported");
        elf.sections_.push_back(std::move(sec));
    }

    if (elf.relocatable_)
        elf.apply_debug_relocations();
    return elf;
}

// Object files carry their debug addresses as relocations; applying S+A with
// all sections at address 0 yields consistent section-relative addresses.
void ElfFile::apply_debug_relocations() {
    for (const auto& rela : sections_) {
        if (rela.type != SHT_RELA || !rela.name.starts_with(".rela.debug_"))
            continue;
        if (rela.info >= sections_.size() || rela.link >= sections_.size())
            continue;
        ElfSection& target = sections_[rela.info];
        const ElfSection& symtab = sections_[rela.link];
        size_t count = rela.data.size() / sizeof(Elf64_Rela);
        for (size_t i = 0; i < count; ++i) {
            Elf64_Rela r;
            std::memcpy(&r, rela.data.data() + i * sizeof(Elf64_Rela), sizeof r);
            std::uint32_t sym_idx = ELF64_R_SYM(r.r_info);
            std::uint32_t type = ELF64_R_TYPE(r.r_info);
            std::uint64_t sym_value = 0;
            if (sym_idx * sizeof(Elf64_Sym) + sizeof(Elf64_Sym) <= symtab.data.size()) {
                Elf64_Sym sym;
                std::memcpy(&sym, symtab.data.data() + sym_idx * sizeof(Elf64_Sym), sizeof sym);
                sym_value = sym.st_value;
            }
            std::uint64_t value = sym_value + static_cast<std::uint64_t>(r.r_addend);
            if (r.r_offset >= target.data.size())
                continue;
            switch (type) {
            case R_X86_64_64:
                if (r.r_offset + 8 <= target.data.size())
                    std::memcpy(target.data.data() + r.r_offset, &value, 8);
                break;
            case R_X86_64_32:
            case R_X86_64_32S: {
                std::uint32_t v32 = static_cast<std::uint32_t>(value);
                if (r.r_offset + 4 <= target.data.size())
                    std::memcpy(target.data.data() + r.r_offset, &v32, 4);
                break;
            }
            default:
                break; // debug sections only use absolute word relocations
            }
        }
    }
}

const ElfSection* ElfFile::section(std::string_view name) const {
    for (const auto& s : sections_)
        if (s.name == name)
            return &s;
    return nullptr;
}

} // namespace dicov
