#pragma once

// Internal DWARF 4/5 decoding shared between the DIE walker and the line
// program interpreter. Only load_binary() is public API.

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "dicov/error.hpp"
#include "dicov/model.hpp"

namespace dicov::dwarf {

// DW_TAG_*
enum : std::uint64_t {
    TAG_formal_parameter = 0x05,
    TAG_lexical_block = 0x0b,
    TAG_compile_unit = 0x11,
    TAG_inlined_subroutine = 0x1d,
    TAG_subprogram = 0x2e,
    TAG_variable = 0x34,
    TAG_partial_unit = 0x3c,
};

// DW_AT_*
enum : std::uint64_t {
    AT_location = 0x02,
    AT_name = 0x03,
    AT_stmt_list = 0x10,
    AT_low_pc = 0x11,
    AT_high_pc = 0x12,
    AT_comp_dir = 0x1b,
    AT_const_value = 0x1c,
    AT_inline = 0x20,
    AT_abstract_origin = 0x31,
    AT_artificial = 0x34,
    AT_decl_file = 0x3a,
    AT_decl_line = 0x3b,
    AT_declaration = 0x3c,
    AT_specification = 0x47,
    AT_ranges = 0x55,
    AT_str_offsets_base = 0x72,
    AT_addr_base = 0x73,
    AT_rnglists_base = 0x74,
    AT_loclists_base = 0x8c,
};

// DW_FORM_*
enum : std::uint64_t {
    FORM_addr = 0x01,
    FORM_block2 = 0x03,
    FORM_block4 = 0x04,
    FORM_data2 = 0x05,
    FORM_data4 = 0x06,
    FORM_data8 = 0x07,
    FORM_string = 0x08,
    FORM_block = 0x09,
    FORM_block1 = 0x0a,
    FORM_data1 = 0x0b,
    FORM_flag = 0x0c,
    FORM_sdata = 0x0d,
    FORM_strp = 0x0e,
    FORM_udata = 0x0f,
    FORM_ref_addr = 0x10,
    FORM_ref1 = 0x11,
    FORM_ref2 = 0x12,
    FORM_ref4 = 0x13,
    FORM_ref8 = 0x14,
    FORM_ref_udata = 0x15,
    FORM_indirect = 0x16,
    FORM_sec_offset = 0x17,
    FORM_exprloc = 0x18,
    FORM_flag_present = 0x19,
    FORM_strx = 0x1a,
    FORM_addrx = 0x1b,
    FORM_ref_sup4 = 0x1c,
    FORM_strp_sup = 0x1d,
    FORM_data16 = 0x1e,
    FORM_line_strp = 0x1f,
    FORM_ref_sig8 = 0x20,
    FORM_implicit_const = 0x21,
    FORM_loclistx = 0x22,
    FORM_rnglistx = 0x23,
    FORM_ref_sup8 = 0x24,
    FORM_strx1 = 0x25,
    FORM_strx2 = 0x26,
    FORM_strx3 = 0x27,
    FORM_strx4 = 0x28,
    FORM_addrx1 = 0x29,
    FORM_addrx2 = 0x2a,
    FORM_addrx3 = 0x2b,
    FORM_addrx4 = 0x2c,
};

// Bounds-checked little-endian byte cursor.
class Cursor {
public:
    Cursor(std::span<const std::uint8_t> data, std::string section)
        : data_(data), section_(std::move(section)) {}
    Cursor(std::span<const std::uint8_t> data, std::string section, std::uint64_t pos)
        : data_(data), section_(std::move(section)), pos_(pos) {}

    std::uint64_t pos() const { return pos_; }
    bool eof() const { return pos_ >= data_.size(); }
    std::uint64_t remaining() const { return data_.size() - pos_; }
    const std::string& section() const { return section_; }
    void seek(std::uint64_t pos) { pos_ = pos; }

    [[noreturn]] void fail(const std::string& msg) const {
        throw decode_at(section_, pos_, msg);
    }

    std::uint8_t u8() { return static_cast<std::uint8_t>(fixed(1)); }
    std::uint16_t u16() { return static_cast<std::uint16_t>(fixed(2)); }
    std::uint32_t u32() { return static_cast<std::uint32_t>(fixed(4)); }
    std::uint64_t u64() { return fixed(8); }
    std::uint64_t fixed(unsigned n) {
        if (pos_ + n > data_.size())
            fail("truncated record");
        std::uint64_t v = 0;
        for (unsigned i = 0; i < n; ++i)
            v |= static_cast<std::uint64_t>(data_[pos_ + i]) << (8 * i);
        pos_ += n;
        return v;
    }

    std::uint64_t uleb() {
        std::uint64_t v = 0;
        unsigned shift = 0;
        while (true) {
            if (eof())
                fail("truncated LEB128");
            std::uint8_t b = data_[pos_++];
            if (shift < 64)
                v |= static_cast<std::uint64_t>(b & 0x7f) << shift;
            if (!(b & 0x80))
                return v;
            shift += 7;
        }
    }

    std::int64_t sleb() {
        std::int64_t v = 0;
        unsigned shift = 0;
        std::uint8_t b = 0;
        do {
            if (eof())
                fail("truncated LEB128");
            b = data_[pos_++];
            if (shift < 64)
                v |= static_cast<std::int64_t>(static_cast<std::uint64_t>(b & 0x7f) << shift);
            shift += 7;
        } while (b & 0x80);
        if (shift < 64 && (b & 0x40))
            v |= -(static_cast<std::int64_t>(1) << shift);
        return v;
    }

    std::span<const std::uint8_t> bytes(std::uint64_t n) {
        if (pos_ + n > data_.size())
            fail("truncated byte block");
        auto out = data_.subspan(pos_, n);
        pos_ += n;
        return out;
    }

    std::string_view cstr() {
        std::uint64_t start = pos_;
        while (pos_ < data_.size() && data_[pos_] != 0)
            ++pos_;
        if (pos_ >= data_.size())
            fail("unterminated string");
        std::string_view out(reinterpret_cast<const char*>(data_.data() + start), pos_ - start);
        ++pos_;
        return out;
    }

private:
    std::span<const std::uint8_t> data_;
    std::string section_;
    std::uint64_t pos_ = 0;
};

struct AttrSpec {
    std::uint64_t attr = 0;
    std::uint64_t form = 0;
    std::int64_t implicit_const = 0;
};

struct Abbrev {
    std::uint64_t tag = 0;
    bool has_children = false;
    std::vector<AttrSpec> attrs;
};

struct AttrValue {
    std::uint64_t attr = 0;
    std::uint64_t form = 0;
    std::uint64_t uval = 0;
    std::int64_t sval = 0;
    std::string_view str;
    std::span<const std::uint8_t> block;
};

struct Die {
    std::uint64_t offset = 0;
    std::uint64_t tag = 0;
    std::vector<AttrValue> attrs;
    std::vector<Die> children;

    const AttrValue* attr(std::uint64_t a) const {
        for (const auto& v : attrs)
            if (v.attr == a)
                return &v;
        return nullptr;
    }
};

struct Unit {
    std::uint64_t offset = 0;
    std::uint16_t version = 0;
    std::uint8_t addr_size = 8;
    std::uint8_t offset_size = 4;
    std::uint64_t abbrev_offset = 0;
    std::uint64_t base_addr = 0;
    bool has_base_addr = false;
    std::uint64_t str_offsets_base = 8;
    std::uint64_t addr_base = 8;
    std::uint64_t rnglists_base = 12;
    std::uint64_t loclists_base = 12;
    std::string comp_dir;
    std::string unit_name;
    Die root;
    std::vector<FileId> file_map; // line-table file index -> model file id
    bool has_stmt_list = false;
    std::uint64_t stmt_list = 0;
};

struct LineRowRaw {
    std::uint64_t address = 0;
    std::uint64_t file = 0;
    std::uint32_t line = 0;
    bool is_stmt = true;
};

struct LineProgram {
    std::vector<std::string> file_paths; // index -> full path ("" when absent)
    std::vector<LineRowRaw> rows;
};

// Decodes one line program at `offset`; paths are joined against comp_dir.
LineProgram decode_line_program(std::span<const std::uint8_t> line_section,
                                std::span<const std::uint8_t> line_str,
                                std::span<const std::uint8_t> str,
                                std::uint64_t offset, const std::string& comp_dir);

// Classification of a location/value expression into the four description
// kinds; the expression is scanned, never evaluated.
DescKind classify_expression(std::span<const std::uint8_t> expr);

} // namespace dicov::dwarf
