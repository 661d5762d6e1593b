#include <algorithm>

#include "dwarf_internal.hpp"

namespace dicov::dwarf {
namespace {

// DW_LNCT_*
enum : std::uint64_t {
    LNCT_path = 1,
    LNCT_directory_index = 2,
};

// DW_LNS_* / DW_LNE_*
enum : std::uint8_t {
    LNS_copy = 1,
    LNS_advance_pc = 2,
    LNS_advance_line = 3,
    LNS_set_file = 4,
    LNS_set_column = 5,
    LNS_negate_stmt = 6,
    LNS_set_basic_block = 7,
    LNS_const_add_pc = 8,
    LNS_fixed_advance_pc = 9,
    LNS_set_prologue_end = 10,
    LNS_set_epilogue_begin = 11,
    LNS_set_isa = 12,
    LNE_end_sequence = 1,
    LNE_set_address = 2,
    LNE_define_file = 3,
    LNE_set_discriminator = 4,
};

std::string_view str_at(std::span<const std::uint8_t> section, std::uint64_t offset,
                        const char* name) {
    if (offset >= section.size())
        throw decode_at(name, offset, "string offset out of bounds");
    const char* start = reinterpret_cast<const char*>(section.data() + offset);
    std::uint64_t end = offset;
    while (end < section.size() && section[end] != 0)
        ++end;
    return {start, end - offset};
}

bool absolute(const std::string& p) { return !p.empty() && p[0] == '/'; }

std::string join(const std::string& a, const std::string& b) {
    if (b.empty())
        return a;
    if (absolute(b) || a.empty())
        return b;
    return a + "/" + b;
}

struct EntryValue {
    std::string str;
    std::uint64_t num = 0;
};

EntryValue read_entry_form(Cursor& c, std::uint64_t form, std::uint8_t offset_size,
                           std::span<const std::uint8_t> line_str,
                           std::span<const std::uint8_t> str) {
    EntryValue v;
    switch (form) {
    case FORM_string: v.str = std::string(c.cstr()); break;
    case FORM_line_strp:
        v.str = std::string(str_at(line_str, c.fixed(offset_size), ".debug_line_str"));
        break;
    case FORM_strp: v.str = std::string(str_at(str, c.fixed(offset_size), ".debug_str")); break;
    case FORM_udata: v.num = c.uleb(); break;
    case FORM_data1: v.num = c.u8(); break;
    case FORM_data2: v.num = c.u16(); break;
    case FORM_data4: v.num = c.u32(); break;
    case FORM_data8: v.num = c.u64(); break;
    case FORM_data16: c.bytes(16); break; // MD5, ignored
    case FORM_block: c.bytes(c.uleb()); break;
    default:
        c.fail("unsupported form 0x" + std::to_string(form) + " in line table header");
    }
    return v;
}

} // namespace

LineProgram decode_line_program(std::span<const std::uint8_t> line_section,
                                std::span<const std::uint8_t> line_str,
                                std::span<const std::uint8_t> str,
                                std::uint64_t offset, const std::string& comp_dir) {
    Cursor c(line_section, ".debug_line", offset);

    std::uint64_t unit_length = c.u32();
    std::uint8_t offset_size = 4;
    if (unit_length == 0xffffffffu) {
        offset_size = 8;
        unit_length = c.u64();
    }
    std::uint64_t unit_end = c.pos() + unit_length;
    std::uint16_t version = c.u16();
    if (version < 2 || version > 5)
        c.fail("unsupported line table version " + std::to_string(version));
    std::uint8_t address_size = 8;
    if (version >= 5) {
        address_size = c.u8();
        c.u8(); // segment selector size
    }
    std::uint64_t header_length = c.fixed(offset_size);
    std::uint64_t program_start = c.pos() + header_length;
    std::uint8_t min_inst = c.u8();
    std::uint8_t max_ops = version >= 4 ? c.u8() : 1;
    if (max_ops == 0)
        max_ops = 1;
    bool default_is_stmt = c.u8() != 0;
    auto line_base = static_cast<std::int8_t>(c.u8());
    std::uint8_t line_range = c.u8();
    std::uint8_t opcode_base = c.u8();
    if (line_range == 0)
        c.fail("line_range must be nonzero");
    std::vector<std::uint8_t> std_lens;
    for (unsigned i = 1; i < opcode_base; ++i)
        std_lens.push_back(c.u8());

    LineProgram out;
    std::vector<std::string> dirs;
    if (version >= 5) {
        std::uint8_t dir_formats = c.u8();
        std::vector<std::pair<std::uint64_t, std::uint64_t>> dfmt;
        for (unsigned i = 0; i < dir_formats; ++i) {
            std::uint64_t ct = c.uleb();
            std::uint64_t form = c.uleb();
            dfmt.emplace_back(ct, form);
        }
        std::uint64_t dir_count = c.uleb();
        for (std::uint64_t i = 0; i < dir_count; ++i) {
            std::string path;
            for (auto [ct, form] : dfmt) {
                auto v = read_entry_form(c, form, offset_size, line_str, str);
                if (ct == LNCT_path)
                    path = v.str;
            }
            dirs.push_back(path);
        }
        std::uint8_t file_formats = c.u8();
        std::vector<std::pair<std::uint64_t, std::uint64_t>> ffmt;
        for (unsigned i = 0; i < file_formats; ++i) {
            std::uint64_t ct = c.uleb();
            std::uint64_t form = c.uleb();
            ffmt.emplace_back(ct, form);
        }
        std::uint64_t file_count = c.uleb();
        for (std::uint64_t i = 0; i < file_count; ++i) {
            std::string path;
            std::uint64_t dir_idx = 0;
            for (auto [ct, form] : ffmt) {
                auto v = read_entry_form(c, form, offset_size, line_str, str);
                if (ct == LNCT_path)
                    path = v.str;
                else if (ct == LNCT_directory_index)
                    dir_idx = v.num;
            }
            std::string dir = dir_idx < dirs.size() ? dirs[dir_idx] : std::string();
            out.file_paths.push_back(join(comp_dir, join(dir, path)));
        }
    } else {
        while (true) {
            std::string_view d = c.cstr();
            if (d.empty())
                break;
            dirs.emplace_back(d);
        }
        out.file_paths.emplace_back(); // index 0 is unused in v4
        while (true) {
            std::string_view name = c.cstr();
            if (name.empty())
                break;
            std::uint64_t dir_idx = c.uleb();
            c.uleb(); // mtime
            c.uleb(); // size
            std::string dir = dir_idx >= 1 && dir_idx <= dirs.size() ? dirs[dir_idx - 1]
                                                                     : std::string();
            out.file_paths.push_back(join(comp_dir, join(dir, std::string(name))));
        }
    }

    // State machine registers.
    c.seek(program_start);
    std::uint64_t address = 0;
    std::uint64_t op_index = 0;
    std::uint64_t file = version >= 5 ? 0 : 1;
    std::int64_t line = 1;
    bool is_stmt = default_is_stmt;

    auto advance_pc = [&](std::uint64_t op_advance) {
        address += min_inst * ((op_index + op_advance) / max_ops);
        op_index = (op_index + op_advance) % max_ops;
    };
    auto emit = [&]() {
        if (line > 0)
            out.rows.push_back({address, file, static_cast<std::uint32_t>(line), is_stmt});
    };

    while (c.pos() < unit_end) {
        std::uint8_t op = c.u8();
        if (op == 0) {
            std::uint64_t len = c.uleb();
            std::uint64_t next = c.pos() + len;
            if (len == 0)
                continue;
            std::uint8_t sub = c.u8();
            switch (sub) {
            case LNE_end_sequence:
                address = 0;
                op_index = 0;
                file = version >= 5 ? 0 : 1;
                line = 1;
                is_stmt = default_is_stmt;
                break;
            case LNE_set_address:
                address = c.fixed(address_size);
                op_index = 0;
                break;
            case LNE_define_file: {
                std::string_view name = c.cstr();
                std::uint64_t dir_idx = c.uleb();
                c.uleb();
                c.uleb();
                std::string dir = dir_idx >= 1 && dir_idx <= dirs.size() ? dirs[dir_idx - 1]
                                                                         : std::string();
                out.file_paths.push_back(join(comp_dir, join(dir, std::string(name))));
                break;
            }
            case LNE_set_discriminator:
                c.uleb();
                break;
            default:
                break; // vendor extension: skipped via length
            }
            c.seek(next);
        } else if (op < opcode_base) {
            switch (op) {
            case LNS_copy: emit(); break;
            case LNS_advance_pc: advance_pc(c.uleb()); break;
            case LNS_advance_line: line += c.sleb(); break;
            case LNS_set_file: file = c.uleb(); break;
            case LNS_set_column: c.uleb(); break;
            case LNS_negate_stmt: is_stmt = !is_stmt; break;
            case LNS_set_basic_block: break;
            case LNS_const_add_pc:
                advance_pc(static_cast<std::uint64_t>(255 - opcode_base) / line_range);
                break;
            case LNS_fixed_advance_pc:
                address += c.u16();
                op_index = 0;
                break;
            case LNS_set_prologue_end:
            case LNS_set_epilogue_begin:
                break;
            case LNS_set_isa:
                c.uleb();
                break;
            default:
                // Unknown standard opcode: its operand count is declared.
                for (unsigned i = 0; i < std_lens[op - 1]; ++i)
                    c.uleb();
                break;
            }
        } else {
            std::uint8_t adjusted = op - opcode_base;
            advance_pc(adjusted / line_range);
            line += line_base + adjusted % line_range;
            emit();
        }
    }
    return out;
}

DescKind classify_expression(std::span<const std::uint8_t> expr) {
    // DW_OP_* opcodes of interest.
    constexpr std::uint8_t OP_addr = 0x03;
    constexpr std::uint8_t OP_const1u = 0x08;
    constexpr std::uint8_t OP_consts = 0x11;
    constexpr std::uint8_t OP_lit0 = 0x30;
    constexpr std::uint8_t OP_lit31 = 0x4f;
    constexpr std::uint8_t OP_reg0 = 0x50;
    constexpr std::uint8_t OP_reg31 = 0x6f;
    constexpr std::uint8_t OP_breg0 = 0x70;
    constexpr std::uint8_t OP_breg31 = 0x8f;
    constexpr std::uint8_t OP_regx = 0x90;
    constexpr std::uint8_t OP_fbreg = 0x91;
    constexpr std::uint8_t OP_bregx = 0x92;
    constexpr std::uint8_t OP_implicit_value = 0x9e;
    constexpr std::uint8_t OP_stack_value = 0x9f;
    constexpr std::uint8_t OP_implicit_pointer = 0xa0;
    constexpr std::uint8_t OP_entry_value = 0xa3;
    constexpr std::uint8_t OP_GNU_entry_value = 0xf3;
    constexpr std::uint8_t OP_GNU_implicit_pointer = 0xf2;

    if (expr.empty())
        return DescKind::MemoryLocation;
    if (expr.size() == 1 && expr[0] >= OP_reg0 && expr[0] <= OP_reg31)
        return DescKind::RegisterLocation;

    bool has_value_marker = false;
    bool reads_machine_state = false;
    bool scan_complete = true;
    Cursor c(expr, "DWARF expression");
    while (!c.eof()) {
        std::uint8_t op = c.u8();
        if (op == OP_regx) {
            std::uint64_t reg = c.uleb();
            (void)reg;
            if (c.eof() && expr[0] == OP_regx)
                return DescKind::RegisterLocation;
            reads_machine_state = true;
            continue;
        }
        if (op >= OP_reg0 && op <= OP_reg31) { reads_machine_state = true; continue; }
        if (op >= OP_breg0 && op <= OP_breg31) { c.sleb(); reads_machine_state = true; continue; }
        if (op >= OP_lit0 && op <= OP_lit31)
            continue;
        switch (op) {
        case OP_addr: c.fixed(8); reads_machine_state = true; break;
        case OP_const1u: c.u8(); break;
        case 0x09: c.u8(); break;            // const1s
        case 0x0a: c.u16(); break;           // const2u
        case 0x0b: c.u16(); break;           // const2s
        case 0x0c: c.u32(); break;           // const4u
        case 0x0d: c.u32(); break;           // const4s
        case 0x0e: c.u64(); break;           // const8u
        case 0x0f: c.u64(); break;           // const8s
        case 0x10: c.uleb(); break;          // constu
        case OP_consts: c.sleb(); break;
        case OP_fbreg: c.sleb(); reads_machine_state = true; break;
        case OP_bregx: c.uleb(); c.sleb(); reads_machine_state = true; break;
        case OP_implicit_value: {
            std::uint64_t n = c.uleb();
            c.bytes(n);
            has_value_marker = true;
            break;
        }
        case OP_stack_value:
            has_value_marker = true;
            break;
        case OP_implicit_pointer:
        case OP_GNU_implicit_pointer:
            c.fixed(4); // offset size in practice here
            c.sleb();
            has_value_marker = true;
            reads_machine_state = true;
            break;
        case OP_entry_value:
        case OP_GNU_entry_value: {
            std::uint64_t n = c.uleb();
            c.bytes(n);
            reads_machine_state = true;
            break;
        }
        case 0x9c: break;                    // call_frame_cfa
        case 0x06: break;                    // deref
        case 0x94: c.u8(); break;            // deref_size
        case 0x1c: case 0x1d: case 0x1e: case 0x1f: case 0x20: case 0x21: case 0x22:
        case 0x24: case 0x25: case 0x26: case 0x27:
        case 0x29: case 0x2a: case 0x2b: case 0x2c: case 0x2d: case 0x2e:
        case 0x19: case 0x12: case 0x13: case 0x14: case 0x15: case 0x16: case 0x17:
            break;                           // pure stack arithmetic
        case 0x23: c.uleb(); break;          // plus_uconst
        case 0x28: c.u16(); break;           // bra
        case 0x2f: c.u16(); break;           // skip
        case 0xa1: c.uleb(); break;          // addrx
        case 0xa2: c.uleb(); break;          // constx
        case 0x93: c.uleb(); break;          // piece
        case 0x9d: c.uleb(); c.uleb(); break; // bit_piece
        default:
            // Unknown operand layout: stop scanning, fall back on what has
            // been seen so far.
            scan_complete = false;
            break;
        }
        if (!scan_complete)
            break;
    }

    if (has_value_marker)
        return reads_machine_state ? DescKind::ValueExpression : DescKind::LiteralValue;
    return DescKind::MemoryLocation;
}

} // namespace dicov::dwarf
