#include <algorithm>
#include <map>
#include <set>

#include "dicov/elf.hpp"
#include "dicov/error.hpp"
#include "dicov/model.hpp"
#include "dwarf_internal.hpp"

namespace dicov {
namespace dwarf {
namespace {

std::span<const std::uint8_t> section_span(const ElfFile& elf, const char* name) {
    const ElfSection* s = elf.section(name);
    if (!s)
        return {};
    return {s->data.data(), s->data.size()};
}

struct DieRef {
    const Die* die = nullptr;
    const Unit* unit = nullptr;
};

class Reader {
public:
    explicit Reader(const ElfFile& elf)
        : elf_(elf),
          info_(section_span(elf, ".debug_info")),
          abbrev_(section_span(elf, ".debug_abbrev")),
          str_(section_span(elf, ".debug_str")),
          line_str_(section_span(elf, ".debug_line_str")),
          str_offsets_(section_span(elf, ".debug_str_offsets")),
          addr_(section_span(elf, ".debug_addr")),
          ranges_(section_span(elf, ".debug_ranges")),
          rnglists_(section_span(elf, ".debug_rnglists")),
          loc_(section_span(elf, ".debug_loc")),
          loclists_(section_span(elf, ".debug_loclists")),
          line_(section_span(elf, ".debug_line")) {}

    NeutralDebugModel run() {
        parse_units();
        for (auto& unit : units_)
            index_die(unit.root, unit);
        for (auto& unit : units_)
            decode_lines(unit);
        for (auto& unit : units_)
            build_functions(unit);
        finish();
        return std::move(model_);
    }

private:
    // ---- unit and DIE parsing ----

    void parse_units() {
        Cursor c(info_, ".debug_info");
        while (!c.eof()) {
            std::uint64_t unit_offset = c.pos();
            std::uint64_t length = c.u32();
            std::uint8_t offset_size = 4;
            if (length == 0xffffffffu) {
                offset_size = 8;
                length = c.u64();
            }
            if (length == 0)
                break;
            std::uint64_t next_unit = c.pos() + length;
            Unit unit;
            unit.offset = unit_offset;
            unit.offset_size = offset_size;
            unit.version = static_cast<std::uint16_t>(c.u16());
            if (unit.version < 4 || unit.version > 5)
                throw decode_at(".debug_info", unit_offset,
                                "unsupported DWARF version " + std::to_string(unit.version) +
                                    " (supported: 4, 5)");
            bool skip_unit = false;
            if (unit.version >= 5) {
                std::uint8_t unit_type = c.u8();
                unit.addr_size = c.u8();
                unit.abbrev_offset = c.fixed(offset_size);
                if (unit_type == 0x02 || unit_type == 0x06) // type units
                    { c.u64(); c.fixed(offset_size); skip_unit = true; }
                else if (unit_type == 0x04 || unit_type == 0x05) // skeleton/split
                    { c.u64(); skip_unit = true; }
                else if (unit_type != 0x01 && unit_type != 0x03)
                    skip_unit = true;
            } else {
                unit.abbrev_offset = c.fixed(offset_size);
                unit.addr_size = c.u8();
            }
            if (!skip_unit) {
                const auto& abbrevs = abbrev_table(unit.abbrev_offset);
                unit.root = parse_die(c, unit, abbrevs, next_unit);
                apply_unit_attrs(unit);
            }
            c.seek(next_unit);
            if (!skip_unit)
                units_.push_back(std::move(unit));
        }
    }

    const std::map<std::uint64_t, Abbrev>& abbrev_table(std::uint64_t offset) {
        auto it = abbrev_cache_.find(offset);
        if (it != abbrev_cache_.end())
            return it->second;
        std::map<std::uint64_t, Abbrev> table;
        Cursor c(abbrev_, ".debug_abbrev", offset);
        while (!c.eof()) {
            std::uint64_t code = c.uleb();
            if (code == 0)
                break;
            Abbrev a;
            a.tag = c.uleb();
            a.has_children = c.u8() != 0;
            while (true) {
                AttrSpec spec;
                spec.attr = c.uleb();
                spec.form = c.uleb();
                if (spec.form == FORM_implicit_const)
                    spec.implicit_const = c.sleb();
                if (spec.attr == 0 && spec.form == 0)
                    break;
                a.attrs.push_back(spec);
            }
            table.emplace(code, std::move(a));
        }
        return abbrev_cache_.emplace(offset, std::move(table)).first->second;
    }

    AttrValue read_form(Cursor& c, const Unit& unit, std::uint64_t attr, std::uint64_t form,
                        std::int64_t implicit_const) {
        AttrValue v;
        v.attr = attr;
        v.form = form;
        switch (form) {
        case FORM_addr: v.uval = c.fixed(unit.addr_size); break;
        case FORM_block2: v.block = c.bytes(c.u16()); break;
        case FORM_block4: v.block = c.bytes(c.u32()); break;
        case FORM_data2: v.uval = c.u16(); break;
        case FORM_data4: v.uval = c.u32(); break;
        case FORM_data8: v.uval = c.u64(); break;
        case FORM_data16: v.block = c.bytes(16); break;
        case FORM_string: v.str = c.cstr(); break;
        case FORM_block: v.block = c.bytes(c.uleb()); break;
        case FORM_block1: v.block = c.bytes(c.u8()); break;
        case FORM_data1: v.uval = c.u8(); break;
        case FORM_flag: v.uval = c.u8(); break;
        case FORM_sdata: v.sval = c.sleb(); v.uval = static_cast<std::uint64_t>(v.sval); break;
        case FORM_udata: v.uval = c.uleb(); break;
        case FORM_exprloc: v.block = c.bytes(c.uleb()); break;
        case FORM_flag_present: v.uval = 1; break;
        case FORM_implicit_const:
            v.sval = implicit_const;
            v.uval = static_cast<std::uint64_t>(implicit_const);
            break;
        case FORM_sec_offset: v.uval = c.fixed(unit.offset_size); break;
        case FORM_strp: v.str = str_at(str_, c.fixed(unit.offset_size), ".debug_str"); break;
        case FORM_line_strp:
            v.str = str_at(line_str_, c.fixed(unit.offset_size), ".debug_line_str");
            break;
        case FORM_strp_sup: c.fixed(unit.offset_size); break;
        case FORM_strx: v.uval = c.uleb(); break;
        case FORM_strx1: v.uval = c.u8(); break;
        case FORM_strx2: v.uval = c.u16(); break;
        case FORM_strx3: v.uval = c.fixed(3); break;
        case FORM_strx4: v.uval = c.u32(); break;
        case FORM_addrx: v.uval = c.uleb(); break;
        case FORM_addrx1: v.uval = c.u8(); break;
        case FORM_addrx2: v.uval = c.u16(); break;
        case FORM_addrx3: v.uval = c.fixed(3); break;
        case FORM_addrx4: v.uval = c.u32(); break;
        case FORM_ref1: v.uval = unit.offset + c.u8(); break;
        case FORM_ref2: v.uval = unit.offset + c.u16(); break;
        case FORM_ref4: v.uval = unit.offset + c.u32(); break;
        case FORM_ref8: v.uval = unit.offset + c.u64(); break;
        case FORM_ref_udata: v.uval = unit.offset + c.uleb(); break;
        case FORM_ref_addr: v.uval = c.fixed(unit.offset_size); break;
        case FORM_ref_sig8: v.uval = c.u64(); break;
        case FORM_ref_sup4: c.u32(); break;
        case FORM_ref_sup8: c.u64(); break;
        case FORM_loclistx: v.uval = c.uleb(); break;
        case FORM_rnglistx: v.uval = c.uleb(); break;
        case FORM_indirect:
            return read_form(c, unit, attr, c.uleb(), 0);
        default:
            c.fail("unknown attribute form 0x" + std::to_string(form));
        }
        return v;
    }

    Die parse_die(Cursor& c, const Unit& unit, const std::map<std::uint64_t, Abbrev>& abbrevs,
                  std::uint64_t unit_end) {
        Die die;
        die.offset = c.pos();
        std::uint64_t code = c.uleb();
        if (code == 0) {
            die.tag = 0;
            return die;
        }
        auto it = abbrevs.find(code);
        if (it == abbrevs.end())
            throw decode_at(".debug_info", die.offset,
                            "reference to missing abbreviation code " + std::to_string(code));
        const Abbrev& a = it->second;
        die.tag = a.tag;
        for (const auto& spec : a.attrs)
            die.attrs.push_back(read_form(c, unit, spec.attr, spec.form, spec.implicit_const));
        if (a.has_children) {
            while (c.pos() < unit_end) {
                Die child = parse_die(c, unit, abbrevs, unit_end);
                if (child.tag == 0)
                    break;
                die.children.push_back(std::move(child));
            }
        }
        return die;
    }

    void apply_unit_attrs(Unit& unit) {
        if (const AttrValue* v = unit.root.attr(AT_str_offsets_base))
            unit.str_offsets_base = v->uval;
        if (const AttrValue* v = unit.root.attr(AT_addr_base))
            unit.addr_base = v->uval;
        if (const AttrValue* v = unit.root.attr(AT_rnglists_base))
            unit.rnglists_base = v->uval;
        if (const AttrValue* v = unit.root.attr(AT_loclists_base))
            unit.loclists_base = v->uval;
        if (const AttrValue* v = unit.root.attr(AT_low_pc)) {
            unit.base_addr = address_of(unit, *v);
            unit.has_base_addr = true;
        }
        if (const AttrValue* v = unit.root.attr(AT_comp_dir))
            unit.comp_dir = std::string(string_of(unit, *v));
        if (const AttrValue* v = unit.root.attr(AT_name))
            unit.unit_name = std::string(string_of(unit, *v));
        if (const AttrValue* v = unit.root.attr(AT_stmt_list)) {
            unit.has_stmt_list = true;
            unit.stmt_list = v->uval;
        }
    }

    static std::string_view str_at(std::span<const std::uint8_t> section, std::uint64_t offset,
                                   const char* name) {
        if (offset >= section.size())
            throw decode_at(name, offset, "string offset out of bounds");
        std::uint64_t end = offset;
        while (end < section.size() && section[end] != 0)
            ++end;
        return {reinterpret_cast<const char*>(section.data() + offset), end - offset};
    }

    std::string_view string_of(const Unit& unit, const AttrValue& v) {
        switch (v.form) {
        case FORM_string:
        case FORM_strp:
        case FORM_line_strp:
            return v.str;
        case FORM_strx:
        case FORM_strx1:
        case FORM_strx2:
        case FORM_strx3:
        case FORM_strx4: {
            std::uint64_t entry = unit.str_offsets_base + v.uval * unit.offset_size;
            Cursor c(str_offsets_, ".debug_str_offsets", entry);
            return str_at(str_, c.fixed(unit.offset_size), ".debug_str");
        }
        default:
            return {};
        }
    }

    std::uint64_t address_of(const Unit& unit, const AttrValue& v) {
        switch (v.form) {
        case FORM_addr:
            return v.uval;
        case FORM_addrx:
        case FORM_addrx1:
        case FORM_addrx2:
        case FORM_addrx3:
        case FORM_addrx4: {
            Cursor c(addr_, ".debug_addr", unit.addr_base + v.uval * unit.addr_size);
            return c.fixed(unit.addr_size);
        }
        default:
            return v.uval;
        }
    }

    std::uint64_t indexed_addr(const Unit& unit, std::uint64_t index) {
        Cursor c(addr_, ".debug_addr", unit.addr_base + index * unit.addr_size);
        return c.fixed(unit.addr_size);
    }

    void index_die(const Die& die, const Unit& unit) {
        if (die.tag != 0)
            die_index_[die.offset] = {&die, &unit};
        for (const auto& child : die.children)
            index_die(child, unit);
    }

    // Follows abstract_origin/specification to find an attribute; returns
    // the providing DIE so per-unit values (decl_file) resolve correctly.
    struct FoundAttr {
        const AttrValue* value = nullptr;
        const Unit* unit = nullptr;
    };

    FoundAttr chase(const Die& die, const Unit& unit, std::uint64_t attr, int depth = 0) {
        if (depth > 16)
            return {};
        if (const AttrValue* v = die.attr(attr))
            return {v, &unit};
        for (std::uint64_t link : {static_cast<std::uint64_t>(AT_abstract_origin),
                                   static_cast<std::uint64_t>(AT_specification)}) {
            if (const AttrValue* ref = die.attr(link)) {
                auto it = die_index_.find(ref->uval);
                if (it != die_index_.end()) {
                    FoundAttr found = chase(*it->second.die, *it->second.unit, attr, depth + 1);
                    if (found.value)
                        return found;
                }
            }
        }
        return {};
    }

    std::string name_of(const Die& die, const Unit& unit) {
        FoundAttr f = chase(die, unit, AT_name);
        if (!f.value)
            return {};
        return std::string(string_of(*f.unit, *f.value));
    }

    // ---- ranges ----

    std::vector<AddressRange> ranges_v4(const Unit& unit, std::uint64_t offset) {
        std::vector<AddressRange> out;
        Cursor c(ranges_, ".debug_ranges", offset);
        std::uint64_t base = unit.base_addr;
        std::uint64_t max_addr = unit.addr_size == 8 ? UINT64_MAX : 0xffffffffu;
        while (true) {
            std::uint64_t begin = c.fixed(unit.addr_size);
            std::uint64_t end = c.fixed(unit.addr_size);
            if (begin == max_addr) {
                base = end;
                continue;
            }
            if (begin == 0 && end == 0)
                break;
            out.push_back({base + begin, base + end});
        }
        return out;
    }

    std::vector<AddressRange> ranges_v5(const Unit& unit, std::uint64_t offset) {
        std::vector<AddressRange> out;
        Cursor c(rnglists_, ".debug_rnglists", offset);
        std::uint64_t base = unit.base_addr;
        while (true) {
            std::uint8_t kind = c.u8();
            if (kind == 0x00) // end_of_list
                break;
            switch (kind) {
            case 0x01: // base_addressx
                base = indexed_addr(unit, c.uleb());
                break;
            case 0x02: { // startx_endx
                std::uint64_t lo = indexed_addr(unit, c.uleb());
                std::uint64_t hi = indexed_addr(unit, c.uleb());
                out.push_back({lo, hi});
                break;
            }
            case 0x03: { // startx_length
                std::uint64_t start = indexed_addr(unit, c.uleb());
                std::uint64_t len = c.uleb();
                out.push_back({start, start + len});
                break;
            }
            case 0x04: { // offset_pair
                std::uint64_t lo = c.uleb(), hi = c.uleb();
                out.push_back({base + lo, base + hi});
                break;
            }
            case 0x05: // base_address
                base = c.fixed(unit.addr_size);
                break;
            case 0x06: { // start_end
                std::uint64_t lo = c.fixed(unit.addr_size);
                std::uint64_t hi = c.fixed(unit.addr_size);
                out.push_back({lo, hi});
                break;
            }
            case 0x07: { // start_length
                std::uint64_t lo = c.fixed(unit.addr_size);
                std::uint64_t len = c.uleb();
                out.push_back({lo, lo + len});
                break;
            }
            default:
                c.fail("unknown range list entry kind " + std::to_string(kind));
            }
        }
        return out;
    }

    std::uint64_t list_offset(const Unit& unit, const AttrValue& v, std::uint64_t base,
                              std::span<const std::uint8_t> section, const char* name) {
        if (v.form == FORM_rnglistx || v.form == FORM_loclistx) {
            Cursor c(section, name, base + v.uval * unit.offset_size);
            return base + c.fixed(unit.offset_size);
        }
        return v.uval; // sec_offset
    }

    std::vector<AddressRange> die_ranges(const Die& die, const Unit& unit) {
        std::vector<AddressRange> out;
        const AttrValue* low = die.attr(AT_low_pc);
        const AttrValue* high = die.attr(AT_high_pc);
        if (low) {
            std::uint64_t lo = address_of(unit, *low);
            if (high) {
                bool addr_class = high->form == FORM_addr || high->form == FORM_addrx ||
                                  (high->form >= FORM_addrx1 && high->form <= FORM_addrx4);
                std::uint64_t hi = addr_class ? address_of(unit, *high) : lo + high->uval;
                out.push_back({lo, hi});
            }
        }
        if (const AttrValue* r = die.attr(AT_ranges)) {
            std::uint64_t off = unit.version >= 5
                                    ? list_offset(unit, *r, unit.rnglists_base, rnglists_,
                                                  ".debug_rnglists")
                                    : r->uval;
            auto listed = unit.version >= 5 ? ranges_v5(unit, off) : ranges_v4(unit, off);
            out.insert(out.end(), listed.begin(), listed.end());
        }
        return out;
    }

    // ---- locations ----

    struct LocEntry {
        AddressRange range;
        bool whole_scope = false;
        std::span<const std::uint8_t> expr;
    };

    std::vector<LocEntry> loc_v4(const Unit& unit, std::uint64_t offset) {
        std::vector<LocEntry> out;
        Cursor c(loc_, ".debug_loc", offset);
        std::uint64_t base = unit.base_addr;
        std::uint64_t max_addr = unit.addr_size == 8 ? UINT64_MAX : 0xffffffffu;
        while (true) {
            std::uint64_t begin = c.fixed(unit.addr_size);
            std::uint64_t end = c.fixed(unit.addr_size);
            if (begin == max_addr) {
                base = end;
                continue;
            }
            if (begin == 0 && end == 0)
                break;
            std::uint64_t len = c.u16();
            auto expr = c.bytes(len);
            out.push_back({{base + begin, base + end}, false, expr});
        }
        return out;
    }

    std::vector<LocEntry> loc_v5(const Unit& unit, std::uint64_t offset) {
        std::vector<LocEntry> out;
        Cursor c(loclists_, ".debug_loclists", offset);
        std::uint64_t base = unit.base_addr;
        auto counted_expr = [&]() { return c.bytes(c.uleb()); };
        while (true) {
            std::uint8_t kind = c.u8();
            if (kind == 0x00)
                break;
            switch (kind) {
            case 0x01: // base_addressx
                base = indexed_addr(unit, c.uleb());
                break;
            case 0x02: { // startx_endx
                std::uint64_t l = indexed_addr(unit, c.uleb());
                std::uint64_t h = indexed_addr(unit, c.uleb());
                out.push_back({{l, h}, false, counted_expr()});
                break;
            }
            case 0x03: { // startx_length
                std::uint64_t l = indexed_addr(unit, c.uleb());
                std::uint64_t len = c.uleb();
                out.push_back({{l, l + len}, false, counted_expr()});
                break;
            }
            case 0x04: { // offset_pair
                std::uint64_t lo = c.uleb(), hi = c.uleb();
                out.push_back({{base + lo, base + hi}, false, counted_expr()});
                break;
            }
            case 0x05: // default_location
                out.push_back({{0, 0}, true, counted_expr()});
                break;
            case 0x06: // base_address
                base = c.fixed(unit.addr_size);
                break;
            case 0x07: { // start_end
                std::uint64_t lo = c.fixed(unit.addr_size);
                std::uint64_t hi = c.fixed(unit.addr_size);
                out.push_back({{lo, hi}, false, counted_expr()});
                break;
            }
            case 0x08: { // start_length
                std::uint64_t lo = c.fixed(unit.addr_size);
                std::uint64_t len = c.uleb();
                out.push_back({{lo, lo + len}, false, counted_expr()});
                break;
            }
            default:
                c.fail("unknown location list entry kind " + std::to_string(kind));
            }
        }
        return out;
    }

    // ---- line tables ----

    void decode_lines(Unit& unit) {
        if (!unit.has_stmt_list || line_.empty())
            return;
        LineProgram prog = decode_line_program(line_, line_str_, str_, unit.stmt_list,
                                               unit.comp_dir);
        unit.file_map.assign(prog.file_paths.size(), 0);
        for (size_t i = 0; i < prog.file_paths.size(); ++i) {
            if (prog.file_paths[i].empty())
                continue;
            unit.file_map[i] = intern_file(prog.file_paths[i]);
        }
        for (const auto& row : prog.rows) {
            if (row.file >= unit.file_map.size() || unit.file_map[row.file] == 0)
                continue;
            model_.line_rows.push_back(
                {row.address, {unit.file_map[row.file], row.line}, row.is_stmt});
        }
    }

    FileId intern_file(const std::string& raw) {
        std::string path = normalize_path(raw);
        auto it = file_ids_.find(path);
        if (it != file_ids_.end())
            return it->second;
        FileId id = static_cast<FileId>(file_ids_.size() + 1);
        file_ids_.emplace(path, id);
        model_.files.emplace(id, path);
        return id;
    }

    // ---- model construction ----

    FunctionInfo& function_named(const std::string& name) {
        auto it = function_index_.find(name);
        if (it != function_index_.end())
            return model_.functions[it->second];
        function_index_.emplace(name, model_.functions.size());
        model_.functions.emplace_back();
        model_.functions.back().name = name;
        return model_.functions.back();
    }

    void build_functions(const Unit& unit) {
        for (const auto& die : unit.root.children)
            visit_toplevel(die, unit);
    }

    void visit_toplevel(const Die& die, const Unit& unit) {
        if (die.tag == TAG_subprogram)
            concrete_subprogram(die, unit);
        // Top-level variables (globals) and types are not part of the model.
    }

    void concrete_subprogram(const Die& die, const Unit& unit) {
        if (const AttrValue* decl = die.attr(AT_declaration); decl && decl->uval)
            return;
        auto ranges = die_ranges(die, unit);
        if (ranges.empty())
            return; // abstract instance or never-emitted body
        std::string name = name_of(die, unit);
        if (name.empty())
            return;
        FunctionInfo& fn = function_named(name);
        auto inst_id = static_cast<std::uint32_t>(fn.instances.size());
        fn.instances.push_back({inst_id, ranges});
        walk_scope(die, unit, fn.name, inst_id, ranges);
    }

    void walk_scope(const Die& scope, const Unit& unit, const std::string& fn_name,
                    std::uint32_t inst_id, const std::vector<AddressRange>& scope_ranges) {
        for (const auto& child : scope.children) {
            switch (child.tag) {
            case TAG_variable:
            case TAG_formal_parameter:
                add_variable(child, unit, fn_name, inst_id, scope_ranges);
                break;
            case TAG_lexical_block: {
                auto block_ranges = die_ranges(child, unit);
                walk_scope(child, unit, fn_name, inst_id,
                           block_ranges.empty() ? scope_ranges : block_ranges);
                break;
            }
            case TAG_inlined_subroutine: {
                auto inline_ranges = die_ranges(child, unit);
                std::string callee = name_of(child, unit);
                if (callee.empty() || inline_ranges.empty())
                    break;
                FunctionInfo& fn = function_named(callee);
                auto id = static_cast<std::uint32_t>(fn.instances.size());
                fn.instances.push_back({id, inline_ranges});
                walk_scope(child, unit, fn.name, id, inline_ranges);
                break;
            }
            case TAG_subprogram: // nested definition
                concrete_subprogram(child, unit);
                break;
            default:
                if (!child.children.empty())
                    walk_scope(child, unit, fn_name, inst_id, scope_ranges);
                break;
            }
        }
    }

    void add_variable(const Die& die, const Unit& unit, const std::string& fn_name,
                      std::uint32_t inst_id, const std::vector<AddressRange>& scope_ranges) {
        if (FoundAttr art = chase(die, unit, AT_artificial); art.value && art.value->uval)
            return;
        std::string name = name_of(die, unit);
        if (name.empty())
            return; // artificial temporaries are not source variables

        VariableEntry entry;
        entry.name = name;
        entry.kind = die.tag == TAG_formal_parameter ? VarKind::FormalParameter : VarKind::Local;
        entry.instance_id = inst_id;
        entry.scope_ranges = scope_ranges;

        FoundAttr file = chase(die, unit, AT_decl_file);
        FoundAttr line = chase(die, unit, AT_decl_line);
        if (file.value && line.value && file.unit) {
            std::uint64_t idx = file.value->uval;
            if (idx < file.unit->file_map.size() && file.unit->file_map[idx] != 0 &&
                line.value->uval >= 1)
                entry.decl = SourceLineKey{file.unit->file_map[idx],
                                           static_cast<std::uint32_t>(line.value->uval)};
        }

        if (const AttrValue* loc = die.attr(AT_location)) {
            if (loc->form == FORM_exprloc || loc->form == FORM_block ||
                loc->form == FORM_block1 || loc->form == FORM_block2 ||
                loc->form == FORM_block4) {
                if (!loc->block.empty()) {
                    DescKind kind = classify_expression(loc->block);
                    for (const auto& r : scope_ranges)
                        entry.description_ranges.push_back({r, kind});
                }
            } else {
                std::uint64_t off = unit.version >= 5
                                        ? list_offset(unit, *loc, unit.loclists_base, loclists_,
                                                      ".debug_loclists")
                                        : loc->uval;
                auto entries = unit.version >= 5 ? loc_v5(unit, off) : loc_v4(unit, off);
                for (const auto& e : entries) {
                    if (e.expr.empty())
                        continue;
                    DescKind kind = classify_expression(e.expr);
                    if (e.whole_scope) {
                        for (const auto& r : scope_ranges)
                            entry.description_ranges.push_back({r, kind});
                    } else {
                        entry.description_ranges.push_back({e.range, kind});
                    }
                }
            }
        } else if (chase(die, unit, AT_const_value).value) {
            for (const auto& r : scope_ranges)
                entry.description_ranges.push_back({r, DescKind::LiteralValue});
        }

        pending_vars_.push_back({fn_name, std::move(entry)});
    }

    void finish() {
        // Clip description ranges into their function's range union; line
        // tables and location lists occasionally disagree at the edges and
        // the model invariant wants containment.
        for (auto& [fn_name, entry] : pending_vars_) {
            FunctionInfo& fn = function_named(fn_name);
            auto fn_ranges = fn.all_ranges();
            std::vector<DescriptionRange> clipped;
            for (const auto& d : entry.description_ranges) {
                if (d.range.empty()) {
                    for (const auto& outer : fn_ranges)
                        if (outer.low <= d.range.low && d.range.low <= outer.high) {
                            clipped.push_back(d);
                            break;
                        }
                    continue;
                }
                for (const auto& outer : fn_ranges) {
                    std::uint64_t lo = std::max(d.range.low, outer.low);
                    std::uint64_t hi = std::min(d.range.high, outer.high);
                    if (lo < hi)
                        clipped.push_back({{lo, hi}, d.kind});
                }
            }
            std::sort(clipped.begin(), clipped.end());
            clipped.erase(std::unique(clipped.begin(), clipped.end()), clipped.end());
            entry.description_ranges = std::move(clipped);

            // Same source variable emitted twice in one scope: merge the
            // descriptions rather than reporting a duplicate.
            bool merged = false;
            for (auto& existing : fn.variables) {
                if (existing.instance_id == entry.instance_id && existing.name == entry.name &&
                    existing.decl == entry.decl) {
                    existing.description_ranges.insert(existing.description_ranges.end(),
                                                       entry.description_ranges.begin(),
                                                       entry.description_ranges.end());
                    std::sort(existing.description_ranges.begin(),
                              existing.description_ranges.end());
                    existing.description_ranges.erase(
                        std::unique(existing.description_ranges.begin(),
                                    existing.description_ranges.end()),
                        existing.description_ranges.end());
                    merged = true;
                    break;
                }
            }
            if (!merged)
                fn.variables.push_back(std::move(entry));
        }
        pending_vars_.clear();

        std::sort(model_.line_rows.begin(), model_.line_rows.end());
        model_.line_rows.erase(std::unique(model_.line_rows.begin(), model_.line_rows.end()),
                               model_.line_rows.end());
        std::sort(model_.functions.begin(), model_.functions.end(),
                  [](const FunctionInfo& a, const FunctionInfo& b) { return a.name < b.name; });
        for (auto& fn : model_.functions)
            std::sort(fn.variables.begin(), fn.variables.end(),
                      [](const VariableEntry& a, const VariableEntry& b) {
                          return std::tie(a.instance_id, a.name) <
                                 std::tie(b.instance_id, b.name);
                      });
    }

    const ElfFile& elf_;
    std::span<const std::uint8_t> info_, abbrev_, str_, line_str_, str_offsets_, addr_, ranges_,
        rnglists_, loc_, loclists_, line_;

    std::vector<Unit> units_;
    std::map<std::uint64_t, std::map<std::uint64_t, Abbrev>> abbrev_cache_;
    std::map<std::uint64_t, DieRef> die_index_;
    std::map<std::string, FileId> file_ids_;
    std::map<std::string, size_t> function_index_;
    std::vector<std::pair<std::string, VariableEntry>> pending_vars_;
    NeutralDebugModel model_;
};

} // namespace
} // namespace dwarf

NeutralDebugModel load_binary(const std::filesystem::path& path) {
    ElfFile elf = ElfFile::load(path);

    std::vector<std::string> missing;
    for (const char* name : {".debug_info", ".debug_abbrev", ".debug_line"})
        if (!elf.section(name))
            missing.push_back(name);
    if (!missing.empty()) {
        std::string list;
        for (size_t i = 0; i < missing.size(); ++i)
            list += (i ? ", " : "") + missing[i];
        throw Error::no_debug_info(path.string() + ": no debug info (missing sections: " + list +
                                   ")");
    }

    dwarf::Reader reader(elf);
    NeutralDebugModel model = reader.run();
    validate_model(model);
    return model;
}

} // namespace dicov
