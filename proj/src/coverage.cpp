#include "dicov/coverage.hpp"

#include <algorithm>

#include "dicov/error.hpp"

namespace dicov {

std::set<SourceLineKey> VariableFacts::coverable() const {
    std::set<SourceLineKey> out;
    std::set_intersection(scope_lines.begin(), scope_lines.end(), defined_lines.begin(),
                          defined_lines.end(), std::inserter(out, out.begin()));
    return out;
}

VariableFacts VariableFacts::make(std::string function, std::string name,
                                  std::optional<SourceLineKey> decl,
                                  std::set<SourceLineKey> scope_lines,
                                  std::set<SourceLineKey> defined_lines,
                                  const std::map<SourceLineKey, Rational>& raw_described,
                                  std::uint32_t instance_count) {
    VariableFacts f;
    f.function = std::move(function);
    f.name = std::move(name);
    f.decl = decl;
    f.scope_lines = std::move(scope_lines);
    f.defined_lines = std::move(defined_lines);
    f.instance_count = instance_count == 0 ? 1 : instance_count;
    auto cov = f.coverable();
    for (const auto& [line, fraction] : raw_described) {
        if (!cov.count(line))
            continue; // out-of-baseline line: clipped
        Rational fr = fraction;
        if (fr.negative())
            continue;
        if (Rational::whole(1) < fr)
            fr = Rational::whole(1);
        if (!fr.is_zero())
            f.described.emplace(line, fr);
    }
    return f;
}

namespace {

bool described_at(std::uint64_t addr, const std::vector<DescriptionRange>& descs) {
    for (const auto& d : descs) {
        if (d.range.contains(addr))
            return true;
        if (d.range.empty() && d.range.low == addr)
            return true; // view-style fact pinned to this exact address
    }
    return false;
}

// Visits each line-table row inside the instance's ranges; rows are sorted
// by address, so each range is a binary-searched slice.
template <typename Fn>
void rows_within(const NeutralDebugModel& model, const FunctionInstance& inst, Fn&& visit) {
    for (const auto& r : inst.ranges) {
        auto it = std::lower_bound(model.line_rows.begin(), model.line_rows.end(), r.low,
                                   [](const LineTableRow& row, std::uint64_t addr) {
                                       return row.address < addr;
                                   });
        for (; it != model.line_rows.end() && it->address < r.high; ++it)
            visit(*it);
    }
}

} // namespace

std::map<SourceLineKey, Rational> describe_lines(const NeutralDebugModel& model,
                                                 const FunctionInfo& function,
                                                 std::span<const VariableEntry* const> instances,
                                                 const std::set<SourceLineKey>& coverable) {
    std::map<SourceLineKey, std::pair<int, int>> tally; // line -> (described, realised)
    for (const auto& inst : function.instances) {
        const VariableEntry* entry = nullptr;
        for (const auto* v : instances)
            if (v && v->instance_id == inst.id) {
                entry = v;
                break;
            }
        std::set<SourceLineKey> realised, described;
        rows_within(model, inst, [&](const LineTableRow& row) {
            realised.insert(row.line_key);
            if (entry && described_at(row.address, entry->description_ranges))
                described.insert(row.line_key);
        });
        for (const auto& line : realised) {
            if (!coverable.count(line))
                continue; // non-computational or undefined-region line: ignored
            auto& t = tally[line];
            ++t.second;
            if (described.count(line))
                ++t.first;
        }
    }
    std::map<SourceLineKey, Rational> out;
    for (const auto& [line, t] : tally)
        if (t.first > 0)
            out.emplace(line, Rational(t.first, t.second));
    return out;
}

std::set<SourceLineKey> described_line_set(const NeutralDebugModel& model,
                                           const FunctionInfo& function,
                                           std::span<const VariableEntry* const> instances) {
    std::set<SourceLineKey> out;
    for (const auto& inst : function.instances) {
        const VariableEntry* entry = nullptr;
        for (const auto* v : instances)
            if (v && v->instance_id == inst.id) {
                entry = v;
                break;
            }
        if (!entry)
            continue;
        rows_within(model, inst, [&](const LineTableRow& row) {
            if (described_at(row.address, entry->description_ranges))
                out.insert(row.line_key);
        });
    }
    return out;
}

CoverageValue coverage_ratio(const std::map<SourceLineKey, Rational>& described,
                             const std::set<SourceLineKey>& scope_lines,
                             const std::set<SourceLineKey>& defined_lines) {
    std::set<SourceLineKey> cov;
    std::set_intersection(scope_lines.begin(), scope_lines.end(), defined_lines.begin(),
                          defined_lines.end(), std::inserter(cov, cov.begin()));
    CoverageValue v;
    v.denominator = Rational::whole(static_cast<std::int64_t>(cov.size()));
    for (const auto& [line, fraction] : described) {
        if (!cov.count(line))
            throw Error::internal("described line outside S∩D reached coverage_ratio");
        v.numerator += fraction;
    }
    return v;
}

CoverageValue unshrunk_line_coverage(const std::set<SourceLineKey>& described_raw,
                                     const std::set<SourceLineKey>& scope_lines) {
    std::set<SourceLineKey> hit;
    std::set_intersection(described_raw.begin(), described_raw.end(), scope_lines.begin(),
                          scope_lines.end(), std::inserter(hit, hit.begin()));
    CoverageValue v;
    v.numerator = Rational::whole(static_cast<std::int64_t>(hit.size()));
    v.denominator = Rational::whole(static_cast<std::int64_t>(scope_lines.size()));
    return v;
}

namespace {

// Sorted, coalesced copy of `ranges` clipped against `clip` (when given).
std::vector<AddressRange> union_ranges(std::vector<AddressRange> ranges,
                                       const std::vector<AddressRange>* clip) {
    std::vector<AddressRange> clipped;
    for (const auto& r : ranges) {
        if (r.empty())
            continue;
        if (!clip) {
            clipped.push_back(r);
            continue;
        }
        for (const auto& c : *clip) {
            std::uint64_t lo = std::max(r.low, c.low), hi = std::min(r.high, c.high);
            if (lo < hi)
                clipped.push_back({lo, hi});
        }
    }
    std::sort(clipped.begin(), clipped.end());
    std::vector<AddressRange> merged;
    for (const auto& r : clipped) {
        if (!merged.empty() && r.low <= merged.back().high)
            merged.back().high = std::max(merged.back().high, r.high);
        else
            merged.push_back(r);
    }
    return merged;
}

std::uint64_t total_bytes(const std::vector<AddressRange>& ranges) {
    std::uint64_t n = 0;
    for (const auto& r : ranges)
        n += r.bytes();
    return n;
}

} // namespace

CoverageValue naive_byte_coverage(std::span<const DescriptionRange> descriptions,
                                  std::span<const AddressRange> scope_ranges) {
    std::vector<AddressRange> scope(scope_ranges.begin(), scope_ranges.end());
    auto scope_union = union_ranges(scope, nullptr);
    std::vector<AddressRange> desc;
    for (const auto& d : descriptions)
        desc.push_back(d.range);
    auto covered = union_ranges(std::move(desc), &scope_union);
    CoverageValue v;
    v.numerator = Rational::whole(static_cast<std::int64_t>(total_bytes(covered)));
    v.denominator = Rational::whole(static_cast<std::int64_t>(total_bytes(scope_union)));
    return v;
}

const char* lifecycle_name_str(LifecycleName n) {
    switch (n) {
    case LifecycleName::InScopeOnly: return "InScopeOnly";
    case LifecycleName::Unknowable: return "Unknowable";
    case LifecycleName::KnowablePDead: return "KnowablePDead";
    case LifecycleName::UnallocatedPLive: return "UnallocatedPLive";
    case LifecycleName::AllocatedUninit: return "AllocatedUninit";
    case LifecycleName::AllocatedStale: return "AllocatedStale";
    case LifecycleName::AllocatedPDead: return "AllocatedPDead";
    case LifecycleName::NormalPLive: return "NormalPLive";
    }
    return "?";
}

LifecycleState classify_lifecycle(bool allocated, bool defined, bool knowable, bool live) {
    if (live && !defined)
        throw Error::validate("invalid life-cycle state: live requires defined");
    if (knowable && !defined)
        throw Error::validate("invalid life-cycle state: knowable requires defined");
    if (allocated && live && !knowable)
        throw Error::validate(
            "invalid life-cycle state: allocated and live together require knowable");
    if (live && !knowable)
        throw Error::validate("invalid life-cycle state: live requires knowable");

    LifecycleState s{allocated, defined, knowable, live, LifecycleName::InScopeOnly};
    if (!allocated) {
        if (!defined) s.name = LifecycleName::InScopeOnly;
        else if (!knowable) s.name = LifecycleName::Unknowable;
        else if (!live) s.name = LifecycleName::KnowablePDead;
        else s.name = LifecycleName::UnallocatedPLive;
    } else {
        if (!defined) s.name = LifecycleName::AllocatedUninit;
        else if (!knowable) s.name = LifecycleName::AllocatedStale;
        else if (!live) s.name = LifecycleName::AllocatedPDead;
        else s.name = LifecycleName::NormalPLive;
    }
    return s;
}

std::map<SourceLineKey, Rational> knowledge_extend(
    const std::map<SourceLineKey, Rational>& described,
    const std::set<SourceLineKey>& coverable) {
    if (described.empty())
        return described;
    auto out = described;
    auto last = std::prev(described.end());
    const SourceLineKey& latch_line = last->first;
    const Rational& latch_fraction = last->second;
    for (const auto& line : coverable) {
        if (line <= latch_line)
            continue;
        auto it = out.find(line);
        if (it == out.end() || it->second < latch_fraction)
            out[line] = latch_fraction;
    }
    return out;
}

CoverageValue line_availability(std::span<const VariableFacts> variables,
                                const SourceLineKey& line) {
    CoverageValue v;
    std::int64_t coverable_count = 0;
    for (const auto& var : variables) {
        if (!var.scope_lines.count(line) || !var.defined_lines.count(line))
            continue;
        ++coverable_count;
        auto it = var.described.find(line);
        if (it != var.described.end())
            v.numerator += it->second;
    }
    v.denominator = Rational::whole(coverable_count);
    return v;
}

} // namespace dicov
