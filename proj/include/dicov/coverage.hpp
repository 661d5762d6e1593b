#pragma once

#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "dicov/model.hpp"
#include "dicov/rational.hpp"

namespace dicov {

// numerator / denominator with the division deferred; a zero denominator
// marks the value undefined-coverage (the variable is excluded from
// aggregates and reported separately).
struct CoverageValue {
    Rational numerator;
    Rational denominator;

    bool defined() const { return !denominator.is_zero(); }
    Rational ratio() const { return numerator / denominator; }
    double ratio_double() const { return ratio().to_double(); }

    friend bool operator==(const CoverageValue&, const CoverageValue&) = default;
};

// Per-variable inputs to the metrics: S (in-scope computational lines),
// D (lines at or after first definition), and B (per-line described fraction
// across realised instances, keys clipped to S∩D, fractions in (0,1]).
struct VariableFacts {
    std::string function;
    std::string name;
    std::optional<SourceLineKey> decl;
    std::set<SourceLineKey> scope_lines;            // S
    std::set<SourceLineKey> defined_lines;          // D
    std::map<SourceLineKey, Rational> described;    // B
    std::uint32_t instance_count = 1;

    std::set<SourceLineKey> coverable() const; // S ∩ D

    // Clips raw described lines to S∩D and clamps fractions into [0,1];
    // the one place where out-of-baseline lines are discarded, making
    // over-100% coverage unrepresentable.
    static VariableFacts make(std::string function, std::string name,
                              std::optional<SourceLineKey> decl,
                              std::set<SourceLineKey> scope_lines,
                              std::set<SourceLineKey> defined_lines,
                              const std::map<SourceLineKey, Rational>& raw_described,
                              std::uint32_t instance_count);
};

// Per-line described fraction for one source variable across the realised
// instances of its function: on each line of `coverable` reached by k >= 1
// instances' line-table rows, the fraction is (instances describing the
// variable there) / k. Lines no instance realises are absent. Zero-length
// description ranges describe the rows sitting exactly at their address.
std::map<SourceLineKey, Rational> describe_lines(const NeutralDebugModel& model,
                                                 const FunctionInfo& function,
                                                 std::span<const VariableEntry* const> instances,
                                                 const std::set<SourceLineKey>& coverable);

// Union of lines described by any instance, for the unshrunk comparison
// metric; not clipped to the defined region.
std::set<SourceLineKey> described_line_set(const NeutralDebugModel& model,
                                           const FunctionInfo& function,
                                           std::span<const VariableEntry* const> instances);

// The headline metric: sum of fractions over B divided by |S∩D|.
CoverageValue coverage_ratio(const std::map<SourceLineKey, Rational>& described,
                             const std::set<SourceLineKey>& scope_lines,
                             const std::set<SourceLineKey>& defined_lines);

// |B_raw ∩ S| / |S|: the line metric without the definedness filter, kept to
// quantify how much the filter changes the picture.
CoverageValue unshrunk_line_coverage(const std::set<SourceLineKey>& described_raw,
                                     const std::set<SourceLineKey>& scope_lines);

// Instruction-byte metric over address ranges, as computed by earlier tools;
// overlapping ranges are unioned before measuring.
CoverageValue naive_byte_coverage(std::span<const DescriptionRange> descriptions,
                                  std::span<const AddressRange> scope_ranges);

// Life-cycle state of an in-scope variable: (A) allocated to storage,
// (D) defined per source semantics, (K) knowable from object state,
// (L) program-live. Only 8 of the 16 flag combinations are coherent.
enum class LifecycleName {
    InScopeOnly,
    Unknowable,
    KnowablePDead,
    UnallocatedPLive,
    AllocatedUninit,
    AllocatedStale,
    AllocatedPDead,
    NormalPLive,
};

struct LifecycleState {
    bool allocated = false;
    bool defined = false;
    bool knowable = false;
    bool live = false;
    LifecycleName name = LifecycleName::InScopeOnly;
};

const char* lifecycle_name_str(LifecycleName n);

// Throws Error::validate naming the violated implication for the 8 invalid
// combinations: live requires defined, knowable requires defined,
// allocated+live requires knowable, live requires knowable.
LifecycleState classify_lifecycle(bool allocated, bool defined, bool knowable, bool live);

// End-of-scope knowledge extension: a debugger that latched the value at the
// last described line could keep showing it until scope exit, so every
// coverable line from that point on receives that line's fraction.
std::map<SourceLineKey, Rational> knowledge_extend(
    const std::map<SourceLineKey, Rational>& described,
    const std::set<SourceLineKey>& coverable);

// Per-line availability: denominator counts variables with the line in S∩D,
// numerator sums their described fractions there. A zero denominator means
// no coverable variables at that line.
CoverageValue line_availability(std::span<const VariableFacts> variables,
                                const SourceLineKey& line);

} // namespace dicov
