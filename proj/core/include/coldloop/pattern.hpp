#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace coldloop {

enum class StimulusKind {
    S1,  // alternating cooling / warming, mean skin temperature held
    S2,  // initial drop, then balanced cold + warm hold
    S3,  // continuous cooling
};

std::string_view to_string(StimulusKind kind);
StimulusKind parse_stimulus_kind(std::string_view text);

/// A stimulus request. Rates are in °C/s, times in seconds, temperatures in °C.
struct StimulusSpec {
    StimulusKind kind = StimulusKind::S1;
    double cooling_rate = -0.1;      // average rate during the cooling period, < 0
    double cooling_ratio = 0.5;      // fraction of a cycle spent cooling (S1 only)
    double swing = 0.06;             // per-cycle temperature swing, > 0 (S1 only)
    double duration = 15.0;
    double s2_drop_duration = 5.0;   // length of the initial drop (S2 only)
};

/// Stable identifier such as "S1_vc-0.16_r0.5", "S2_vc-0.16" or "S3_vc-0.16".
std::string stimulus_id(const StimulusSpec& spec);

/// Cycle quantities implied by an S1 spec.
struct DerivedPattern {
    double cooling_time = 0.0;            // t_c
    double cycle_time = 0.0;              // t
    double relative_warming_rate = 0.0;   // net rate during the warming period
    double warming_rate = 0.0;            // rate the warm channel must add on top of cooling
};

struct Segment {
    double start = 0.0;
    double end = 0.0;
    double target_rate = 0.0;
    bool cold_active = true;
    bool warm_active = false;
    // Target temperature change across the segment. Whole S1 phases carry
    // exactly -swing or +swing, so complete cycles cancel without rounding.
    double change = 0.0;

    double length() const { return end - start; }
};

/// Piecewise-constant target skin-temperature rate, contiguous over [0, duration].
struct RateSchedule {
    StimulusSpec spec;
    std::vector<Segment> segments;

    double duration() const { return segments.empty() ? 0.0 : segments.back().end; }

    /// Integral of target_rate over [0, until], clipped to the schedule.
    /// Segments that end by `until` contribute their exact `change`.
    double integrated_change(double until) const;
    double integrated_change() const { return integrated_change(duration()); }
};

struct SpecIssue {
    enum class Severity { error, warning };
    Severity severity = Severity::error;
    std::string message;
};

/// Shortest cycle that is still treated as comfortably perceivable; shorter
/// cycles produce a warning, not an error.
inline constexpr double kMinCycleTime = 0.5;

std::vector<SpecIssue> validate_spec(const StimulusSpec& spec);
bool has_errors(const std::vector<SpecIssue>& issues);

/// Throws ValidationError carrying every error-level issue.
void require_valid(const StimulusSpec& spec);

DerivedPattern derive_pattern(const StimulusSpec& spec);

/// Compiles a spec into its rate schedule. S1 always opens with a cooling
/// segment and is cut exactly at `duration`.
RateSchedule compile_schedule(const StimulusSpec& spec);

/// Largest whole number of S1 cycles that fit in the spec's duration, as a time.
double whole_cycle_horizon(const StimulusSpec& spec);

/// CSV header: start_s,end_s,rate_c_per_s,cold_active,warm_active
void write_schedule_csv(std::ostream& out, const RateSchedule& schedule);

}  // namespace coldloop
