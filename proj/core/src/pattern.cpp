#include "coldloop/pattern.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "coldloop/error.hpp"
#include "coldloop/format.hpp"

namespace coldloop {

namespace {

// Boundaries closer than this are considered coincident.
constexpr double kTimeEps = 1e-9;

void push_segment(std::vector<Segment>& out, double start, double end, double rate,
                  bool warm) {
    if (end - start <= kTimeEps) return;
    out.push_back(Segment{start, end, rate, true, warm, rate * (end - start)});
}

// S1 phase: a phase cut short by the end of the presentation keeps its
// rate-times-length change, a whole one carries the exact swing.
void push_phase(std::vector<Segment>& out, double start, double nominal_end, double end,
                double rate, bool warm, double whole_change) {
    if (end - start <= kTimeEps) return;
    const bool whole = end >= nominal_end - kTimeEps;
    out.push_back(Segment{start, end, rate, true, warm, whole ? whole_change : rate * (end - start)});
}

}  // namespace

std::string_view to_string(StimulusKind kind) {
    switch (kind) {
        case StimulusKind::S1: return "S1";
        case StimulusKind::S2: return "S2";
        case StimulusKind::S3: return "S3";
    }
    return "?";
}

StimulusKind parse_stimulus_kind(std::string_view text) {
    if (text == "S1" || text == "s1") return StimulusKind::S1;
    if (text == "S2" || text == "s2") return StimulusKind::S2;
    if (text == "S3" || text == "s3") return StimulusKind::S3;
    throw ValidationError("unknown stimulus kind '" + std::string(text) + "'");
}

std::string stimulus_id(const StimulusSpec& spec) {
    std::string id(to_string(spec.kind));
    id += "_vc" + format_number(spec.cooling_rate);
    if (spec.kind == StimulusKind::S1) id += "_r" + format_number(spec.cooling_ratio);
    return id;
}

double RateSchedule::integrated_change(double until) const {
    double total = 0.0;
    for (const auto& seg : segments) {
        if (seg.start >= until) break;
        total += seg.end <= until + kTimeEps ? seg.change
                                             : seg.target_rate * (until - seg.start);
    }
    return total;
}

std::vector<SpecIssue> validate_spec(const StimulusSpec& spec) {
    std::vector<SpecIssue> issues;
    auto error = [&](std::string msg) {
        issues.push_back({SpecIssue::Severity::error, std::move(msg)});
    };

    if (!std::isfinite(spec.cooling_rate) || spec.cooling_rate >= 0.0)
        error("v_c must be negative");
    if (!std::isfinite(spec.duration) || spec.duration <= 0.0)
        error("duration must be positive");

    switch (spec.kind) {
        case StimulusKind::S1:
            if (!std::isfinite(spec.swing) || spec.swing <= 0.0)
                error("delta_T must be positive");
            if (!(spec.cooling_ratio > 0.0 && spec.cooling_ratio < 1.0))
                error("lambda_c in open interval (0, 1)");
            break;
        case StimulusKind::S2:
            if (!(spec.s2_drop_duration > 0.0))
                error("s2_drop_duration must be positive");
            else if (std::isfinite(spec.duration) && spec.s2_drop_duration >= spec.duration)
                error("s2_drop_duration must be shorter than duration");
            break;
        case StimulusKind::S3:
            break;
    }

    if (spec.kind == StimulusKind::S1 && issues.empty()) {
        const double cycle = (spec.swing / -spec.cooling_rate) / spec.cooling_ratio;
        if (cycle < kMinCycleTime - kTimeEps) {
            issues.push_back({SpecIssue::Severity::warning,
                              "cycle time " + format_number(cycle) + " s is below " +
                                  format_number(kMinCycleTime) + " s"});
        }
    }
    return issues;
}

bool has_errors(const std::vector<SpecIssue>& issues) {
    return std::any_of(issues.begin(), issues.end(), [](const SpecIssue& i) {
        return i.severity == SpecIssue::Severity::error;
    });
}

void require_valid(const StimulusSpec& spec) {
    std::string msg;
    for (const auto& issue : validate_spec(spec)) {
        if (issue.severity != SpecIssue::Severity::error) continue;
        if (!msg.empty()) msg += "; ";
        msg += issue.message;
    }
    if (!msg.empty()) throw ValidationError(msg);
}

DerivedPattern derive_pattern(const StimulusSpec& spec) {
    if (spec.kind != StimulusKind::S1)
        throw WrongKindError("derive_pattern needs an S1 spec, got " +
                             std::string(to_string(spec.kind)));
    require_valid(spec);

    DerivedPattern d;
    d.cooling_time = spec.swing / -spec.cooling_rate;
    d.cycle_time = d.cooling_time / spec.cooling_ratio;
    d.relative_warming_rate = spec.swing / (d.cycle_time - d.cooling_time);
    d.warming_rate = d.relative_warming_rate - spec.cooling_rate;
    return d;
}

double whole_cycle_horizon(const StimulusSpec& spec) {
    const auto d = derive_pattern(spec);
    const double cycles = std::floor(spec.duration / d.cycle_time + kTimeEps);
    return cycles * d.cycle_time;
}

RateSchedule compile_schedule(const StimulusSpec& spec) {
    require_valid(spec);

    RateSchedule schedule;
    schedule.spec = spec;
    auto& segs = schedule.segments;
    const double end = spec.duration;

    switch (spec.kind) {
        case StimulusKind::S1: {
            const auto d = derive_pattern(spec);
            // Boundaries come from k * t rather than a running sum so they do
            // not accumulate rounding error over many cycles.
            for (long k = 0;; ++k) {
                const double cycle_start = static_cast<double>(k) * d.cycle_time;
                if (cycle_start >= end - kTimeEps) break;
                const double nominal_cool_end = cycle_start + d.cooling_time;
                const double nominal_cycle_end = static_cast<double>(k + 1) * d.cycle_time;
                const double cool_end = std::min(nominal_cool_end, end);
                const double cycle_end = std::min(nominal_cycle_end, end);
                push_phase(segs, cycle_start, nominal_cool_end, cool_end, spec.cooling_rate, false,
                           -spec.swing);
                if (cool_end < end - kTimeEps)
                    push_phase(segs, cool_end, nominal_cycle_end, cycle_end,
                               d.relative_warming_rate, true, spec.swing);
            }
            // Absorb a sub-epsilon tail so the schedule ends exactly at duration.
            if (!segs.empty()) segs.back().end = end;
            break;
        }
        case StimulusKind::S2:
            push_segment(segs, 0.0, spec.s2_drop_duration, spec.cooling_rate, false);
            push_segment(segs, spec.s2_drop_duration, end, 0.0, true);
            break;
        case StimulusKind::S3:
            push_segment(segs, 0.0, end, spec.cooling_rate, false);
            break;
    }
    return schedule;
}

void write_schedule_csv(std::ostream& out, const RateSchedule& schedule) {
    out << "start_s,end_s,rate_c_per_s,cold_active,warm_active\n";
    for (const auto& s : schedule.segments) {
        out << format_number(s.start) << ',' << format_number(s.end) << ','
            << format_number(s.target_rate) << ',' << format_flag(s.cold_active) << ','
            << format_flag(s.warm_active) << '\n';
    }
}

}  // namespace coldloop
