#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "coldloop/pattern.hpp"
#include "coldloop/plant.hpp"

namespace coldloop {

enum class Channel { valve, led };
std::string_view to_string(Channel channel);
Channel parse_channel(std::string_view text);

struct DutyRange {
    double min = 0.0;
    double max = 1.0;
};

/// Usable duty window of each channel on the reference display.
DutyRange default_duty_range(Channel channel);

/// Affine duty -> rate model: rate = gain * duty + offset, valid on [duty_min, duty_max].
struct DutyModel {
    Channel channel = Channel::valve;
    double gain = 0.0;     // °C/s per duty fraction
    double offset = 0.0;   // °C/s
    double duty_min = 0.0;
    double duty_max = 1.0;
    double r_squared = 1.0;

    double rate_at(double duty) const { return gain * duty + offset; }
    /// Rates reachable inside the duty range, ordered (low, high).
    std::pair<double, double> feasible_rates() const;
};

/// Builds a model with the channel's default duty range.
DutyModel make_duty_model(Channel channel, double gain, double offset);

/// Models that match a plant's hidden coefficients exactly.
DutyModel exact_valve_model(const PlantParams& params);
DutyModel exact_led_model(const PlantParams& params);

struct CalibrationPoint {
    double duty = 0.0;
    double temp_change = 0.0;  // °C over `interval`
    double interval = 6.0;     // s

    double rate() const { return temp_change / interval; }
};

/// Mean of temp_change / interval over repeated measurements at one duty.
double mean_rate(std::span<const CalibrationPoint> points);

/// Ordinary least squares of rate on duty. Range defaults to the channel's.
DutyModel fit_duty_model(std::span<const CalibrationPoint> points, Channel channel,
                         std::optional<DutyRange> range = std::nullopt);

/// Duty that delivers `target_rate`. Throws UnreachableRateError when the
/// required duty falls outside the model's range.
double invert_duty(const DutyModel& model, double target_rate);

/// Shifts every point's rate by net_drift / duration (the interval is kept,
/// temp_change absorbs the shift). Callers refit afterwards.
std::vector<CalibrationPoint> apply_drift_correction(std::span<const CalibrationPoint> points,
                                                     double net_drift, double duration);

// --- actuator timelines ----------------------------------------------------

struct TimelineEntry {
    double start = 0.0;
    double end = 0.0;
    double duty = 0.0;
    bool active = false;
};

/// Per-channel duty segments. "Inactive" is duty 0 with active == false, which
/// is distinct from running at the minimum in-range duty.
struct ActuatorTimeline {
    double duration = 0.0;
    std::vector<TimelineEntry> valve;
    std::vector<TimelineEntry> led;

    const std::vector<TimelineEntry>& channel(Channel c) const {
        return c == Channel::valve ? valve : led;
    }
};

/// A timeline with both channels off for `duration` seconds.
ActuatorTimeline idle_timeline(double duration);

/// Converts target rates into duties. Cooling segments run the valve at
/// invert(v_c) with the LED off; warming segments keep the valve there and add
/// the LED at invert(target - v_c). Unreachable rates are rethrown with the
/// offending segment index in the message.
ActuatorTimeline schedule_to_timeline(const RateSchedule& schedule, const DutyModel& valve,
                                      const DutyModel& led);

/// CSV header: channel,start_s,end_s,duty,active
void write_timeline_csv(std::ostream& out, const ActuatorTimeline& timeline);

// --- PWM -------------------------------------------------------------------

inline constexpr double kDefaultPwmTick = 1e-6;     // s
inline constexpr double kDefaultValvePwmHz = 100.0;
inline constexpr double kDefaultLedPwmHz = 1000.0;

struct PwmEdge {
    std::int64_t tick = 0;
    bool on = false;
};

/// Level transitions of a PWM signal on an integer tick grid.
struct PwmWaveform {
    double frequency = 0.0;
    double tick = kDefaultPwmTick;
    std::int64_t period_ticks = 0;
    std::int64_t on_ticks = 0;
    std::int64_t total_ticks = 0;
    std::vector<PwmEdge> edges;

    double edge_time(std::size_t i) const { return static_cast<double>(edges[i].tick) * tick; }
    /// On-time within period k, in ticks.
    std::int64_t on_ticks_in_period(std::int64_t k) const;
};

PwmWaveform pwm_waveform(double duty, double frequency, double duration,
                         double tick = kDefaultPwmTick);

// --- closed loop -----------------------------------------------------------

inline constexpr double kDefaultControlStep = 1e-3;  // s
inline constexpr double kDefaultLogRate = 100.0;      // Hz

struct TraceSample {
    double time = 0.0;
    double temperature = 0.0;
    ActuatorCommand command;
};

struct ControlTrace {
    std::vector<TraceSample> samples;  // duration * log_rate samples at k / log_rate
    double start_temp = 0.0;
    double end_temp = 0.0;

    double net_change() const { return end_temp - start_temp; }
};

/// Drives the plant through the timeline from its current state. Steps are
/// split at segment boundaries and log instants, so piecewise-constant inputs
/// are integrated without boundary error.
ControlTrace run_control(const ActuatorTimeline& timeline, Plant& plant,
                         double dt = kDefaultControlStep, double log_rate = kDefaultLogRate);

/// CSV header: time_s,temp_c,duty_valve,duty_led,valve_on,led_on
void write_trace_csv(std::ostream& out, const ControlTrace& trace);

}  // namespace coldloop
