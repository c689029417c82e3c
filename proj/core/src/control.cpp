#include "coldloop/control.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <string>

#include "coldloop/error.hpp"
#include "coldloop/format.hpp"

namespace coldloop {

namespace {

constexpr double kBoundaryEps = 1e-12;

// Walks one channel's entries in time order.
class ChannelCursor {
public:
    explicit ChannelCursor(const std::vector<TimelineEntry>& entries) : entries_(entries) {}

    // Entry covering t, or nullptr. t must be non-decreasing across calls.
    const TimelineEntry* at(double t) {
        while (pos_ < entries_.size() && entries_[pos_].end <= t + kBoundaryEps) ++pos_;
        if (pos_ < entries_.size() && entries_[pos_].start <= t + kBoundaryEps)
            return &entries_[pos_];
        return nullptr;
    }

private:
    const std::vector<TimelineEntry>& entries_;
    std::size_t pos_ = 0;
};

}  // namespace

std::string_view to_string(Channel channel) {
    return channel == Channel::valve ? "valve" : "led";
}

Channel parse_channel(std::string_view text) {
    if (text == "valve") return Channel::valve;
    if (text == "led") return Channel::led;
    throw ValidationError("unknown channel '" + std::string(text) + "'");
}

DutyRange default_duty_range(Channel channel) {
    return channel == Channel::valve ? DutyRange{0.490, 0.601} : DutyRange{0.118, 0.902};
}

std::pair<double, double> DutyModel::feasible_rates() const {
    const double a = rate_at(duty_min);
    const double b = rate_at(duty_max);
    return {std::min(a, b), std::max(a, b)};
}

DutyModel make_duty_model(Channel channel, double gain, double offset) {
    const auto range = default_duty_range(channel);
    return DutyModel{channel, gain, offset, range.min, range.max, 1.0};
}

DutyModel exact_valve_model(const PlantParams& params) {
    return make_duty_model(Channel::valve, params.valve_gain, params.valve_offset);
}

DutyModel exact_led_model(const PlantParams& params) {
    return make_duty_model(Channel::led, params.led_gain, params.led_offset);
}

double mean_rate(std::span<const CalibrationPoint> points) {
    if (points.empty()) throw ValidationError("mean_rate needs at least one measurement");
    const auto& first = points.front();
    double sum = 0.0;
    for (const auto& p : points) {
        if (p.duty != first.duty || p.interval != first.interval)
            throw ValidationError("mean_rate measurements must share duty and interval");
        if (!(p.interval > 0.0)) throw ValidationError("measurement interval must be positive");
        sum += p.rate();
    }
    return sum / static_cast<double>(points.size());
}

DutyModel fit_duty_model(std::span<const CalibrationPoint> points, Channel channel,
                         std::optional<DutyRange> range) {
    if (points.size() < 2) throw DegenerateDesignError("regression needs at least two points");

    const double n = static_cast<double>(points.size());
    double mean_d = 0.0, mean_v = 0.0;
    for (const auto& p : points) {
        mean_d += p.duty;
        mean_v += p.rate();
    }
    mean_d /= n;
    mean_v /= n;

    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (const auto& p : points) {
        const double dx = p.duty - mean_d;
        const double dy = p.rate() - mean_v;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if (!(sxx > 0.0))
        throw DegenerateDesignError("all calibration duties are identical");

    DutyModel model;
    model.channel = channel;
    model.gain = sxy / sxx;
    model.offset = mean_v - model.gain * mean_d;

    double ss_res = 0.0;
    for (const auto& p : points) {
        const double r = p.rate() - model.rate_at(p.duty);
        ss_res += r * r;
    }
    if (syy > 0.0)
        model.r_squared = 1.0 - ss_res / syy;
    else
        model.r_squared = 1.0;

    const auto r = range.value_or(default_duty_range(channel));
    if (!(r.min >= 0.0 && r.max <= 1.0 && r.min < r.max))
        throw ValidationError("duty range must satisfy 0 <= min < max <= 1");
    model.duty_min = r.min;
    model.duty_max = r.max;
    return model;
}

double invert_duty(const DutyModel& model, double target_rate) {
    if (model.gain == 0.0) throw ValidationError("duty model has zero gain");
    const double duty = (target_rate - model.offset) / model.gain;
    // One part in 1e12 of slack keeps exact boundary targets inside the range.
    const double slack = 1e-12;
    if (duty < model.duty_min - slack || duty > model.duty_max + slack || !std::isfinite(duty)) {
        const auto [lo, hi] = model.feasible_rates();
        throw UnreachableRateError(std::string(to_string(model.channel)) + " rate " +
                                       format_number(target_rate) +
                                       " C/s outside feasible interval [" + format_number(lo) +
                                       ", " + format_number(hi) + "]",
                                   target_rate, lo, hi);
    }
    return std::clamp(duty, model.duty_min, model.duty_max);
}

std::vector<CalibrationPoint> apply_drift_correction(std::span<const CalibrationPoint> points,
                                                     double net_drift, double duration) {
    if (!(duration > 0.0)) throw ValidationError("drift duration must be positive");
    const double shift = net_drift / duration;
    std::vector<CalibrationPoint> out(points.begin(), points.end());
    for (auto& p : out) p.temp_change = (p.rate() + shift) * p.interval;
    return out;
}

ActuatorTimeline idle_timeline(double duration) {
    if (!(duration >= 0.0)) throw ValidationError("duration must be non-negative");
    ActuatorTimeline t;
    t.duration = duration;
    if (duration > 0.0) {
        t.valve.push_back({0.0, duration, 0.0, false});
        t.led.push_back({0.0, duration, 0.0, false});
    }
    return t;
}

ActuatorTimeline schedule_to_timeline(const RateSchedule& schedule, const DutyModel& valve,
                                      const DutyModel& led) {
    if (valve.channel != Channel::valve || led.channel != Channel::led)
        throw ValidationError("schedule_to_timeline needs a valve and an LED model");

    const double cooling = schedule.spec.cooling_rate;
    ActuatorTimeline out;
    out.duration = schedule.duration();

    for (std::size_t i = 0; i < schedule.segments.size(); ++i) {
        const auto& seg = schedule.segments[i];
        try {
            const double valve_duty = invert_duty(valve, cooling);
            out.valve.push_back({seg.start, seg.end, valve_duty, true});
            if (seg.warm_active) {
                const double led_duty = invert_duty(led, seg.target_rate - cooling);
                out.led.push_back({seg.start, seg.end, led_duty, true});
            } else {
                out.led.push_back({seg.start, seg.end, 0.0, false});
            }
        } catch (const UnreachableRateError& e) {
            throw UnreachableRateError("segment " + std::to_string(i) + ": " + e.what(),
                                       e.target(), e.feasible_min(), e.feasible_max());
        }
    }
    return out;
}

void write_timeline_csv(std::ostream& out, const ActuatorTimeline& timeline) {
    out << "channel,start_s,end_s,duty,active\n";
    for (Channel c : {Channel::valve, Channel::led}) {
        for (const auto& e : timeline.channel(c)) {
            out << to_string(c) << ',' << format_number(e.start) << ',' << format_number(e.end)
                << ',' << format_number(e.duty) << ',' << format_flag(e.active) << '\n';
        }
    }
}

std::int64_t PwmWaveform::on_ticks_in_period(std::int64_t k) const {
    const std::int64_t begin = k * period_ticks;
    const std::int64_t end = std::min(begin + period_ticks, total_ticks);
    if (begin >= end) return 0;
    std::int64_t on = 0;
    bool level = false;
    std::int64_t last = begin;
    for (const auto& e : edges) {
        const std::int64_t t = std::clamp(e.tick, begin, end);
        if (level) on += t - last;
        last = t;
        level = e.on;
        if (e.tick >= end) break;
    }
    if (level) on += end - last;
    return on;
}

PwmWaveform pwm_waveform(double duty, double frequency, double duration, double tick) {
    if (!(duty >= 0.0 && duty <= 1.0)) throw ValidationError("PWM duty must lie in [0, 1]");
    if (!(frequency > 0.0)) throw ValidationError("PWM frequency must be positive");
    if (!(duration >= 0.0)) throw ValidationError("PWM duration must be non-negative");
    if (!(tick > 0.0)) throw ValidationError("PWM tick must be positive");

    PwmWaveform w;
    w.frequency = frequency;
    w.tick = tick;
    w.period_ticks = std::max<std::int64_t>(1, std::llround(1.0 / (frequency * tick)));
    w.on_ticks = std::llround(duty * static_cast<double>(w.period_ticks));
    w.total_ticks = std::llround(duration / tick);

    auto push = [&](std::int64_t t, bool on) {
        if (t >= w.total_ticks && !w.edges.empty()) return;
        if (!w.edges.empty() && w.edges.back().on == on) return;
        w.edges.push_back({t, on});
    };

    if (w.on_ticks == 0) {
        push(0, false);
    } else if (w.on_ticks >= w.period_ticks) {
        push(0, true);
    } else {
        for (std::int64_t start = 0; start < w.total_ticks; start += w.period_ticks) {
            push(start, true);
            push(start + w.on_ticks, false);
        }
        if (w.edges.empty()) push(0, false);
    }
    return w;
}

ControlTrace run_control(const ActuatorTimeline& timeline, Plant& plant, double dt,
                         double log_rate) {
    if (!(dt > 0.0 && dt <= kMaxPlantStep))
        throw StepSizeError("control step " + format_number(dt) + " s outside (0, 0.01]");
    if (!(log_rate > 0.0)) throw ValidationError("log rate must be positive");

    const double duration = timeline.duration;
    const auto n_samples = static_cast<std::size_t>(std::llround(duration * log_rate));

    std::vector<double> boundaries;
    for (Channel c : {Channel::valve, Channel::led})
        for (const auto& e : timeline.channel(c)) {
            boundaries.push_back(e.start);
            boundaries.push_back(e.end);
        }
    std::sort(boundaries.begin(), boundaries.end());

    ChannelCursor valve(timeline.valve);
    ChannelCursor led(timeline.led);
    auto command_at = [&](double t) {
        ActuatorCommand cmd;
        if (const auto* e = valve.at(t); e && e->active) {
            cmd.valve_on = true;
            cmd.valve_duty = e->duty;
        }
        if (const auto* e = led.at(t); e && e->active) {
            cmd.led_on = true;
            cmd.led_duty = e->duty;
        }
        return cmd;
    };

    ControlTrace trace;
    trace.samples.reserve(n_samples);
    trace.start_temp = plant.temperature();

    double t = 0.0;
    std::size_t next_sample = 0;
    std::size_t next_boundary = 0;
    while (true) {
        const ActuatorCommand cmd = command_at(t);
        while (next_sample < n_samples &&
               static_cast<double>(next_sample) / log_rate <= t + kBoundaryEps) {
            trace.samples.push_back(
                {static_cast<double>(next_sample) / log_rate, plant.temperature(), cmd});
            ++next_sample;
        }
        if (t >= duration - kBoundaryEps) break;

        while (next_boundary < boundaries.size() &&
               boundaries[next_boundary] <= t + kBoundaryEps)
            ++next_boundary;

        double next = std::min(t + dt, duration);
        if (next_boundary < boundaries.size()) next = std::min(next, boundaries[next_boundary]);
        if (next_sample < n_samples)
            next = std::min(next, static_cast<double>(next_sample) / log_rate);

        plant.step(cmd, next - t);
        t = next;
    }
    trace.end_temp = plant.temperature();
    return trace;
}

void write_trace_csv(std::ostream& out, const ControlTrace& trace) {
    out << "time_s,temp_c,duty_valve,duty_led,valve_on,led_on\n";
    for (const auto& s : trace.samples) {
        out << format_number(s.time) << ',' << format_number(s.temperature) << ','
            << format_number(s.command.valve_duty) << ',' << format_number(s.command.led_duty)
            << ',' << format_flag(s.command.valve_on) << ',' << format_flag(s.command.led_on)
            << '\n';
    }
}

}  // namespace coldloop
