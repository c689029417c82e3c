#include "coldloop/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

#include "coldloop/error.hpp"
#include "coldloop/format.hpp"

namespace coldloop {

namespace {

double read(const Plant& plant, double resolution) {
    return resolution > 0.0 ? read_sensor(plant, resolution).value() : plant.temperature();
}

void idle(Plant& plant, double seconds, double dt) {
    if (seconds > 0.0) run_control(idle_timeline(seconds), plant, dt, 1.0 / seconds);
}

std::vector<CalibrationPoint> measure_grid(Plant& plant, Channel channel,
                                           const std::vector<double>& grid,
                                           const CalibrationProtocol& protocol,
                                           std::mt19937_64& rng) {
    std::vector<CalibrationPoint> points;
    for (double duty : expand_grid(grid, protocol.endpoint_repeats, protocol.interior_repeats))
        points.push_back(measure_point(plant, channel, duty, protocol, &rng));
    return points;
}

VerificationResult verify_pattern(Plant& plant, const StimulusSpec& spec,
                                  const DutyModel& valve, const DutyModel& led,
                                  const CalibrationProtocol& protocol) {
    const auto schedule = compile_schedule(spec);
    VerificationResult r;
    r.spec = spec;
    r.scheduled_change = schedule.integrated_change();

    ActuatorTimeline timeline;
    try {
        timeline = schedule_to_timeline(schedule, valve, led);
    } catch (const UnreachableRateError& e) {
        r.reachable = false;
        r.diagnosis = "verification pattern " + stimulus_id(spec) + ", " + e.what();
        r.required_rate = e.target();
        r.feasible_min = e.feasible_min();
        r.feasible_max = e.feasible_max();
        return r;
    }

    plant.reset();
    const double before = read(plant, protocol.sensor_resolution);
    idle(plant, protocol.dead_time, protocol.dt);
    run_control(timeline, plant, protocol.dt);
    idle(plant, protocol.dead_time, protocol.dt);
    const double after = read(plant, protocol.sensor_resolution);

    r.measured_change = after - before;
    r.passed = std::abs(r.measured_change) <= protocol.tolerance;
    return r;
}

std::string residual_report(const std::vector<VerificationRound>& rounds) {
    std::ostringstream os;
    for (const auto& round : rounds) {
        os << "\n  round " << round.iteration << ": worst |dT| "
           << format_number(round.worst_change()) << " C, mean drift "
           << format_number(round.mean_drift) << " C";
    }
    return os.str();
}

}  // namespace

std::vector<StimulusSpec> default_verification_set() {
    std::vector<StimulusSpec> set;
    for (double rate : {-0.08, -0.12, -0.16, -0.20, -0.24})
        for (double ratio : {0.1, 0.2, 0.3, 0.4, 0.5})
            set.push_back(StimulusSpec{StimulusKind::S1, rate, ratio, 0.06, 15.0, 5.0});
    return set;
}

std::vector<double> expand_grid(const std::vector<double>& grid, int endpoint_repeats,
                                int interior_repeats) {
    if (grid.size() < 2) throw ValidationError("calibration grid needs at least two duties");
    if (endpoint_repeats < 1 || interior_repeats < 1)
        throw ValidationError("repeat counts must be at least one");
    std::vector<double> sorted = grid;
    std::sort(sorted.begin(), sorted.end());
    std::vector<double> out;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        const bool endpoint = i == 0 || i + 1 == sorted.size();
        out.insert(out.end(), endpoint ? endpoint_repeats : interior_repeats, sorted[i]);
    }
    return out;
}

double VerificationRound::worst_change() const {
    double worst = 0.0;
    for (const auto& r : results) worst = std::max(worst, std::abs(r.measured_change));
    return worst;
}

CalibrationPoint measure_point(Plant& plant, Channel channel, double duty,
                               const CalibrationProtocol& protocol, std::mt19937_64* noise_rng) {
    if (!(protocol.interval > 0.0)) throw ValidationError("measurement interval must be positive");

    ActuatorTimeline timeline = idle_timeline(protocol.interval);
    auto& entries = channel == Channel::valve ? timeline.valve : timeline.led;
    entries = {{0.0, protocol.interval, duty, true}};

    plant.reset();
    const double before = read(plant, protocol.sensor_resolution);
    idle(plant, protocol.dead_time, protocol.dt);
    run_control(timeline, plant, protocol.dt);
    idle(plant, protocol.dead_time, protocol.dt);
    const double after = read(plant, protocol.sensor_resolution);

    CalibrationPoint p{duty, after - before, protocol.interval};
    if (protocol.rate_noise_sigma > 0.0 && noise_rng) {
        std::normal_distribution<double> noise(0.0, protocol.rate_noise_sigma);
        p.temp_change += noise(*noise_rng) * protocol.interval;
    }
    return p;
}

CalibrationResult calibrate(Plant& plant, const CalibrationProtocol& protocol) {
    if (protocol.max_iters < 1) throw ValidationError("max_iters must be at least one");
    if (!(protocol.tolerance > 0.0)) throw ValidationError("tolerance must be positive");

    std::mt19937_64 rng(protocol.seed);
    CalibrationResult result;
    result.valve_points = measure_grid(plant, Channel::valve, protocol.valve_grid, protocol, rng);
    result.led_points = measure_grid(plant, Channel::led, protocol.led_grid, protocol, rng);

    const auto verification =
        protocol.verification.empty() ? default_verification_set() : protocol.verification;

    for (int iter = 1; iter <= protocol.max_iters; ++iter) {
        result.valve = fit_duty_model(result.valve_points, Channel::valve, protocol.valve_range);
        result.led = fit_duty_model(result.led_points, Channel::led, protocol.led_range);
        result.iterations = iter;

        VerificationRound round;
        round.iteration = iter;
        round.valve = result.valve;
        round.led = result.led;
        round.passed = true;
        double drift_sum = 0.0;
        double duration = 0.0;
        int measured = 0;
        bool reachable_failed = false;
        for (const auto& spec : verification) {
            auto r = verify_pattern(plant, spec, result.valve, result.led, protocol);
            round.passed = round.passed && r.passed;
            if (r.reachable) {
                drift_sum += r.measured_change - r.scheduled_change;
                duration += spec.duration;
                ++measured;
                reachable_failed = reachable_failed || !r.passed;
            }
            round.results.push_back(std::move(r));
        }
        const auto unreachable = std::find_if(round.results.begin(), round.results.end(),
                                              [](const auto& r) { return !r.reachable; });
        const bool any_unreachable = unreachable != round.results.end();
        round.mean_drift = measured ? drift_sum / measured : 0.0;
        if (any_unreachable && (!reachable_failed || iter == protocol.max_iters)) {
            throw UnreachableRateError(unreachable->diagnosis + " (after " +
                                           std::to_string(iter) + " calibration round(s))",
                                       unreachable->required_rate, unreachable->feasible_min,
                                       unreachable->feasible_max);
        }
        const bool passed = round.passed;
        const double drift = round.mean_drift;
        result.rounds.push_back(std::move(round));
        if (passed) return result;
        if (measured == 0) continue;
        duration /= measured;
        if (protocol.symmetric_correction) {
            result.led_points = apply_drift_correction(result.led_points, drift / 2, duration);
            result.valve_points =
                apply_drift_correction(result.valve_points, drift / 2, duration);
        } else {
            result.led_points = apply_drift_correction(result.led_points, drift, duration);
        }
    }

    throw CalibrationError("calibration did not converge within " +
                           std::to_string(protocol.max_iters) + " iterations" +
                           residual_report(result.rounds));
}

}  // namespace coldloop
