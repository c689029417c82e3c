#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "coldloop/control.hpp"
#include "coldloop/pattern.hpp"
#include "coldloop/plant.hpp"

namespace coldloop {

/// Measurement-and-verification protocol for fitting both duty models.
///
/// The defaults reproduce the reference procedure: six duties per channel with
/// the two endpoints measured three times (ten measurements), 6 s single
/// stimuli read through a 0.025 °C sensor, then 15 s verification patterns that
/// must each end within ±0.1 °C of where they started.
struct CalibrationProtocol {
    std::vector<double> valve_grid{0.490, 0.514, 0.538, 0.561, 0.584, 0.601};
    std::vector<double> led_grid{0.118, 0.275, 0.431, 0.588, 0.745, 0.902};
    int endpoint_repeats = 3;
    int interior_repeats = 1;
    double interval = 6.0;  // s per single-stimulus measurement

    DutyRange valve_range = default_duty_range(Channel::valve);
    DutyRange led_range = default_duty_range(Channel::led);

    // 0 reads the plant temperature directly (ideal sensor).
    double sensor_resolution = kDefaultSensorResolution;
    // Gaussian error added to every measured rate, °C/s.
    double rate_noise_sigma = 0.0;
    // Idle time between a reading and the stimulus on either side.
    double dead_time = 0.0;

    std::vector<StimulusSpec> verification;  // empty -> default_verification_set()
    double tolerance = 0.1;                  // °C, per verification pattern
    int max_iters = 10;
    // Split the drift correction between both channels instead of warm only.
    bool symmetric_correction = false;

    double dt = kDefaultControlStep;
    std::uint64_t seed = 0;
};

/// The 25 S1 patterns of the cooling-rate x cooling-ratio grid, 15 s each.
std::vector<StimulusSpec> default_verification_set();

/// Grid with each endpoint repeated `endpoint_repeats` times and interior
/// duties `interior_repeats` times, in ascending order.
std::vector<double> expand_grid(const std::vector<double>& grid, int endpoint_repeats,
                                int interior_repeats);

struct VerificationResult {
    StimulusSpec spec;
    double scheduled_change = 0.0;  // integral of the commanded rate
    double measured_change = 0.0;   // sensor after - sensor before
    bool passed = false;
    bool reachable = true;          // false: the models cannot deliver a rate it needs
    std::string diagnosis;          // set when unreachable
    double required_rate = 0.0;     // the out-of-range rate, C/s
    double feasible_min = 0.0;
    double feasible_max = 0.0;
};

struct VerificationRound {
    int iteration = 0;
    DutyModel valve;
    DutyModel led;
    std::vector<VerificationResult> results;
    double mean_drift = 0.0;  // mean of measured - scheduled
    bool passed = false;

    double worst_change() const;
};

struct CalibrationResult {
    DutyModel valve;
    DutyModel led;
    int iterations = 0;
    std::vector<CalibrationPoint> valve_points;  // after any drift correction
    std::vector<CalibrationPoint> led_points;
    std::vector<VerificationRound> rounds;
};

/// One single-stimulus measurement on a freshly reset plant. Measurement
/// noise is drawn from `noise_rng` when the protocol asks for it.
CalibrationPoint measure_point(Plant& plant, Channel channel, double duty,
                               const CalibrationProtocol& protocol,
                               std::mt19937_64* noise_rng = nullptr);

/// Fits both channels, then verifies and drift-corrects until every pattern
/// passes.
///
/// A pattern whose rates fall outside the fitted models fails its round without
/// contributing to the drift estimate; a later correction may bring it into
/// range. UnreachableRateError is thrown once every reachable pattern passes
/// but some remain out of range, or when the budget runs out with patterns
/// still out of range. Otherwise exhausting max_iters throws CalibrationError.
CalibrationResult calibrate(Plant& plant, const CalibrationProtocol& protocol = {});

}  // namespace coldloop
