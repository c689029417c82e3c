#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace coldloop {

/// Hidden ground truth of the simulated skin node.
///
/// Each actuator contributes an affine duty -> rate term while it is on. The
/// defaults map valve duty 0.490..0.601 onto roughly -0.05..-0.30 °C/s and LED
/// duty 0.118..0.902 onto +0.02..+0.50 °C/s. They are simulator settings, not
/// physiological measurements: the node is a rate-space abstraction with no
/// thermal capacitance or convection coefficient behind it.
struct PlantParams {
    double valve_gain = -2.252;   // °C/s per duty fraction
    double valve_offset = 1.0535; // °C/s
    double led_gain = 0.6122;
    double led_offset = -0.0522;
    double relax_coeff = 0.002;   // 1/s, pull toward neutral_temp
    double neutral_temp = 24.0;   // °C
    double initial_temp = 33.0;   // °C
    double noise_sigma = 0.0;     // °C/s, process noise on the rate
    // Extra warming that appears only while both channels run together.
    // Single-channel calibration cannot see it, only pattern verification can.
    double coupled_warm_bias = 0.0;

    void validate() const;
};

/// Descriptive operating constants of the physical display. They are carried
/// in plant config files but do not enter the lumped dynamics.
struct DisplayConstants {
    double air_pressure_mpa = 0.6;
    double cold_air_ratio = 0.75;
    double cold_air_temp_c = 0.0;
    double ambient_temp_c = 24.0;
    double lens_fwhm_deg = 28.0;
};

struct ActuatorCommand {
    double valve_duty = 0.0;
    double led_duty = 0.0;
    bool valve_on = false;
    bool led_on = false;
};

inline constexpr double kMaxPlantStep = 0.01;  // s

/// Single lumped skin node, integrated with explicit Euler steps.
///
/// An instance is single-owner. Concurrent simulations each own their own
/// plant; there is no shared state between instances.
class Plant {
public:
    explicit Plant(PlantParams params = {}, std::uint64_t seed = 0);

    const PlantParams& params() const { return params_; }
    double temperature() const { return temperature_; }
    double time() const { return time_; }

    /// Resets temperature and clock; the noise stream is left untouched.
    void reset(double temperature);
    void reset() { reset(params_.initial_temp); }
    void reseed(std::uint64_t seed) { rng_.seed(seed); }

    /// Deterministic part of dT/dt at the current temperature.
    double rate(const ActuatorCommand& cmd) const;

    /// Advances by dt in (0, kMaxPlantStep]. Duties must lie in [0, 1].
    void step(const ActuatorCommand& cmd, double dt);

private:
    PlantParams params_;
    double temperature_;
    double time_ = 0.0;
    std::mt19937_64 rng_;
    std::normal_distribution<double> noise_{0.0, 1.0};
};

/// A quantized thermographic reading: value == counts * resolution.
struct SensorReading {
    std::int64_t counts = 0;
    double resolution = 0.025;

    double value() const { return static_cast<double>(counts) * resolution; }
};

inline constexpr double kDefaultSensorResolution = 0.025;  // °C

/// Rounds to the nearest multiple of `resolution`; ties go away from zero.
SensorReading read_sensor(double temperature, double resolution = kDefaultSensorResolution);
inline SensorReading read_sensor(const Plant& plant,
                                 double resolution = kDefaultSensorResolution) {
    return read_sensor(plant.temperature(), resolution);
}

// --- presentation geometry -------------------------------------------------

enum class LedRing { inner, outer };
std::string_view to_string(LedRing ring);

struct RingSpec {
    int count = 0;
    double angle_deg = 0.0;
};

struct LedPlacement {
    LedRing ring = LedRing::inner;
    int count = 0;
    double angle_deg = 0.0;
    double x_mm = 0.0;
    double y_mm = 0.0;
};

struct LedLayout {
    double radius_mm = 60.0;
    std::vector<LedPlacement> entries;
    double nozzle_diameter_mm = 6.0;
    double nozzle_distance_mm = 42.0;
};

/// Cross-section position of an LED on a hemisphere of `radius` tilted by
/// `angle_deg`, aimed at the skin centre: (r cos θ, r sin θ).
LedPlacement led_position(LedRing ring, double radius_mm, double angle_deg, int count = 1);

inline constexpr double kNozzleDistanceRatio = 7.0;

LedLayout led_positions(double radius_mm = 60.0, RingSpec inner = {6, 20.5},
                        RingSpec outer = {12, 45.0}, double nozzle_diameter_mm = 6.0);

}  // namespace coldloop
