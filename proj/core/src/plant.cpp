#include "coldloop/plant.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "coldloop/error.hpp"
#include "coldloop/format.hpp"

namespace coldloop {

void PlantParams::validate() const {
    if (!(valve_gain < 0.0)) throw ValidationError("valve gain must be negative");
    if (!(led_gain > 0.0)) throw ValidationError("LED gain must be positive");
    if (!(relax_coeff >= 0.0)) throw ValidationError("relax_coeff must be non-negative");
    if (!(noise_sigma >= 0.0)) throw ValidationError("noise_sigma must be non-negative");
    for (double v : {valve_offset, led_offset, neutral_temp, initial_temp, coupled_warm_bias})
        if (!std::isfinite(v)) throw ValidationError("plant parameters must be finite");
}

Plant::Plant(PlantParams params, std::uint64_t seed)
    : params_(params), temperature_(params.initial_temp), rng_(seed) {
    params_.validate();
}

void Plant::reset(double temperature) {
    if (!std::isfinite(temperature)) throw ValidationError("temperature must be finite");
    temperature_ = temperature;
    time_ = 0.0;
}

double Plant::rate(const ActuatorCommand& cmd) const {
    double r = params_.relax_coeff * (params_.neutral_temp - temperature_);
    if (cmd.valve_on) r += params_.valve_gain * cmd.valve_duty + params_.valve_offset;
    if (cmd.led_on) r += params_.led_gain * cmd.led_duty + params_.led_offset;
    if (cmd.valve_on && cmd.led_on) r += params_.coupled_warm_bias;
    return r;
}

void Plant::step(const ActuatorCommand& cmd, double dt) {
    if (!(dt > 0.0 && dt <= kMaxPlantStep))
        throw StepSizeError("plant step " + format_number(dt) + " s outside (0, 0.01]");
    if (!(cmd.valve_duty >= 0.0 && cmd.valve_duty <= 1.0) ||
        !(cmd.led_duty >= 0.0 && cmd.led_duty <= 1.0))
        throw ValidationError("duty ratios must lie in [0, 1]");

    double r = rate(cmd);
    if (params_.noise_sigma > 0.0) r += params_.noise_sigma * noise_(rng_);
    temperature_ += dt * r;
    time_ += dt;
}

SensorReading read_sensor(double temperature, double resolution) {
    if (!(resolution > 0.0)) throw ValidationError("sensor resolution must be positive");
    const double q = temperature / resolution;
    const double lower = std::floor(q);
    const double frac = q - lower;
    double n;
    // Inputs written in decimal (30.0125 at 0.025) rarely land exactly on .5
    // after division, so a small band around the midpoint counts as a tie.
    if (std::abs(frac - 0.5) <= 1e-9)
        n = q >= 0.0 ? lower + 1.0 : lower;
    else
        n = std::round(q);
    return SensorReading{static_cast<std::int64_t>(n), resolution};
}

std::string_view to_string(LedRing ring) {
    return ring == LedRing::inner ? "inner" : "outer";
}

LedPlacement led_position(LedRing ring, double radius_mm, double angle_deg, int count) {
    if (!(radius_mm > 0.0)) throw ValidationError("radius must be positive");
    if (!(angle_deg >= 0.0 && angle_deg <= 90.0))
        throw ValidationError("LED angle must lie in [0, 90] degrees");
    const double rad = angle_deg * std::numbers::pi / 180.0;
    return LedPlacement{ring, count, angle_deg, radius_mm * std::cos(rad),
                        radius_mm * std::sin(rad)};
}

LedLayout led_positions(double radius_mm, RingSpec inner, RingSpec outer,
                        double nozzle_diameter_mm) {
    if (!(radius_mm > 0.0)) throw ValidationError("radius must be positive");
    if (!(nozzle_diameter_mm > 0.0)) throw ValidationError("nozzle diameter must be positive");
    for (const auto& ring : {inner, outer}) {
        if (ring.count < 0) throw ValidationError("LED count must be non-negative");
        if (!(ring.angle_deg > 0.0 && ring.angle_deg <= 90.0))
            throw ValidationError("ring angle must lie in (0, 90] degrees");
    }
    LedLayout layout;
    layout.radius_mm = radius_mm;
    layout.entries.push_back(led_position(LedRing::inner, radius_mm, inner.angle_deg, inner.count));
    layout.entries.push_back(led_position(LedRing::outer, radius_mm, outer.angle_deg, outer.count));
    layout.nozzle_diameter_mm = nozzle_diameter_mm;
    layout.nozzle_distance_mm = kNozzleDistanceRatio * nozzle_diameter_mm;
    return layout;
}

}  // namespace coldloop
