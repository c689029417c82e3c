#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "coldloop/calibration.hpp"
#include "coldloop/control.hpp"
#include "coldloop/pattern.hpp"
#include "coldloop/plant.hpp"

namespace coldloop {

// --- synthetic participant -------------------------------------------------

/// Stand-in for a human observer operating the C/N/H slider.
///
/// The skin rate dT/dt is split into a cooling drive and a warming drive, each
/// reduced by `detect_threshold`. The cold percept follows its drive with a fast
/// attack (`attack_time`) and slow release (`time_constant`); the warm percept is
/// a plain low-pass with `time_constant`, so short warm pulses are attenuated
/// while brief cooling pulses register. The slider sits at
/// 0.5 + 0.5 tanh(gain * (cold - warm)), delayed by `slider_lag`, plus clipped
/// Gaussian noise, clamped to [0, 1].
struct ParticipantModel {
    double detect_threshold = 0.02;  // °C/s
    double time_constant = 1.0;      // s
    double attack_time = 0.1;        // s
    double slider_lag = 0.5;         // s
    double response_noise = 0.02;    // slider units
    double gain = 20.0;              // per °C/s
    double peak_reference = 0.3;     // °C/s of cold percept that saturates intensity
    std::uint64_t seed = 0;

    void validate() const;
};

/// Slider position samples; 1 = "C" end, 0.5 = "N", 0 = "H".
struct SliderTrace {
    double sample_rate = 100.0;
    std::vector<double> samples;

    double duration() const { return static_cast<double>(samples.size()) / sample_rate; }
};

struct Perception {
    SliderTrace slider;
    double peak_cold = 0.0;  // largest cold percept over the trial, °C/s
};

/// Runs the participant over a temperature trace sampled at `sample_rate`
/// (>= 100 Hz). Noise is drawn from the model's seed.
Perception perceive(std::span<const double> temperatures, double sample_rate,
                    const ParticipantModel& model);

inline SliderTrace simulate_participant(std::span<const double> temperatures,
                                        double sample_rate, const ParticipantModel& model) {
    return perceive(temperatures, sample_rate, model).slider;
}

/// Slider position to confidence of cold, in percent.
double confidence_of_cold(double slider);

/// Mean confidence of cold (percent) over samples with time in [from, to).
double mean_confidence(const SliderTrace& trace, double from = 0.0, double to = 15.0);

inline constexpr double kPersistenceStart = 5.0;  // s
inline constexpr double kPersistenceEnd = 15.0;   // s

/// True iff every sample in [5 s, 15 s] reports confidence above 50 %.
bool persistence(const SliderTrace& trace);

/// 7-point coldness rating from mean confidence (percent) and peak cold percept:
/// clamp(round(1 + 6 f), 1, 7) with f the average of the normalised confidence
/// above neutral and the peak relative to `peak_reference`.
int likert_rating(double mean_confidence_pct, double peak_cold, const ParticipantModel& model);

// --- plans -----------------------------------------------------------------

enum class ExperimentKind { exp1, exp2, exp3 };
std::string_view to_string(ExperimentKind kind);

struct Stimulus {
    std::string id;
    StimulusSpec spec;
};

struct ExperimentPlan {
    ExperimentKind kind = ExperimentKind::exp2;
    std::vector<Stimulus> stimuli;
    int repetitions = 3;
    int participants = 15;
    std::uint64_t seed = 0;

    std::size_t trials_per_participant() const {
        return stimuli.size() * static_cast<std::size_t>(repetitions);
    }
    /// Stimulus index of each trial for one participant: every stimulus
    /// `repetitions` times, shuffled from (seed, participant).
    std::vector<std::size_t> presentation_order(int participant) const;
};

struct Exp2Config {
    std::vector<double> cooling_rates{-0.08, -0.12, -0.16, -0.20, -0.24};
    std::vector<double> cooling_ratios{0.1, 0.2, 0.3, 0.4, 0.5};
    int repetitions = 3;
    int participants = 15;
    double swing = 0.06;
    double duration = 15.0;
    double s2_drop_duration = 5.0;
    std::uint64_t seed = 0;
};

struct Exp3Config {
    double baseline_rate = -0.16;
    double cooling_ratio = 0.5;
    std::vector<double> comparison_rates{-0.08, -0.24};
    int repetitions = 3;
    int participants = 15;
    double swing = 0.06;
    double duration = 15.0;
    double s2_drop_duration = 5.0;
    std::uint64_t seed = 0;
};

/// S1 over rates x ratios, then S2 and S3 at each rate.
ExperimentPlan build_exp2_plan(const Exp2Config& config = {});

/// S1 at each rate (comparison and baseline) with a shared ratio, plus S2 and
/// S3 at the baseline rate.
ExperimentPlan build_exp3_plan(const Exp3Config& config = {});

// --- running ---------------------------------------------------------------

struct TrialRecord {
    int participant = 0;
    int trial = 0;  // 0-based presentation index
    std::string stimulus_id;
    StimulusSpec spec;
    std::uint64_t seed = 0;
    std::optional<SliderTrace> slider;  // exp2
    std::optional<int> likert;          // exp3
    double log_rate = kDefaultLogRate;
    std::vector<double> temperatures;
    double net_change = 0.0;
};

struct RunSettings {
    PlantParams base_plant;
    // Per-participant rate-space gain jitter, applied to each channel's affine map.
    double plant_jitter = 0.10;
    // Nominal LED gain multiplier for participants, leaving headroom for the
    // strongest warming rate under negative jitter.
    double led_gain_nominal = 1.1;
    CalibrationProtocol protocol;
    ParticipantModel participant;
    double dt = kDefaultControlStep;
    double log_rate = kDefaultLogRate;
    unsigned threads = 0;  // 0 -> hardware concurrency
};

struct ParticipantSetup {
    int index = 0;
    PlantParams plant;
    DutyModel valve;
    DutyModel led;
    int calibration_iterations = 0;
    ParticipantModel perceiver;
};

/// Deterministic 64-bit mix of a base seed with stream identifiers.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0,
                          std::uint64_t c = 0);

/// Scales each channel's (gain, offset) by an independent factor drawn from
/// [1 - jitter, 1 + jitter] (times `led_gain_nominal` for the LED).
PlantParams perturb_plant(const PlantParams& base, double jitter, double led_gain_nominal,
                          std::uint64_t seed);

/// Builds and calibrates every participant's plant.
std::vector<ParticipantSetup> prepare_participants(const ExperimentPlan& plan,
                                                   const RunSettings& settings);

TrialRecord run_trial(const ExperimentPlan& plan, const ParticipantSetup& participant,
                      int trial, std::size_t stimulus_index, const RunSettings& settings);

/// Runs every trial of every participant. Records come back participant-major
/// in presentation order regardless of how many threads ran them.
std::vector<TrialRecord> run_experiment(const ExperimentPlan& plan,
                                        const std::vector<ParticipantSetup>& participants,
                                        const RunSettings& settings);

std::vector<TrialRecord> run_experiment(const ExperimentPlan& plan, const RunSettings& settings);

}  // namespace coldloop
