#include "coldloop/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <random>
#include <thread>

#include "coldloop/error.hpp"
#include "coldloop/format.hpp"

namespace coldloop {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Seed streams within one trial.
enum Stream : std::uint64_t { kPlantStream = 1, kPerceiverStream = 2, kOrderStream = 3,
                              kSetupStream = 4, kCalibrationStream = 5 };

Stimulus make_stimulus(const StimulusSpec& spec) { return Stimulus{stimulus_id(spec), spec}; }

}  // namespace

void ParticipantModel::validate() const {
    for (double v : {detect_threshold, slider_lag, response_noise, gain, attack_time})
        if (!(v >= 0.0) || !std::isfinite(v))
            throw ValidationError("participant model parameters must be non-negative");
    if (!(time_constant > 0.0)) throw ValidationError("time_constant must be positive");
    if (!(peak_reference > 0.0)) throw ValidationError("peak_reference must be positive");
}

Perception perceive(std::span<const double> temperatures, double sample_rate,
                    const ParticipantModel& model) {
    model.validate();
    if (!(sample_rate >= 100.0)) throw ValidationError("participant input must be >= 100 Hz");

    const std::size_t n = temperatures.size();
    const double h = 1.0 / sample_rate;
    const double release = 1.0 - std::exp(-h / model.time_constant);
    const double attack =
        model.attack_time > 0.0 ? 1.0 - std::exp(-h / model.attack_time) : 1.0;

    Perception out;
    out.slider.sample_rate = sample_rate;
    std::vector<double> target(n, 0.5);
    double cold = 0.0;
    double warm = 0.0;
    for (std::size_t k = 1; k < n; ++k) {
        const double rate = (temperatures[k] - temperatures[k - 1]) * sample_rate;
        const double cold_drive = std::max(0.0, -rate - model.detect_threshold);
        const double warm_drive = std::max(0.0, rate - model.detect_threshold);
        cold += (cold_drive - cold) * (cold_drive > cold ? attack : release);
        warm += (warm_drive - warm) * release;
        out.peak_cold = std::max(out.peak_cold, cold);
        target[k] = 0.5 + 0.5 * std::tanh(model.gain * (cold - warm));
    }

    const auto lag = static_cast<std::size_t>(std::llround(model.slider_lag * sample_rate));
    std::mt19937_64 rng(model.seed);
    std::normal_distribution<double> noise(0.0, 1.0);
    out.slider.samples.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double base = k >= lag ? target[k - lag] : 0.5;
        const double z = std::clamp(noise(rng), -3.0, 3.0);
        out.slider.samples[k] = std::clamp(base + model.response_noise * z, 0.0, 1.0);
    }
    return out;
}

double confidence_of_cold(double slider) {
    if (!(slider >= 0.0 && slider <= 1.0))
        throw ValidationError("slider sample must lie in [0, 1]");
    return 100.0 * slider;
}

double mean_confidence(const SliderTrace& trace, double from, double to) {
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t k = 0; k < trace.samples.size(); ++k) {
        const double t = static_cast<double>(k) / trace.sample_rate;
        if (t < from - 1e-9 || t >= to - 1e-9) continue;
        sum += confidence_of_cold(trace.samples[k]);
        ++count;
    }
    if (count == 0) throw ValidationError("no slider samples in the averaging window");
    return sum / static_cast<double>(count);
}

bool persistence(const SliderTrace& trace) {
    if (trace.duration() < kPersistenceEnd - 1e-9)
        throw ValidationError("persistence needs a trace of at least 15 s");
    for (std::size_t k = 0; k < trace.samples.size(); ++k) {
        const double t = static_cast<double>(k) / trace.sample_rate;
        if (t < kPersistenceStart - 1e-9) continue;
        if (t > kPersistenceEnd + 1e-9) break;
        if (!(confidence_of_cold(trace.samples[k]) > 50.0)) return false;
    }
    return true;
}

int likert_rating(double mean_confidence_pct, double peak_cold, const ParticipantModel& model) {
    const double above_neutral = std::clamp((mean_confidence_pct - 50.0) / 50.0, 0.0, 1.0);
    const double intensity = std::clamp(peak_cold / model.peak_reference, 0.0, 1.0);
    const double f = 0.5 * above_neutral + 0.5 * intensity;
    return std::clamp(static_cast<int>(std::lround(1.0 + 6.0 * f)), 1, 7);
}

std::string_view to_string(ExperimentKind kind) {
    switch (kind) {
        case ExperimentKind::exp1: return "exp1";
        case ExperimentKind::exp2: return "exp2";
        case ExperimentKind::exp3: return "exp3";
    }
    return "?";
}

std::vector<std::size_t> ExperimentPlan::presentation_order(int participant) const {
    std::vector<std::size_t> order;
    order.reserve(trials_per_participant());
    for (int r = 0; r < repetitions; ++r)
        for (std::size_t i = 0; i < stimuli.size(); ++i) order.push_back(i);
    std::mt19937_64 rng(derive_seed(seed, kOrderStream, static_cast<std::uint64_t>(participant)));
    std::shuffle(order.begin(), order.end(), rng);
    return order;
}

ExperimentPlan build_exp2_plan(const Exp2Config& config) {
    if (config.repetitions < 1 || config.participants < 1)
        throw ValidationError("repetitions and participants must be positive");
    ExperimentPlan plan;
    plan.kind = ExperimentKind::exp2;
    plan.repetitions = config.repetitions;
    plan.participants = config.participants;
    plan.seed = config.seed;

    for (double rate : config.cooling_rates)
        for (double ratio : config.cooling_ratios)
            plan.stimuli.push_back(make_stimulus({StimulusKind::S1, rate, ratio, config.swing,
                                                  config.duration, config.s2_drop_duration}));
    for (StimulusKind kind : {StimulusKind::S2, StimulusKind::S3})
        for (double rate : config.cooling_rates)
            plan.stimuli.push_back(make_stimulus(
                {kind, rate, 0.5, config.swing, config.duration, config.s2_drop_duration}));

    for (const auto& s : plan.stimuli) require_valid(s.spec);
    return plan;
}

ExperimentPlan build_exp3_plan(const Exp3Config& config) {
    if (config.repetitions < 1 || config.participants < 1)
        throw ValidationError("repetitions and participants must be positive");
    ExperimentPlan plan;
    plan.kind = ExperimentKind::exp3;
    plan.repetitions = config.repetitions;
    plan.participants = config.participants;
    plan.seed = config.seed;

    std::vector<double> rates = config.comparison_rates;
    rates.push_back(config.baseline_rate);
    std::sort(rates.begin(), rates.end(), std::greater<>());
    rates.erase(std::unique(rates.begin(), rates.end()), rates.end());

    for (double rate : rates)
        plan.stimuli.push_back(make_stimulus({StimulusKind::S1, rate, config.cooling_ratio,
                                              config.swing, config.duration,
                                              config.s2_drop_duration}));
    for (StimulusKind kind : {StimulusKind::S2, StimulusKind::S3})
        plan.stimuli.push_back(make_stimulus({kind, config.baseline_rate, config.cooling_ratio,
                                              config.swing, config.duration,
                                              config.s2_drop_duration}));

    for (const auto& s : plan.stimuli) require_valid(s.spec);
    return plan;
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b,
                          std::uint64_t c) {
    std::uint64_t x = splitmix64(base);
    x = splitmix64(x ^ a);
    x = splitmix64(x ^ b);
    return splitmix64(x ^ c);
}

PlantParams perturb_plant(const PlantParams& base, double jitter, double led_gain_nominal,
                          std::uint64_t seed) {
    if (!(jitter >= 0.0 && jitter < 1.0)) throw ValidationError("jitter must lie in [0, 1)");
    if (!(led_gain_nominal > 0.0)) throw ValidationError("LED nominal gain must be positive");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(1.0 - jitter, 1.0 + jitter);
    PlantParams p = base;
    const double valve_scale = u(rng);
    const double led_scale = u(rng) * led_gain_nominal;
    p.valve_gain *= valve_scale;
    p.valve_offset *= valve_scale;
    p.led_gain *= led_scale;
    p.led_offset *= led_scale;
    return p;
}

std::vector<ParticipantSetup> prepare_participants(const ExperimentPlan& plan,
                                                   const RunSettings& settings) {
    std::vector<ParticipantSetup> out;
    for (int i = 0; i < plan.participants; ++i) {
        ParticipantSetup s;
        s.index = i;
        s.plant = perturb_plant(settings.base_plant, settings.plant_jitter,
                                settings.led_gain_nominal,
                                derive_seed(plan.seed, kSetupStream, static_cast<std::uint64_t>(i)));
        CalibrationProtocol protocol = settings.protocol;
        protocol.dt = settings.dt;
        protocol.seed = derive_seed(plan.seed, kCalibrationStream, static_cast<std::uint64_t>(i));
        Plant plant(s.plant, derive_seed(plan.seed, kPlantStream, static_cast<std::uint64_t>(i)));
        const auto cal = calibrate(plant, protocol);
        s.valve = cal.valve;
        s.led = cal.led;
        s.calibration_iterations = cal.iterations;
        s.perceiver = settings.participant;
        out.push_back(std::move(s));
    }
    return out;
}

TrialRecord run_trial(const ExperimentPlan& plan, const ParticipantSetup& participant, int trial,
                      std::size_t stimulus_index, const RunSettings& settings) {
    const auto& stimulus = plan.stimuli.at(stimulus_index);

    TrialRecord rec;
    rec.participant = participant.index;
    rec.trial = trial;
    rec.stimulus_id = stimulus.id;
    rec.spec = stimulus.spec;
    rec.seed = derive_seed(plan.seed, static_cast<std::uint64_t>(participant.index),
                           static_cast<std::uint64_t>(trial));
    rec.log_rate = settings.log_rate;

    const auto schedule = compile_schedule(stimulus.spec);
    ActuatorTimeline timeline;
    try {
        timeline = schedule_to_timeline(schedule, participant.valve, participant.led);
    } catch (const UnreachableRateError& e) {
        throw UnreachableRateError("stimulus " + stimulus.id + ", " + e.what(), e.target(),
                                   e.feasible_min(), e.feasible_max());
    }

    Plant plant(participant.plant, derive_seed(rec.seed, kPlantStream));
    plant.reset();
    const auto trace = run_control(timeline, plant, settings.dt, settings.log_rate);
    rec.net_change = trace.net_change();
    rec.temperatures.reserve(trace.samples.size());
    for (const auto& s : trace.samples) rec.temperatures.push_back(s.temperature);

    ParticipantModel perceiver = participant.perceiver;
    perceiver.seed = derive_seed(rec.seed, kPerceiverStream);
    auto perception = perceive(rec.temperatures, settings.log_rate, perceiver);

    if (plan.kind == ExperimentKind::exp3) {
        const double conf = mean_confidence(perception.slider, 0.0, stimulus.spec.duration);
        rec.likert = likert_rating(conf, perception.peak_cold, perceiver);
    } else {
        rec.slider = std::move(perception.slider);
    }
    return rec;
}

std::vector<TrialRecord> run_experiment(const ExperimentPlan& plan,
                                        const std::vector<ParticipantSetup>& participants,
                                        const RunSettings& settings) {
    if (plan.kind == ExperimentKind::exp1)
        throw ValidationError("exp1 is calibration only; use prepare_participants");

    const std::size_t per = plan.trials_per_participant();
    std::vector<TrialRecord> records(participants.size() * per);

    unsigned threads = settings.threads ? settings.threads : std::thread::hardware_concurrency();
    threads = std::clamp<unsigned>(threads, 1, static_cast<unsigned>(std::max<std::size_t>(1, participants.size())));

    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (std::size_t p; (p = next.fetch_add(1)) < participants.size();) {
            try {
                const auto order = plan.presentation_order(participants[p].index);
                for (std::size_t t = 0; t < per; ++t)
                    records[p * per + t] =
                        run_trial(plan, participants[p], static_cast<int>(t), order[t], settings);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next = participants.size();
            }
        }
    };

    if (threads == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned i = 0; i < threads; ++i) pool.emplace_back(worker);
    }
    if (failure) std::rethrow_exception(failure);
    return records;
}

std::vector<TrialRecord> run_experiment(const ExperimentPlan& plan, const RunSettings& settings) {
    return run_experiment(plan, prepare_participants(plan, settings), settings);
}

}  // namespace coldloop
