#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "coldloop/error.hpp"
#include "coldloop/experiment.hpp"

using namespace coldloop;

namespace {

std::vector<double> ramp(double rate, double seconds, double hz = 100.0) {
    std::vector<double> t;
    const int n = static_cast<int>(std::lround(seconds * hz));
    for (int i = 0; i < n; ++i) t.push_back(33.0 + rate * i / hz);
    return t;
}

SliderTrace constant_trace(double value, double seconds = 15.0) {
    SliderTrace t;
    t.samples.assign(static_cast<std::size_t>(seconds * t.sample_rate), value);
    return t;
}

double settled(const SliderTrace& t) {
    double sum = 0;
    int n = 0;
    for (std::size_t i = t.samples.size() - 200; i < t.samples.size(); ++i, ++n) sum += t.samples[i];
    return sum / n;
}

}  // namespace

TEST_CASE("participant settles per rate sign") {
    ParticipantModel m;
    const auto cold = simulate_participant(ramp(-0.24, 15.0), 100.0, m);
    const auto warm = simulate_participant(ramp(0.24, 15.0), 100.0, m);
    const auto flat = simulate_participant(ramp(0.0, 15.0), 100.0, m);
    CHECK(cold.samples.size() == 1500);
    CHECK(settled(cold) > 0.9);
    CHECK(settled(warm) < 0.1);
    CHECK(settled(flat) == doctest::Approx(0.5).epsilon(0.02));
    for (const auto* t : {&cold, &warm, &flat})
        for (double s : t->samples) {
            CHECK(s >= 0.0);
            CHECK(s <= 1.0);
        }
    // 3 time constants plus the lag
    const auto idx = static_cast<std::size_t>((3 * m.time_constant + m.slider_lag) * 100);
    CHECK(cold.samples[idx] > 0.9);
}

TEST_CASE("participant is reproducible from its seed") {
    ParticipantModel m;
    m.seed = 99;
    const auto t = ramp(-0.1, 15.0);
    CHECK(simulate_participant(t, 100.0, m).samples == simulate_participant(t, 100.0, m).samples);
    auto other = m;
    other.seed = 100;
    CHECK(simulate_participant(t, 100.0, m).samples != simulate_participant(t, 100.0, other).samples);
    CHECK_THROWS_AS(simulate_participant(t, 50.0, m), ValidationError);
    ParticipantModel bad;
    bad.time_constant = 0.0;
    CHECK_THROWS_AS(bad.validate(), ValidationError);
}

TEST_CASE("confidence and persistence") {
    CHECK(confidence_of_cold(1.0) == 100.0);
    CHECK(confidence_of_cold(0.5) == 50.0);
    CHECK(confidence_of_cold(0.0) == 0.0);
    CHECK_THROWS_AS(confidence_of_cold(1.1), ValidationError);

    CHECK(persistence(constant_trace(0.8)));
    auto dip = constant_trace(0.8);
    dip.samples[1000] = 0.4;
    CHECK_FALSE(persistence(dip));
    auto early = constant_trace(0.8);
    early.samples[300] = 0.3;
    CHECK(persistence(early));
    auto neutral = constant_trace(0.8);
    neutral.samples[700] = 0.5;
    CHECK_FALSE(persistence(neutral));
    CHECK_THROWS_AS(persistence(constant_trace(0.8, 10.0)), ValidationError);

    CHECK(mean_confidence(constant_trace(0.7)) == doctest::Approx(70.0));
}

TEST_CASE("likert rating is monotone and bounded") {
    ParticipantModel m;
    CHECK(likert_rating(50.0, 0.0, m) == 1);
    CHECK(likert_rating(100.0, 1.0, m) == 7);
    int previous = 0;
    for (double c = 0.0; c <= 100.0; c += 5.0) {
        const int r = likert_rating(c, 0.15, m);
        CHECK(r >= previous);
        CHECK(r >= 1);
        CHECK(r <= 7);
        previous = r;
    }
    previous = 0;
    for (double peak = 0.0; peak <= 0.5; peak += 0.02) {
        const int r = likert_rating(75.0, peak, m);
        CHECK(r >= previous);
        previous = r;
    }
}

TEST_CASE("exp2 plan") {
    const auto plan = build_exp2_plan();
    CHECK(plan.stimuli.size() == 35);
    CHECK(plan.trials_per_participant() == 105);
    std::set<std::string> ids, rates;
    for (const auto& s : plan.stimuli) {
        ids.insert(s.id);
        if (s.spec.kind == StimulusKind::S1) rates.insert(std::to_string(s.spec.cooling_rate));
    }
    CHECK(ids.size() == 35);
    CHECK(rates.size() == 5);

    Exp2Config config;
    config.seed = 7;
    const auto a = build_exp2_plan(config), b = build_exp2_plan(config);
    CHECK(a.presentation_order(3) == b.presentation_order(3));
    CHECK(a.presentation_order(3) != a.presentation_order(4));
    auto order = a.presentation_order(0);
    std::sort(order.begin(), order.end());
    for (std::size_t i = 0; i < order.size(); ++i) CHECK(order[i] == i / 3);
}

TEST_CASE("exp3 plan") {
    const auto plan = build_exp3_plan();
    CHECK(plan.stimuli.size() == 5);
    CHECK(plan.trials_per_participant() == 15);
    const std::vector<std::string> ids{"S1_vc-0.08_r0.5", "S1_vc-0.16_r0.5", "S1_vc-0.24_r0.5",
                                       "S2_vc-0.16", "S3_vc-0.16"};
    std::vector<std::string> got;
    for (const auto& s : plan.stimuli) got.push_back(s.id);
    std::sort(got.begin(), got.end());
    CHECK(got == ids);
    for (const auto& s : plan.stimuli)
        if (s.spec.kind == StimulusKind::S1) CHECK(s.spec.cooling_ratio == 0.5);
}

TEST_CASE("seed derivation and plant jitter") {
    CHECK(derive_seed(1, 2) == derive_seed(1, 2));
    CHECK(derive_seed(1, 2) != derive_seed(1, 3));
    CHECK(derive_seed(1, 2, 3) != derive_seed(1, 3, 2));

    const PlantParams base;
    for (std::uint64_t s = 0; s < 200; ++s) {
        const auto p = perturb_plant(base, 0.1, 1.1, s);
        const double kv = p.valve_gain / base.valve_gain;
        const double kl = p.led_gain / base.led_gain;
        CHECK(kv >= 0.9 - 1e-12);
        CHECK(kv <= 1.1 + 1e-12);
        CHECK(p.valve_offset / base.valve_offset == doctest::Approx(kv));
        CHECK(kl >= 0.99 - 1e-12);
        CHECK(kl <= 1.21 + 1e-12);
        CHECK(p.led_offset / base.led_offset == doctest::Approx(kl));
    }
}

TEST_CASE("small experiment run") {
    Exp2Config config;
    config.participants = 2;
    config.seed = 5;
    const auto plan = build_exp2_plan(config);
    RunSettings settings;
    settings.threads = 3;
    const auto setups = prepare_participants(plan, settings);
    REQUIRE(setups.size() == 2);
    CHECK(setups[0].plant.valve_gain != setups[1].plant.valve_gain);

    const auto records = run_experiment(plan, setups, settings);
    REQUIRE(records.size() == 210);
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        CHECK(r.participant == static_cast<int>(i / 105));
        CHECK(r.trial == static_cast<int>(i % 105));
        CHECK(r.slider.has_value());
        CHECK_FALSE(r.likert.has_value());
        CHECK(r.temperatures.size() == 1500);
        CHECK(r.slider->samples.size() == 1500);
    }

    settings.threads = 1;
    const auto serial = run_experiment(plan, setups, settings);
    for (std::size_t i = 0; i < records.size(); ++i) {
        CHECK(serial[i].temperatures == records[i].temperatures);
        CHECK(serial[i].slider->samples == records[i].slider->samples);
        CHECK(serial[i].seed == records[i].seed);
    }

    const auto one = run_trial(plan, setups[1], 7, plan.presentation_order(1)[7], settings);
    CHECK(one.temperatures == records[105 + 7].temperatures);
}

TEST_CASE("exp3 records carry ratings") {
    Exp3Config config;
    config.participants = 1;
    const auto records = run_experiment(build_exp3_plan(config), RunSettings{});
    REQUIRE(records.size() == 15);
    for (const auto& r : records) {
        CHECK_FALSE(r.slider.has_value());
        REQUIRE(r.likert.has_value());
        CHECK(*r.likert >= 1);
        CHECK(*r.likert <= 7);
    }
}
