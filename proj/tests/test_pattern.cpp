#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "coldloop/error.hpp"
#include "coldloop/pattern.hpp"

using namespace coldloop;

namespace {

StimulusSpec s1(double vc, double ratio, double swing = 0.06, double duration = 15.0) {
    return StimulusSpec{StimulusKind::S1, vc, ratio, swing, duration, 5.0};
}

bool has_message(const std::vector<SpecIssue>& issues, const std::string& needle) {
    for (const auto& i : issues)
        if (i.message.find(needle) != std::string::npos) return true;
    return false;
}

}  // namespace

TEST_CASE("worked example") {
    const auto d = derive_pattern(s1(-0.1, 0.5));
    CHECK(d.cooling_time == doctest::Approx(0.6).epsilon(1e-12));
    CHECK(d.cycle_time == doctest::Approx(1.2).epsilon(1e-12));
    CHECK(d.relative_warming_rate == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(d.warming_rate == doctest::Approx(0.2).epsilon(1e-12));
}

TEST_CASE("fastest cell reaches the cycle floor") {
    const auto d = derive_pattern(s1(-0.24, 0.5));
    CHECK(d.cooling_time == doctest::Approx(0.25));
    CHECK(d.cycle_time == doctest::Approx(0.5));
    CHECK(d.relative_warming_rate == doctest::Approx(0.24));
    CHECK(d.warming_rate == doctest::Approx(0.48));
    CHECK(validate_spec(s1(-0.24, 0.5)).empty());
}

TEST_CASE("off-centre ratio") {
    const auto d = derive_pattern(s1(-0.2, 0.3));
    // t_c = 0.06 / 0.2, t = t_c / 0.3, v_r = 0.06 / (t - t_c)
    const double tc = 0.06 / 0.2, t = tc / 0.3, vr = 0.06 / (t - tc);
    CHECK(d.cooling_time == doctest::Approx(tc));
    CHECK(d.cycle_time == doctest::Approx(t));
    CHECK(d.relative_warming_rate == doctest::Approx(vr));
    CHECK(d.warming_rate == doctest::Approx(vr + 0.2));
    CHECK(d.relative_warming_rate == doctest::Approx(0.085714).epsilon(1e-5));
}

TEST_CASE("derive_pattern rejects other kinds and bad values") {
    StimulusSpec s3{StimulusKind::S3, -0.16};
    CHECK_THROWS_AS(derive_pattern(s3), WrongKindError);
    CHECK_THROWS_AS(derive_pattern(s1(0.1, 0.5)), ValidationError);
    CHECK_THROWS_AS(derive_pattern(s1(-0.1, 1.0)), ValidationError);
    CHECK_THROWS_AS(derive_pattern(s1(-0.1, 0.5, 0.0)), ValidationError);
}

TEST_CASE("validate_spec messages") {
    CHECK(has_message(validate_spec(s1(-0.1, 0.5, -0.01)), "delta_T must be positive"));
    CHECK(has_message(validate_spec(s1(-0.1, 0.0)), "lambda_c in open interval"));
    CHECK(has_message(validate_spec(s1(0.1, 0.5)), "v_c must be negative"));

    StimulusSpec s2{StimulusKind::S2, -0.16, 0.5, 0.06, 15.0, 15.0};
    CHECK(has_errors(validate_spec(s2)));
    StimulusSpec zero{StimulusKind::S3, -0.16, 0.5, 0.06, 0.0, 5.0};
    CHECK(has_errors(validate_spec(zero)));

    const auto fast = validate_spec(s1(-0.3, 0.5));
    REQUIRE(fast.size() == 1);
    CHECK(fast[0].severity == SpecIssue::Severity::warning);
    CHECK_FALSE(has_errors(fast));
    CHECK_THROWS_AS(require_valid(s1(-0.1, 0.5, -0.01)), ValidationError);
}

TEST_CASE("S3 schedule") {
    const auto sched = compile_schedule({StimulusKind::S3, -0.16, 0.5, 0.06, 15.0, 5.0});
    REQUIRE(sched.segments.size() == 1);
    CHECK(sched.segments[0].target_rate == -0.16);
    CHECK(sched.segments[0].cold_active);
    CHECK_FALSE(sched.segments[0].warm_active);
    CHECK(sched.integrated_change() == doctest::Approx(-2.4));
}

TEST_CASE("S2 schedule") {
    const auto sched = compile_schedule({StimulusKind::S2, -0.16, 0.5, 0.06, 15.0, 5.0});
    REQUIRE(sched.segments.size() == 2);
    CHECK(sched.segments[0].end == 5.0);
    CHECK(sched.segments[0].target_rate == -0.16);
    CHECK_FALSE(sched.segments[0].warm_active);
    CHECK(sched.segments[1].target_rate == 0.0);
    CHECK(sched.segments[1].warm_active);
    CHECK(sched.integrated_change() == doctest::Approx(-0.8));
}

TEST_CASE("S1 schedule truncates at duration") {
    const auto sched = compile_schedule(s1(-0.1, 0.5));
    // 12 whole cycles of two segments plus a final cooling segment.
    REQUIRE(sched.segments.size() == 25);
    CHECK(sched.segments.front().target_rate == -0.1);
    CHECK(sched.segments.back().target_rate == -0.1);
    CHECK(sched.segments.back().end == 15.0);
    CHECK(sched.segments.back().length() == doctest::Approx(0.6));
    CHECK(sched.integrated_change() == doctest::Approx(-0.06));
    CHECK(sched.integrated_change(14.4) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(whole_cycle_horizon(s1(-0.1, 0.5)) == doctest::Approx(14.4));
}

TEST_CASE("schedule CSV") {
    std::ostringstream os;
    write_schedule_csv(os, compile_schedule({StimulusKind::S2, -0.16, 0.5, 0.06, 15.0, 5.0}));
    CHECK(os.str() == "start_s,end_s,rate_c_per_s,cold_active,warm_active\n"
                      "0,5,-0.16,1,0\n"
                      "5,15,0,1,1\n");
}

TEST_CASE("stimulus ids") {
    CHECK(stimulus_id(s1(-0.16, 0.5)) == "S1_vc-0.16_r0.5");
    CHECK(stimulus_id({StimulusKind::S2, -0.16}) == "S2_vc-0.16");
    CHECK(stimulus_id({StimulusKind::S3, -0.2}) == "S3_vc-0.2");
    CHECK(parse_stimulus_kind("S2") == StimulusKind::S2);
    CHECK_THROWS_AS(parse_stimulus_kind("S4"), ValidationError);
}

TEST_CASE("random specs: balance, round trip, partition, monotonicity") {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> rate(-0.5, -0.01), ratio(0.02, 0.98),
        swing(0.005, 0.2), duration(1.0, 30.0), frac(0.05, 0.95);
    std::uniform_int_distribution<int> kind(0, 2);

    int failures = 0;
    for (int i = 0; i < 10000; ++i) {
        StimulusSpec spec{static_cast<StimulusKind>(kind(rng)), rate(rng), ratio(rng), swing(rng),
                          duration(rng), 0.0};
        spec.s2_drop_duration = spec.duration * frac(rng);
        const auto sched = compile_schedule(spec);

        bool ok = sched.segments.front().start == 0.0 && sched.segments.back().end == spec.duration;
        for (std::size_t k = 1; k < sched.segments.size(); ++k)
            ok = ok && sched.segments[k].start == sched.segments[k - 1].end &&
                 sched.segments[k].length() > 0.0;
        for (const auto& seg : sched.segments)
            ok = ok && seg.cold_active && seg.warm_active == (seg.target_rate > spec.cooling_rate);

        if (spec.kind == StimulusKind::S1) {
            const auto d = derive_pattern(spec);
            ok = ok && std::abs(-spec.cooling_rate * d.cooling_time - spec.swing) <= 1e-15;
            ok = ok && std::abs(spec.cooling_rate * d.cooling_time +
                                d.relative_warming_rate * (d.cycle_time - d.cooling_time)) <= 1e-15;
            const double horizon = whole_cycle_horizon(spec);
            if (horizon > 0.0)
                ok = ok && std::abs(sched.integrated_change(horizon)) <= 1e-12;

            auto faster = spec;
            faster.cooling_rate *= 1.1;
            ok = ok && derive_pattern(faster).cycle_time < d.cycle_time;
            auto longer = spec;
            longer.cooling_ratio = std::min(0.99, spec.cooling_ratio + 0.01);
            ok = ok && derive_pattern(longer).warming_rate > d.warming_rate;
        }
        if (!ok) ++failures;
    }
    CHECK(failures == 0);
}
