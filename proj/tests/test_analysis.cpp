#include <doctest.h>

#include <cmath>
#include <map>

#include "coldloop/analysis.hpp"
#include "coldloop/error.hpp"

using namespace coldloop;

namespace {

// Records with hand-made slider traces; no plant involved.
std::vector<TrialRecord> synthetic_exp2(int participants, double (*level)(const Stimulus&, int, int)) {
    const auto plan = build_exp2_plan();
    std::vector<TrialRecord> out;
    for (int p = 0; p < participants; ++p) {
        const auto order = plan.presentation_order(p);
        for (std::size_t t = 0; t < order.size(); ++t) {
            const auto& s = plan.stimuli[order[t]];
            TrialRecord r;
            r.participant = p;
            r.trial = static_cast<int>(t);
            r.stimulus_id = s.id;
            r.spec = s.spec;
            SliderTrace trace;
            trace.samples.assign(1500, level(s, p, static_cast<int>(t)));
            r.slider = trace;
            out.push_back(std::move(r));
        }
    }
    return out;
}

double constant_level(const Stimulus&, int, int) { return 0.6; }

double varied_level(const Stimulus& s, int p, int t) {
    const double base = 0.5 - s.spec.cooling_rate * 1.5 + 0.03 * ((p * 7 + t) % 5);
    return std::min(1.0, base - (s.spec.kind == StimulusKind::S2 ? 0.3 : 0.0));
}

}  // namespace

TEST_CASE("identical traces give H = 0") {
    const auto report = analyze_exp2(synthetic_exp2(3, constant_level));
    REQUIRE(report.tests.size() == 4);
    for (const auto& t : report.tests) {
        CHECK(t.result.statistic == 0.0);
        CHECK(t.result.p_value == 1.0);
        CHECK(t.result.df == 4);
    }
    CHECK(report.pairwise.size() == 5);
}

TEST_CASE("factor tests and pairwise matrices") {
    const auto records = synthetic_exp2(4, varied_level);
    for (auto pooling : {Pooling::trial, Pooling::participant}) {
        const auto report = analyze_exp2(records, pooling);
        std::map<std::string, int> seen;
        for (const auto& t : report.tests) {
            CHECK(t.result.df == 4);
            CHECK(t.groups.size() == 5);
            ++seen[t.factor + "/" + t.subset];
        }
        CHECK(seen["cooling_ratio/S1"] == 1);
        CHECK(seen["cooling_rate/S1"] == 1);
        CHECK(seen["cooling_rate/S2"] == 1);
        CHECK(seen["cooling_rate/S3"] == 1);

        for (const auto& m : report.pairwise) {
            REQUIRE(m.labels.size() == 3);
            for (std::size_t i = 0; i < 3; ++i) {
                CHECK(m.raw[i][i] == 1.0);
                CHECK(m.adjusted[i][i] == 1.0);
                for (std::size_t j = 0; j < 3; ++j) {
                    CHECK(m.raw[i][j] == m.raw[j][i]);
                    CHECK(m.adjusted[i][j] == m.adjusted[j][i]);
                    CHECK(m.adjusted[i][j] >= m.raw[i][j]);
                    CHECK(m.adjusted[i][j] <= 1.0);
                }
            }
        }
    }
    const auto trial = analyze_exp2(records, Pooling::trial);
    CHECK(trial.tests[0].groups[0].n == 4 * 5 * 3);
    const auto participant = analyze_exp2(records, Pooling::participant);
    CHECK(participant.tests[0].groups[0].n == 4);
}

TEST_CASE("persistence equals a recount") {
    auto records = synthetic_exp2(3, varied_level);
    // Knock some trials below neutral inside the window.
    for (std::size_t i = 0; i < records.size(); i += 7) records[i].slider->samples[800] = 0.45;

    const auto report = analyze_exp2(records);
    CHECK(report.persistence.size() == 35);
    for (const auto& cell : report.persistence) {
        int trials = 0, persistent = 0;
        std::map<int, std::vector<double>> sums;
        std::map<int, int> counts;
        for (const auto& r : records) {
            if (r.stimulus_id != cell.stimulus_id) continue;
            ++trials;
            bool ok = true;
            for (std::size_t k = 500; k <= 1499; ++k) ok = ok && r.slider->samples[k] * 100.0 > 50.0;
            persistent += ok;
            auto& s = sums[r.participant];
            s.resize(1500, 0.0);
            for (std::size_t k = 0; k < 1500; ++k) s[k] += r.slider->samples[k];
            ++counts[r.participant];
        }
        int persistent_people = 0;
        for (const auto& [p, s] : sums) {
            bool ok = true;
            for (std::size_t k = 500; k <= 1499; ++k) ok = ok && s[k] / counts[p] * 100.0 > 50.0;
            persistent_people += ok;
        }
        CHECK(cell.trials == trials);
        CHECK(cell.persistent_trials == persistent);
        CHECK(cell.participants == 3);
        CHECK(cell.persistent_participants == persistent_people);
        CHECK(cell.participant_percent() >= 0.0);
        CHECK(cell.participant_percent() <= 100.0);
    }
}

TEST_CASE("exp3 analysis") {
    const auto plan = build_exp3_plan();
    std::vector<TrialRecord> records;
    for (int p = 0; p < 4; ++p)
        for (std::size_t t = 0; t < 15; ++t) {
            TrialRecord r;
            r.participant = p;
            r.trial = static_cast<int>(t);
            const auto& s = plan.stimuli[plan.presentation_order(p)[t]];
            r.stimulus_id = s.id;
            r.spec = s.spec;
            r.likert = 4;
            records.push_back(r);
        }
    const auto flat = analyze_exp3(records);
    CHECK(flat.kruskal.df == 4);
    CHECK(flat.kruskal.p_value == 1.0);
    CHECK(flat.groups.size() == 5);
    for (const auto& row : flat.pairwise.adjusted)
        for (double q : row) CHECK(q == 1.0);

    for (auto& r : records) r.likert = 1 + static_cast<int>(-r.spec.cooling_rate * 25) % 6 + (r.trial % 2);
    const auto varied = analyze_exp3(records);
    for (std::size_t i = 0; i < 5; ++i)
        for (std::size_t j = 0; j < 5; ++j) {
            CHECK(varied.pairwise.adjusted[i][j] == varied.pairwise.adjusted[j][i]);
            CHECK(varied.pairwise.adjusted[i][j] >= varied.pairwise.raw[i][j]);
        }
}

TEST_CASE("malformed records are rejected") {
    auto records = synthetic_exp2(1, constant_level);
    records[3].slider.reset();
    CHECK_THROWS_AS(analyze_exp2(records), ValidationError);
    CHECK_THROWS_AS(analyze_exp3(synthetic_exp2(1, constant_level)), ValidationError);
    CHECK_THROWS_AS(analyze_exp2({}), ValidationError);
}
