#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "coldloop/experiment.hpp"
#include "coldloop/stats.hpp"

namespace coldloop {

/// How observations enter the rank tests: one value per trial, or one mean
/// per participant and factor level.
enum class Pooling { trial, participant };
std::string_view to_string(Pooling pooling);
Pooling parse_pooling(std::string_view text);

inline constexpr double kDefaultFdr = 0.05;

struct GroupSummary {
    std::string label;
    std::size_t n = 0;
    double mean = 0.0;
    double median = 0.0;
};

struct FactorTest {
    std::string factor;  // "cooling_ratio" or "cooling_rate"
    std::string subset;  // stimulus kind the test ran on
    stats::TestResult result;
    std::vector<GroupSummary> groups;
};

/// Symmetric matrix of pairwise Wilcoxon p-values; the diagonal is 1.
struct PairwiseMatrix {
    std::string scope;
    std::vector<std::string> labels;
    std::vector<std::vector<double>> raw;
    std::vector<std::vector<double>> adjusted;
};

struct PatternPersistence {
    std::string stimulus_id;
    StimulusSpec spec;
    int participants = 0;
    int persistent_participants = 0;  // judged on the participant's mean trace
    int trials = 0;
    int persistent_trials = 0;

    double participant_percent() const {
        return participants ? 100.0 * persistent_participants / participants : 0.0;
    }
    double trial_fraction() const {
        return trials ? static_cast<double>(persistent_trials) / trials : 0.0;
    }
};

struct Exp2Report {
    Pooling pooling = Pooling::trial;
    double fdr = kDefaultFdr;
    std::vector<PatternPersistence> persistence;  // plan order of first appearance
    std::vector<FactorTest> tests;
    std::vector<PairwiseMatrix> pairwise;  // one per cooling rate: S1 / S2 / S3
};

struct Exp3Report {
    Pooling pooling = Pooling::trial;
    double fdr = kDefaultFdr;
    std::vector<GroupSummary> groups;
    stats::TestResult kruskal;
    PairwiseMatrix pairwise;
};

/// Per-trial mean confidence over [0, 15) s, in percent.
double trial_confidence(const TrialRecord& record);

Exp2Report analyze_exp2(const std::vector<TrialRecord>& records, Pooling pooling = Pooling::trial,
                        double fdr = kDefaultFdr);
Exp3Report analyze_exp3(const std::vector<TrialRecord>& records, Pooling pooling = Pooling::trial,
                        double fdr = kDefaultFdr);

/// BH-adjusts the upper triangles of `matrices` jointly and fills `adjusted`.
void adjust_pairwise(std::vector<PairwiseMatrix>& matrices);

}  // namespace coldloop
