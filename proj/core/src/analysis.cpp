#include "coldloop/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "coldloop/error.hpp"
#include "coldloop/format.hpp"

namespace coldloop {

namespace {

double median_of(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

GroupSummary summarize(std::string label, const std::vector<double>& values) {
    GroupSummary g;
    g.label = std::move(label);
    g.n = values.size();
    double sum = 0.0;
    for (double v : values) sum += v;
    g.mean = values.empty() ? 0.0 : sum / static_cast<double>(values.size());
    g.median = median_of(values);
    return g;
}

// One observation with its factor level and participant.
struct Observation {
    std::string level;
    int participant;
    double value;
};

// Groups observations by level, in the order levels are listed, optionally
// collapsing to one mean per participant.
std::vector<std::vector<double>> group_values(const std::vector<Observation>& obs,
                                              const std::vector<std::string>& levels,
                                              Pooling pooling) {
    std::vector<std::vector<double>> groups(levels.size());
    for (std::size_t i = 0; i < levels.size(); ++i) {
        if (pooling == Pooling::trial) {
            for (const auto& o : obs)
                if (o.level == levels[i]) groups[i].push_back(o.value);
        } else {
            std::map<int, std::pair<double, int>> per;
            for (const auto& o : obs) {
                if (o.level != levels[i]) continue;
                auto& acc = per[o.participant];
                acc.first += o.value;
                acc.second += 1;
            }
            for (const auto& [p, acc] : per) groups[i].push_back(acc.first / acc.second);
        }
    }
    return groups;
}

FactorTest factor_test(std::string factor, std::string subset,
                       const std::vector<Observation>& obs,
                       const std::vector<std::string>& levels, Pooling pooling) {
    const auto groups = group_values(obs, levels, pooling);
    FactorTest t;
    t.factor = std::move(factor);
    t.subset = std::move(subset);
    t.result = stats::kruskal_wallis(groups);
    for (std::size_t i = 0; i < levels.size(); ++i) t.groups.push_back(summarize(levels[i], groups[i]));
    return t;
}

PairwiseMatrix pairwise_raw(std::string scope, const std::vector<std::string>& labels,
                            const std::vector<std::vector<double>>& groups) {
    const std::size_t k = labels.size();
    PairwiseMatrix m;
    m.scope = std::move(scope);
    m.labels = labels;
    m.raw.assign(k, std::vector<double>(k, 1.0));
    m.adjusted.assign(k, std::vector<double>(k, 1.0));
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = i + 1; j < k; ++j) {
            const double p = stats::wilcoxon_rank_sum(groups[i], groups[j]).p_value;
            m.raw[i][j] = m.raw[j][i] = p;
        }
    return m;
}

std::vector<std::string> distinct_levels(const std::vector<double>& values) {
    std::set<double, std::greater<>> uniq(values.begin(), values.end());
    std::vector<std::string> out;
    for (double v : uniq) out.push_back(format_number(v));
    return out;
}

// Kind, then cooling rate from mild to strong, then ratio ascending.
bool presentation_less(const StimulusSpec& a, const StimulusSpec& b) {
    if (a.kind != b.kind) return a.kind < b.kind;
    if (a.cooling_rate != b.cooling_rate) return a.cooling_rate > b.cooling_rate;
    return a.cooling_ratio < b.cooling_ratio;
}

template <class GetSpec>
void sort_ids(std::vector<std::string>& ids, GetSpec spec_of) {
    std::stable_sort(ids.begin(), ids.end(), [&](const std::string& l, const std::string& r) {
        return presentation_less(spec_of(l), spec_of(r));
    });
}

}  // namespace

std::string_view to_string(Pooling pooling) {
    return pooling == Pooling::trial ? "trial" : "participant";
}

Pooling parse_pooling(std::string_view text) {
    if (text == "trial") return Pooling::trial;
    if (text == "participant") return Pooling::participant;
    throw ValidationError("unknown pooling mode '" + std::string(text) + "'");
}

double trial_confidence(const TrialRecord& record) {
    if (!record.slider) throw ValidationError("record " + record.stimulus_id + " has no slider trace");
    return mean_confidence(*record.slider, 0.0, record.spec.duration);
}

void adjust_pairwise(std::vector<PairwiseMatrix>& matrices) {
    std::vector<double> flat;
    for (const auto& m : matrices)
        for (std::size_t i = 0; i < m.labels.size(); ++i)
            for (std::size_t j = i + 1; j < m.labels.size(); ++j) flat.push_back(m.raw[i][j]);
    const auto adj = stats::benjamini_hochberg(flat);
    std::size_t pos = 0;
    for (auto& m : matrices)
        for (std::size_t i = 0; i < m.labels.size(); ++i)
            for (std::size_t j = i + 1; j < m.labels.size(); ++j) {
                m.adjusted[i][j] = m.adjusted[j][i] = adj[pos++];
            }
}

Exp2Report analyze_exp2(const std::vector<TrialRecord>& records, Pooling pooling, double fdr) {
    if (records.empty()) throw ValidationError("no exp2 records to analyze");
    for (const auto& r : records) {
        if (!r.slider || r.likert)
            throw ValidationError("exp2 record " + std::to_string(r.trial) + " of participant " +
                                  std::to_string(r.participant) + " must carry a slider trace only");
        if (r.slider->duration() < kPersistenceEnd - 1e-9)
            throw ValidationError("exp2 slider trace shorter than 15 s");
    }

    Exp2Report report;
    report.pooling = pooling;
    report.fdr = fdr;

    // Persistence per pattern, by trial and by the participant's mean trace.
    std::vector<std::string> ids;
    std::map<std::string, std::vector<const TrialRecord*>> by_id;
    for (const auto& r : records) {
        if (!by_id.count(r.stimulus_id)) ids.push_back(r.stimulus_id);
        by_id[r.stimulus_id].push_back(&r);
    }
    sort_ids(ids, [&](const std::string& id) { return by_id[id].front()->spec; });
    for (const auto& id : ids) {
        const auto& recs = by_id[id];
        PatternPersistence pp;
        pp.stimulus_id = id;
        pp.spec = recs.front()->spec;
        std::map<int, std::vector<const TrialRecord*>> per_participant;
        for (const auto* r : recs) {
            ++pp.trials;
            if (persistence(*r->slider)) ++pp.persistent_trials;
            per_participant[r->participant].push_back(r);
        }
        for (const auto& [p, trials] : per_participant) {
            SliderTrace mean = *trials.front()->slider;
            std::size_t n = mean.samples.size();
            for (const auto* r : trials) n = std::min(n, r->slider->samples.size());
            mean.samples.assign(n, 0.0);
            for (const auto* r : trials)
                for (std::size_t k = 0; k < n; ++k)
                    mean.samples[k] += r->slider->samples[k] / static_cast<double>(trials.size());
            for (auto& s : mean.samples) s = std::clamp(s, 0.0, 1.0);
            ++pp.participants;
            if (persistence(mean)) ++pp.persistent_participants;
        }
        report.persistence.push_back(pp);
    }

    std::vector<Observation> s1_by_ratio, s1_by_rate;
    std::map<StimulusKind, std::vector<Observation>> by_kind_rate;
    std::vector<double> s1_ratios, rates;
    for (const auto& r : records) {
        const double conf = trial_confidence(r);
        const std::string rate = format_number(r.spec.cooling_rate);
        rates.push_back(r.spec.cooling_rate);
        by_kind_rate[r.spec.kind].push_back({rate, r.participant, conf});
        if (r.spec.kind == StimulusKind::S1) {
            s1_ratios.push_back(r.spec.cooling_ratio);
            s1_by_ratio.push_back({format_number(r.spec.cooling_ratio), r.participant, conf});
            s1_by_rate.push_back({rate, r.participant, conf});
        }
    }
    const auto rate_levels = distinct_levels(rates);
    auto ratio_levels = distinct_levels(s1_ratios);
    std::reverse(ratio_levels.begin(), ratio_levels.end());

    auto levels_present = [](const std::vector<Observation>& obs,
                             const std::vector<std::string>& levels) {
        std::vector<std::string> out;
        for (const auto& l : levels)
            if (std::any_of(obs.begin(), obs.end(), [&](const auto& o) { return o.level == l; }))
                out.push_back(l);
        return out;
    };

    if (ratio_levels.size() >= 2)
        report.tests.push_back(factor_test("cooling_ratio", "S1", s1_by_ratio, ratio_levels, pooling));
    if (auto lv = levels_present(s1_by_rate, rate_levels); lv.size() >= 2)
        report.tests.push_back(factor_test("cooling_rate", "S1", s1_by_rate, lv, pooling));
    for (StimulusKind kind : {StimulusKind::S2, StimulusKind::S3}) {
        const auto& obs = by_kind_rate[kind];
        if (auto lv = levels_present(obs, rate_levels); lv.size() >= 2)
            report.tests.push_back(
                factor_test("cooling_rate", std::string(to_string(kind)), obs, lv, pooling));
    }

    // S1 (all ratios pooled) vs S2 vs S3 at each cooling rate.
    for (const auto& rate : rate_levels) {
        std::vector<std::string> labels;
        std::vector<std::vector<double>> groups;
        for (StimulusKind kind : {StimulusKind::S1, StimulusKind::S2, StimulusKind::S3}) {
            const auto g = group_values(by_kind_rate[kind], {rate}, pooling).front();
            if (g.empty()) continue;
            labels.emplace_back(to_string(kind));
            groups.push_back(g);
        }
        if (labels.size() >= 2)
            report.pairwise.push_back(pairwise_raw("vc=" + rate, labels, groups));
    }
    adjust_pairwise(report.pairwise);
    return report;
}

Exp3Report analyze_exp3(const std::vector<TrialRecord>& records, Pooling pooling, double fdr) {
    if (records.empty()) throw ValidationError("no exp3 records to analyze");
    std::vector<Observation> obs;
    std::vector<std::string> labels;
    std::map<std::string, StimulusSpec> specs;
    for (const auto& r : records) {
        specs.emplace(r.stimulus_id, r.spec);
        if (!r.likert || r.slider)
            throw ValidationError("exp3 record " + std::to_string(r.trial) + " of participant " +
                                  std::to_string(r.participant) + " must carry a Likert rating only");
        if (*r.likert < 1 || *r.likert > 7) throw ValidationError("Likert rating outside 1..7");
        if (std::find(labels.begin(), labels.end(), r.stimulus_id) == labels.end())
            labels.push_back(r.stimulus_id);
        obs.push_back({r.stimulus_id, r.participant, static_cast<double>(*r.likert)});
    }
    if (labels.size() < 2) throw ValidationError("exp3 analysis needs at least two stimuli");
    sort_ids(labels, [&](const std::string& id) { return specs.at(id); });

    Exp3Report report;
    report.pooling = pooling;
    report.fdr = fdr;
    const auto groups = group_values(obs, labels, pooling);
    report.kruskal = stats::kruskal_wallis(groups);
    for (std::size_t i = 0; i < labels.size(); ++i) report.groups.push_back(summarize(labels[i], groups[i]));

    std::vector<PairwiseMatrix> m{pairwise_raw("exp3", labels, groups)};
    adjust_pairwise(m);
    report.pairwise = std::move(m.front());
    return report;
}

}  // namespace coldloop
