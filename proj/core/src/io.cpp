#include "coldloop/io.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <system_error>

#include "coldloop/error.hpp"
#include "coldloop/format.hpp"
#include "json.hpp"

namespace coldloop {

std::string format_number(double value) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, res.ptr);
}

}  // namespace coldloop

namespace coldloop::io {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

json parse_json(std::string_view text) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw ValidationError(std::string("malformed JSON: ") + e.what());
    }
}

// Reads keys from one JSON object and rejects any it was not asked about.
class Section {
public:
    Section(const json& obj, std::string name) : obj_(obj), name_(std::move(name)) {
        if (!obj_.is_object()) throw ValidationError("config section '" + name_ + "' must be an object");
    }

    template <class T>
    void get(const char* key, T& out) {
        seen_.insert(key);
        auto it = obj_.find(key);
        if (it == obj_.end()) return;
        try {
            out = it->template get<T>();
        } catch (const json::exception&) {
            throw ValidationError("config key '" + name_ + "." + key + "' has the wrong type");
        }
    }

    void finish() const {
        for (auto it = obj_.begin(); it != obj_.end(); ++it)
            if (!seen_.count(it.key()))
                throw ValidationError("unknown config key '" + name_ + "." + it.key() + "'");
    }

private:
    const json& obj_;
    std::string name_;
    std::set<std::string> seen_;
};

void read_plant(Section& s, PlantParams& p, DisplayConstants* d) {
    s.get("a_v_true", p.valve_gain);
    s.get("b_v_true", p.valve_offset);
    s.get("a_l_true", p.led_gain);
    s.get("b_l_true", p.led_offset);
    s.get("relax_coeff", p.relax_coeff);
    s.get("T_neutral", p.neutral_temp);
    s.get("T_init", p.initial_temp);
    s.get("noise_sigma", p.noise_sigma);
    s.get("coupled_warm_bias", p.coupled_warm_bias);
    DisplayConstants scratch;
    DisplayConstants& c = d ? *d : scratch;
    s.get("air_pressure_mpa", c.air_pressure_mpa);
    s.get("cold_air_ratio", c.cold_air_ratio);
    s.get("cold_air_temp_c", c.cold_air_temp_c);
    s.get("ambient_c", c.ambient_temp_c);
    s.get("lens_fwhm_deg", c.lens_fwhm_deg);
}

StimulusSpec spec_from_json(const json& j) {
    StimulusSpec spec;
    Section s(j, "verification[]");
    std::string kind = "S1";
    s.get("kind", kind);
    spec.kind = parse_stimulus_kind(kind);
    s.get("vc", spec.cooling_rate);
    s.get("ratio", spec.cooling_ratio);
    s.get("delta_t", spec.swing);
    s.get("duration", spec.duration);
    s.get("s2_drop_duration", spec.s2_drop_duration);
    s.finish();
    return spec;
}

json spec_to_json(const StimulusSpec& spec) {
    json j;
    j["id"] = stimulus_id(spec);
    j["kind"] = std::string(to_string(spec.kind));
    j["vc"] = spec.cooling_rate;
    if (spec.kind == StimulusKind::S1) {
        j["ratio"] = spec.cooling_ratio;
        j["delta_t"] = spec.swing;
    }
    if (spec.kind == StimulusKind::S2) j["s2_drop_duration"] = spec.s2_drop_duration;
    j["duration"] = spec.duration;
    return j;
}

void read_protocol(Section& s, CalibrationProtocol& p) {
    s.get("valve_grid", p.valve_grid);
    s.get("led_grid", p.led_grid);
    s.get("endpoint_repeats", p.endpoint_repeats);
    s.get("interior_repeats", p.interior_repeats);
    s.get("delta_t_s", p.interval);
    s.get("valve_duty_min", p.valve_range.min);
    s.get("valve_duty_max", p.valve_range.max);
    s.get("led_duty_min", p.led_range.min);
    s.get("led_duty_max", p.led_range.max);
    s.get("sensor_resolution", p.sensor_resolution);
    s.get("rate_noise_sigma", p.rate_noise_sigma);
    s.get("dead_time_s", p.dead_time);
    s.get("tolerance_c", p.tolerance);
    s.get("max_iters", p.max_iters);
    s.get("symmetric_correction", p.symmetric_correction);
    json verification = json::array();
    s.get("verification", verification);
    for (const auto& v : verification) p.verification.push_back(spec_from_json(v));
}

void read_participant(Section& s, ParticipantModel& m) {
    s.get("detect_threshold", m.detect_threshold);
    s.get("time_constant", m.time_constant);
    s.get("attack_time", m.attack_time);
    s.get("slider_lag", m.slider_lag);
    s.get("response_noise", m.response_noise);
    s.get("gain", m.gain);
    s.get("peak_reference", m.peak_reference);
}

json model_to_json(const DutyModel& m) {
    json j;
    j["channel"] = std::string(to_string(m.channel));
    j["a"] = m.gain;
    j["b"] = m.offset;
    j["duty_min"] = m.duty_min;
    j["duty_max"] = m.duty_max;
    j["r_squared"] = m.r_squared;
    return j;
}

DutyModel model_from_json(const json& j) {
    DutyModel m;
    Section s(j, "models[]");
    std::string channel;
    s.get("channel", channel);
    m.channel = parse_channel(channel);
    s.get("a", m.gain);
    s.get("b", m.offset);
    s.get("duty_min", m.duty_min);
    s.get("duty_max", m.duty_max);
    s.get("r_squared", m.r_squared);
    json calibration;
    s.get("calibration", calibration);
    s.finish();
    if (!(m.duty_min >= 0.0 && m.duty_max <= 1.0 && m.duty_min < m.duty_max))
        throw ValidationError("model duty range must satisfy 0 <= min < max <= 1");
    return m;
}

json test_to_json(const stats::TestResult& r) {
    json j;
    j["method"] = std::string(stats::to_string(r.method));
    j["statistic"] = r.statistic;
    j["df"] = r.df;
    j["p_value"] = r.p_value;
    return j;
}

json groups_to_json(const std::vector<GroupSummary>& groups) {
    json arr = json::array();
    for (const auto& g : groups)
        arr.push_back({{"label", g.label}, {"n", g.n}, {"mean", g.mean}, {"median", g.median}});
    return arr;
}

json matrix_to_json(const PairwiseMatrix& m, double fdr) {
    json j;
    j["scope"] = m.scope;
    j["labels"] = m.labels;
    j["raw_p"] = m.raw;
    j["bh_adjusted_p"] = m.adjusted;
    json sig = json::array();
    for (std::size_t i = 0; i < m.labels.size(); ++i)
        for (std::size_t k = i + 1; k < m.labels.size(); ++k)
            if (m.adjusted[i][k] < fdr) sig.push_back({m.labels[i], m.labels[k]});
    j["significant_pairs"] = sig;
    return j;
}

std::vector<std::string> split(std::string_view line, char sep = ',') {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(sep, start);
        out.emplace_back(line.substr(start, pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

std::vector<std::string> lines_of(std::string_view text) {
    std::vector<std::string> out;
    for (auto& l : split(text, '\n')) {
        if (!l.empty() && l.back() == '\r') l.pop_back();
        if (!l.empty()) out.push_back(std::move(l));
    }
    return out;
}

double to_double(const std::string& s, std::string_view what) {
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw ValidationError("malformed number '" + s + "' in " + std::string(what));
    return v;
}

template <class Int>
Int to_int(const std::string& s, std::string_view what) {
    Int v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw ValidationError("malformed integer '" + s + "' in " + std::string(what));
    return v;
}

std::string two_digits(int v) {
    std::string s = std::to_string(v);
    return s.size() < 2 ? "0" + s : s;
}

std::string three_digits(int v) {
    std::string s = std::to_string(v);
    while (s.size() < 3) s = "0" + s;
    return s;
}

}  // namespace

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file_atomic(const fs::path& path, std::string_view content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write '" + tmp.string() + "'");
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw std::runtime_error("write failed for '" + tmp.string() + "'");
    }
    fs::rename(tmp, path);
}

RunSettings RunConfig::settings() const {
    RunSettings s;
    s.base_plant = plant;
    s.plant_jitter = plant_jitter;
    s.led_gain_nominal = led_gain_nominal;
    s.protocol = protocol;
    s.participant = participant;
    s.dt = dt;
    s.log_rate = log_rate;
    s.threads = threads;
    return s;
}

RunConfig parse_run_config(std::string_view json_text) {
    const json doc = parse_json(json_text);
    RunConfig cfg;
    Section root(doc, "config");
    json plant = json::object(), protocol = json::object(), participant = json::object(),
         experiment = json::object();
    root.get("plant", plant);
    root.get("protocol", protocol);
    root.get("participant", participant);
    root.get("experiment", experiment);
    root.finish();

    Section ps(plant, "plant");
    read_plant(ps, cfg.plant, &cfg.display);
    ps.finish();
    cfg.plant.validate();

    Section pr(protocol, "protocol");
    read_protocol(pr, cfg.protocol);
    pr.finish();

    Section pa(participant, "participant");
    read_participant(pa, cfg.participant);
    pa.finish();
    cfg.participant.validate();

    Section ex(experiment, "experiment");
    ex.get("cooling_rates", cfg.exp2.cooling_rates);
    ex.get("cooling_ratios", cfg.exp2.cooling_ratios);
    ex.get("repetitions", cfg.exp2.repetitions);
    ex.get("s2_drop_duration", cfg.exp2.s2_drop_duration);
    ex.get("delta_t", cfg.exp2.swing);
    ex.get("duration", cfg.exp2.duration);
    ex.get("exp3_baseline_rate", cfg.exp3.baseline_rate);
    ex.get("exp3_comparison_rates", cfg.exp3.comparison_rates);
    ex.get("exp3_ratio", cfg.exp3.cooling_ratio);
    ex.get("plant_jitter", cfg.plant_jitter);
    ex.get("led_gain_nominal", cfg.led_gain_nominal);
    ex.get("dt", cfg.dt);
    ex.get("log_rate", cfg.log_rate);
    ex.get("threads", cfg.threads);
    ex.finish();
    cfg.exp3.repetitions = cfg.exp2.repetitions;
    cfg.exp3.s2_drop_duration = cfg.exp2.s2_drop_duration;
    cfg.exp3.swing = cfg.exp2.swing;
    cfg.exp3.duration = cfg.exp2.duration;
    return cfg;
}

void apply_plant_config(std::string_view json_text, PlantParams& params,
                        DisplayConstants* display) {
    const json doc = parse_json(json_text);
    Section s(doc, "plant");
    read_plant(s, params, display);
    s.finish();
    params.validate();
}

std::string plant_config_json(const PlantParams& p, const DisplayConstants& d) {
    json j;
    j["a_v_true"] = p.valve_gain;
    j["b_v_true"] = p.valve_offset;
    j["a_l_true"] = p.led_gain;
    j["b_l_true"] = p.led_offset;
    j["relax_coeff"] = p.relax_coeff;
    j["T_neutral"] = p.neutral_temp;
    j["T_init"] = p.initial_temp;
    j["noise_sigma"] = p.noise_sigma;
    j["coupled_warm_bias"] = p.coupled_warm_bias;
    j["air_pressure_mpa"] = d.air_pressure_mpa;
    j["cold_air_ratio"] = d.cold_air_ratio;
    j["cold_air_temp_c"] = d.cold_air_temp_c;
    j["ambient_c"] = d.ambient_temp_c;
    j["lens_fwhm_deg"] = d.lens_fwhm_deg;
    return j.dump(2) + "\n";
}

std::string models_json(const CalibrationResult& result, const CalibrationProtocol& protocol) {
    json models = json::array();
    for (Channel c : {Channel::valve, Channel::led}) {
        const auto& m = c == Channel::valve ? result.valve : result.led;
        const auto& grid = c == Channel::valve ? protocol.valve_grid : protocol.led_grid;
        json j = model_to_json(m);
        j["calibration"] = {
            {"grid", expand_grid(grid, protocol.endpoint_repeats, protocol.interior_repeats)},
            {"delta_t_s", protocol.interval},
            {"iterations", result.iterations}};
        models.push_back(j);
    }
    json rounds = json::array();
    for (const auto& r : result.rounds) {
        json results = json::array();
        for (const auto& v : r.results)
            results.push_back({{"stimulus_id", stimulus_id(v.spec)},
                               {"scheduled_change_c", v.scheduled_change},
                               {"measured_change_c", v.measured_change},
                               {"passed", v.passed}});
        rounds.push_back({{"iteration", r.iteration},
                          {"mean_drift_c", r.mean_drift},
                          {"worst_abs_change_c", r.worst_change()},
                          {"passed", r.passed},
                          {"results", results}});
    }
    json doc;
    doc["models"] = models;
    doc["verification"] = rounds;
    return doc.dump(2) + "\n";
}

std::string models_json(const ModelSet& set) {
    json doc;
    doc["models"] = json::array({model_to_json(set.valve), model_to_json(set.led)});
    return doc.dump(2) + "\n";
}

ModelSet parse_models_json(std::string_view json_text) {
    const json doc = parse_json(json_text);
    if (!doc.is_object() || !doc.contains("models") || !doc["models"].is_array())
        throw ValidationError("model file needs a 'models' array");
    ModelSet set;
    bool valve = false, led = false;
    for (const auto& j : doc["models"]) {
        const auto m = model_from_json(j);
        if (m.channel == Channel::valve) {
            set.valve = m;
            valve = true;
        } else {
            set.led = m;
            led = true;
        }
    }
    if (!valve || !led) throw ValidationError("model file needs both a valve and an led model");
    return set;
}

std::string records_csv(const std::vector<TrialRecord>& records) {
    std::ostringstream os;
    os << "trial,stimulus_id,kind,vc,lambda,seed,likert\n";
    for (const auto& r : records) {
        os << r.trial << ',' << r.stimulus_id << ',' << to_string(r.spec.kind) << ','
           << format_number(r.spec.cooling_rate) << ',';
        if (r.spec.kind == StimulusKind::S1) os << format_number(r.spec.cooling_ratio);
        os << ',' << r.seed << ',';
        if (r.likert) os << *r.likert;
        os << '\n';
    }
    return os.str();
}

std::string trial_trace_csv(const TrialRecord& r) {
    std::ostringstream os;
    os << (r.slider ? "time_s,temp_c,slider\n" : "time_s,temp_c\n");
    for (std::size_t k = 0; k < r.temperatures.size(); ++k) {
        os << format_number(static_cast<double>(k) / r.log_rate) << ','
           << format_number(r.temperatures[k]);
        if (r.slider) os << ',' << format_number(r.slider->samples.at(k));
        os << '\n';
    }
    return os.str();
}

std::string participant_records_name(int participant) {
    return "participant_" + two_digits(participant + 1) + ".csv";
}

std::string trial_trace_name(int participant, int trial) {
    return "traces/p" + two_digits(participant + 1) + "_t" + three_digits(trial + 1) + ".csv";
}

std::vector<fs::path> write_experiment(const fs::path& dir, const ExperimentPlan& plan,
                                       const std::vector<ParticipantSetup>& setups,
                                       const std::vector<TrialRecord>& records) {
    std::vector<std::pair<fs::path, std::string>> files;

    std::map<int, std::vector<TrialRecord>> by_participant;
    for (const auto& r : records) by_participant[r.participant].push_back(r);
    for (const auto& [p, recs] : by_participant) {
        files.emplace_back(dir / participant_records_name(p), records_csv(recs));
        for (const auto& r : recs)
            files.emplace_back(dir / trial_trace_name(p, r.trial), trial_trace_csv(r));
    }

    json manifest;
    manifest["experiment"] = std::string(to_string(plan.kind));
    manifest["participants"] = plan.participants;
    manifest["repetitions"] = plan.repetitions;
    manifest["trials_per_participant"] = plan.trials_per_participant();
    manifest["trial_records"] = records.size();
    manifest["seed"] = plan.seed;
    json stimuli = json::array();
    for (const auto& s : plan.stimuli) stimuli.push_back(spec_to_json(s.spec));
    manifest["stimuli"] = stimuli;
    json cal = json::array();
    for (const auto& s : setups)
        cal.push_back({{"participant", s.index + 1},
                       {"iterations", s.calibration_iterations},
                       {"valve", model_to_json(s.valve)},
                       {"led", model_to_json(s.led)}});
    manifest["calibration"] = cal;
    files.emplace_back(dir / "manifest.json", manifest.dump(2) + "\n");

    std::vector<fs::path> written;
    for (const auto& [path, content] : files) {
        write_file_atomic(path, content);
        written.push_back(path);
    }
    return written;
}

std::vector<TrialRecord> load_experiment(const fs::path& dir, ExperimentKind* kind_out) {
    const json manifest = parse_json(read_file(dir / "manifest.json"));
    const std::string exp = manifest.value("experiment", "");
    ExperimentKind kind;
    if (exp == "exp2")
        kind = ExperimentKind::exp2;
    else if (exp == "exp3")
        kind = ExperimentKind::exp3;
    else
        throw ValidationError("manifest names unsupported experiment '" + exp + "'");
    if (kind_out) *kind_out = kind;

    std::map<std::string, StimulusSpec> specs;
    for (const auto& s : manifest.at("stimuli")) {
        json copy = s;
        copy.erase("id");
        const auto spec = spec_from_json(copy);
        specs[stimulus_id(spec)] = spec;
    }

    const int participants = manifest.at("participants").get<int>();
    std::vector<TrialRecord> records;
    for (int p = 0; p < participants; ++p) {
        const auto path = dir / participant_records_name(p);
        const auto lines = lines_of(read_file(path));
        if (lines.empty() || lines.front() != "trial,stimulus_id,kind,vc,lambda,seed,likert")
            throw ValidationError("bad record header in '" + path.string() + "'");
        for (std::size_t i = 1; i < lines.size(); ++i) {
            const auto f = split(lines[i]);
            if (f.size() != 7) throw ValidationError("bad record row in '" + path.string() + "'");
            TrialRecord r;
            r.participant = p;
            r.trial = to_int<int>(f[0], "trial");
            r.stimulus_id = f[1];
            auto it = specs.find(r.stimulus_id);
            if (it == specs.end())
                throw ValidationError("record names unknown stimulus '" + r.stimulus_id + "'");
            r.spec = it->second;
            if (parse_stimulus_kind(f[2]) != r.spec.kind ||
                to_double(f[3], "vc") != r.spec.cooling_rate)
                throw ValidationError("record for '" + r.stimulus_id + "' disagrees with manifest");
            r.seed = to_int<std::uint64_t>(f[5], "seed");
            if (!f[6].empty()) r.likert = to_int<int>(f[6], "likert");

            const auto trace_path = dir / trial_trace_name(p, r.trial);
            const auto tl = lines_of(read_file(trace_path));
            if (tl.empty()) throw ValidationError("empty trace '" + trace_path.string() + "'");
            const bool has_slider = tl.front() == "time_s,temp_c,slider";
            if (!has_slider && tl.front() != "time_s,temp_c")
                throw ValidationError("bad trace header in '" + trace_path.string() + "'");
            SliderTrace slider;
            std::vector<double> times;
            for (std::size_t k = 1; k < tl.size(); ++k) {
                const auto c = split(tl[k]);
                if (c.size() != (has_slider ? 3u : 2u))
                    throw ValidationError("bad trace row in '" + trace_path.string() + "'");
                times.push_back(to_double(c[0], "time_s"));
                r.temperatures.push_back(to_double(c[1], "temp_c"));
                if (has_slider) slider.samples.push_back(to_double(c[2], "slider"));
            }
            if (times.size() >= 2) r.log_rate = 1.0 / (times[1] - times[0]);
            r.log_rate = std::round(r.log_rate * 1e6) / 1e6;
            slider.sample_rate = r.log_rate;
            if (has_slider) r.slider = std::move(slider);
            records.push_back(std::move(r));
        }
    }
    return records;
}

std::string report_json(const Exp2Report& report) {
    json doc;
    doc["experiment"] = "exp2";
    doc["pooling"] = std::string(to_string(report.pooling));
    doc["fdr"] = report.fdr;
    json persistence = json::array();
    for (const auto& p : report.persistence) {
        json j;
        j["stimulus_id"] = p.stimulus_id;
        j["kind"] = std::string(to_string(p.spec.kind));
        j["vc"] = p.spec.cooling_rate;
        if (p.spec.kind == StimulusKind::S1) j["ratio"] = p.spec.cooling_ratio;
        j["participants"] = p.participants;
        j["persistent_participants"] = p.persistent_participants;
        j["persistent_participant_percent"] = p.participant_percent();
        j["trials"] = p.trials;
        j["persistent_trials"] = p.persistent_trials;
        persistence.push_back(j);
    }
    doc["persistence"] = persistence;
    json tests = json::array();
    for (const auto& t : report.tests) {
        json j = test_to_json(t.result);
        j["factor"] = t.factor;
        j["subset"] = t.subset;
        j["groups"] = groups_to_json(t.groups);
        tests.push_back(j);
    }
    doc["kruskal_wallis"] = tests;
    json pairwise = json::array();
    for (const auto& m : report.pairwise) pairwise.push_back(matrix_to_json(m, report.fdr));
    doc["pairwise"] = pairwise;
    return doc.dump(2) + "\n";
}

std::string report_json(const Exp3Report& report) {
    json doc;
    doc["experiment"] = "exp3";
    doc["pooling"] = std::string(to_string(report.pooling));
    doc["fdr"] = report.fdr;
    doc["groups"] = groups_to_json(report.groups);
    doc["kruskal_wallis"] = test_to_json(report.kruskal);
    doc["pairwise"] = matrix_to_json(report.pairwise, report.fdr);
    return doc.dump(2) + "\n";
}

}  // namespace coldloop::io
