#include "cli.hpp"

#include <chrono>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <vector>

#include "CLI11.hpp"
#include "coldloop/coldloop.hpp"
#include "json.hpp"

namespace coldloop::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

struct Globals {
    std::string config_path;
    std::uint64_t seed = 0;
    bool quiet = false;
};

struct StimulusFlags {
    std::string kind = "S1";
    double vc = -0.1;
    double ratio = 0.5;
    double delta_t = 0.06;
    double duration = 15.0;
    double drop = 5.0;

    void add_to(CLI::App* cmd) {
        cmd->add_option("--kind", kind, "Stimulus type: S1, S2 or S3")->capture_default_str();
        cmd->add_option("--vc", vc, "Cooling rate v_c in C/s (negative)")->capture_default_str();
        cmd->add_option("--ratio", ratio, "Cooling time ratio in (0, 1), S1 only")
            ->capture_default_str();
        cmd->add_option("--delta-t", delta_t, "Per-cycle swing in C, S1 only")->capture_default_str();
        cmd->add_option("--duration", duration, "Presentation length in s")->capture_default_str();
        cmd->add_option("--drop", drop, "Initial drop length in s, S2 only")->capture_default_str();
    }

    StimulusSpec spec() const {
        return StimulusSpec{parse_stimulus_kind(kind), vc, ratio, delta_t, duration, drop};
    }
};

std::string timestamp() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

class Invocation {
public:
    Invocation(std::ostream& out, std::ostream& err) : out_(out), err_(err) {}

    Globals globals;
    std::string command;
    std::vector<std::string> artifacts;
    json details = json::object();

    void note(const std::string& msg) const {
        if (!globals.quiet) err_ << msg << '\n';
    }
    void error(const std::string& msg) const { err_ << "error: " << msg << '\n'; }

    void write(const fs::path& path, const std::string& content) {
        io::write_file_atomic(path, content);
        artifacts.push_back(path.string());
    }

    int finish(int code, const std::string& message = {}) const {
        json status;
        status["command"] = command;
        status["status"] = code == kOk ? "ok" : "error";
        status["exit_code"] = code;
        if (!message.empty()) status["message"] = message;
        status["artifacts"] = artifacts;
        if (!details.empty()) status["details"] = details;
        status["timestamp"] = timestamp();
        out_ << status.dump() << '\n';
        return code;
    }

    io::RunConfig config() const {
        if (globals.config_path.empty()) return {};
        return io::parse_run_config(io::read_file(globals.config_path));
    }

private:
    std::ostream& out_;
    std::ostream& err_;
};

int cmd_design(Invocation& inv, const StimulusFlags& flags, const std::string& out,
               const std::string& models_path, const std::string& timeline_out) {
    const auto spec = flags.spec();
    const auto issues = validate_spec(spec);
    for (const auto& i : issues)
        if (i.severity == SpecIssue::Severity::warning) inv.note("warning: " + i.message);
    require_valid(spec);

    const auto schedule = compile_schedule(spec);
    std::ostringstream csv;
    write_schedule_csv(csv, schedule);

    std::optional<std::string> timeline_csv;
    if (!timeline_out.empty()) {
        io::ModelSet models;
        if (models_path.empty()) {
            const auto plant = inv.config().plant;
            models = {exact_valve_model(plant), exact_led_model(plant)};
        } else {
            models = io::parse_models_json(io::read_file(models_path));
        }
        std::ostringstream t;
        write_timeline_csv(t, schedule_to_timeline(schedule, models.valve, models.led));
        timeline_csv = t.str();
    }

    inv.write(out, csv.str());
    if (timeline_csv) inv.write(timeline_out, *timeline_csv);

    if (spec.kind == StimulusKind::S1) {
        const auto d = derive_pattern(spec);
        inv.details["cooling_time_s"] = d.cooling_time;
        inv.details["cycle_time_s"] = d.cycle_time;
        inv.details["relative_warming_rate"] = d.relative_warming_rate;
        inv.details["warming_rate"] = d.warming_rate;
    }
    inv.details["segments"] = schedule.segments.size();
    inv.details["scheduled_change_c"] = schedule.integrated_change();
    return kOk;
}

CalibrationResult run_calibration(Invocation& inv, const io::RunConfig& cfg,
                                  CalibrationProtocol protocol) {
    protocol.seed = inv.globals.seed;
    protocol.dt = cfg.dt;
    Plant plant(cfg.plant, inv.globals.seed);
    auto result = calibrate(plant, protocol);
    inv.note("calibrated in " + std::to_string(result.iterations) + " iteration(s): valve R2 " +
             format_number(result.valve.r_squared) + ", led R2 " +
             format_number(result.led.r_squared));
    return result;
}

int cmd_calibrate(Invocation& inv, const std::string& plant_path, const std::string& out,
                  std::optional<double> resolution, std::optional<double> noise,
                  std::optional<int> max_iters) {
    auto cfg = inv.config();
    if (!plant_path.empty()) io::apply_plant_config(io::read_file(plant_path), cfg.plant, &cfg.display);
    auto protocol = cfg.protocol;
    if (resolution) protocol.sensor_resolution = *resolution;
    if (noise) protocol.rate_noise_sigma = *noise;
    if (max_iters) protocol.max_iters = *max_iters;

    const auto result = run_calibration(inv, cfg, protocol);
    inv.write(out, io::models_json(result, protocol));
    inv.details["iterations"] = result.iterations;
    inv.details["valve_r_squared"] = result.valve.r_squared;
    inv.details["led_r_squared"] = result.led.r_squared;
    return kOk;
}

int cmd_simulate(Invocation& inv, const StimulusFlags& flags, const std::string& plant_path,
                 const std::string& models_path, const std::string& out) {
    auto cfg = inv.config();
    if (!plant_path.empty()) io::apply_plant_config(io::read_file(plant_path), cfg.plant, &cfg.display);
    const auto spec = flags.spec();
    require_valid(spec);

    io::ModelSet models;
    if (models_path.empty()) {
        const auto result = run_calibration(inv, cfg, cfg.protocol);
        models = {result.valve, result.led};
    } else {
        models = io::parse_models_json(io::read_file(models_path));
    }

    const auto schedule = compile_schedule(spec);
    const auto timeline = schedule_to_timeline(schedule, models.valve, models.led);
    Plant plant(cfg.plant, inv.globals.seed);
    plant.reset();
    const auto trace = run_control(timeline, plant, cfg.dt, cfg.log_rate);

    std::ostringstream csv;
    write_trace_csv(csv, trace);
    inv.write(out, csv.str());
    inv.details["net_change_c"] = trace.net_change();
    inv.details["scheduled_change_c"] = schedule.integrated_change();
    return kOk;
}

int cmd_experiment_run(Invocation& inv, int exp, std::optional<int> participants,
                       const std::string& out) {
    auto cfg = inv.config();
    ExperimentPlan plan;
    if (exp == 2) {
        cfg.exp2.seed = inv.globals.seed;
        if (participants) cfg.exp2.participants = *participants;
        plan = build_exp2_plan(cfg.exp2);
    } else if (exp == 3) {
        cfg.exp3.seed = inv.globals.seed;
        if (participants) cfg.exp3.participants = *participants;
        plan = build_exp3_plan(cfg.exp3);
    } else {
        throw ValidationError("--exp must be 2 or 3 (experiment 1 is the calibrate command)");
    }

    const auto settings = cfg.settings();
    inv.note("calibrating " + std::to_string(plan.participants) + " participant plant(s)");
    const auto setups = prepare_participants(plan, settings);
    inv.note("running " + std::to_string(plan.participants * plan.trials_per_participant()) +
             " trials");
    const auto records = run_experiment(plan, setups, settings);

    const auto written = io::write_experiment(out, plan, setups, records);
    // Trace files are many; the status line lists the top-level artifacts only.
    for (const auto& p : written)
        if (p.parent_path() == fs::path(out)) inv.artifacts.push_back(p.string());
    inv.details["experiment"] = std::string(to_string(plan.kind));
    inv.details["participants"] = plan.participants;
    inv.details["trial_records"] = records.size();
    inv.details["trace_files"] = records.size();
    return kOk;
}

int cmd_experiment_analyze(Invocation& inv, const std::string& in, const std::string& pooling,
                           double fdr, const std::string& out) {
    ExperimentKind kind{};
    const auto records = io::load_experiment(in, &kind);
    const auto mode = parse_pooling(pooling);
    if (!(fdr > 0.0 && fdr < 1.0)) throw ValidationError("--fdr must lie in (0, 1)");
    std::string report;
    if (kind == ExperimentKind::exp2)
        report = io::report_json(analyze_exp2(records, mode, fdr));
    else
        report = io::report_json(analyze_exp3(records, mode, fdr));
    inv.write(out, report);
    inv.details["experiment"] = std::string(to_string(kind));
    inv.details["trial_records"] = records.size();
    return kOk;
}

}  // namespace

int run_cli(std::span<const std::string> args, std::ostream& out, std::ostream& err) {
    Invocation inv(out, err);

    CLI::App app{"Cold-sensation display: stimulus design, calibration and experiment simulation",
                 "coldloop"};
    app.require_subcommand(1);
    app.fallthrough();
    app.add_option("--config", inv.globals.config_path, "JSON config file")->check(CLI::ExistingFile);
    app.add_option("--seed", inv.globals.seed, "Seed for every random stream")->capture_default_str();
    app.add_flag("--quiet", inv.globals.quiet, "Suppress progress notes on stderr");

    StimulusFlags design_flags, sim_flags;
    std::string design_out, design_models, design_timeline;
    auto* design = app.add_subcommand("design", "Compile a stimulus into a rate schedule CSV");
    design_flags.add_to(design);
    design->add_option("--out", design_out, "Schedule CSV path")->required();
    design->add_option("--models", design_models, "Duty model JSON for --timeline-out");
    design->add_option("--timeline-out", design_timeline, "Also write the actuator timeline CSV");

    std::string cal_plant, cal_out;
    std::optional<double> cal_resolution, cal_noise;
    std::optional<int> cal_iters;
    auto* calibrate_cmd = app.add_subcommand("calibrate", "Fit duty models against the simulated plant");
    calibrate_cmd->add_option("--plant", cal_plant, "Plant config JSON")->check(CLI::ExistingFile);
    calibrate_cmd->add_option("--out", cal_out, "Model JSON path")->required();
    calibrate_cmd->add_option("--resolution", cal_resolution, "Sensor resolution in C (0 = ideal)");
    calibrate_cmd->add_option("--noise", cal_noise, "Measurement noise on each rate, C/s");
    calibrate_cmd->add_option("--max-iters", cal_iters, "Drift-correction iteration budget");

    std::string sim_plant, sim_models, sim_out;
    auto* simulate = app.add_subcommand("simulate", "Run one stimulus on the plant and log a trace");
    sim_flags.add_to(simulate);
    simulate->add_option("--plant", sim_plant, "Plant config JSON")->check(CLI::ExistingFile);
    simulate->add_option("--models", sim_models, "Duty model JSON (calibrates when omitted)")
        ->check(CLI::ExistingFile);
    simulate->add_option("--out", sim_out, "Trace CSV path")->required();

    int run_exp = 2;
    std::optional<int> run_participants;
    std::string run_out;
    auto* exp_run = app.add_subcommand("experiment-run", "Simulate experiment 2 or 3");
    exp_run->add_option("--exp", run_exp, "Experiment number (2 or 3)")->capture_default_str();
    exp_run->add_option("--participants", run_participants, "Synthetic participant count");
    exp_run->add_option("--out", run_out, "Output directory")->required();

    std::string an_in, an_out, an_pooling = "trial";
    double an_fdr = kDefaultFdr;
    auto* exp_an = app.add_subcommand("experiment-analyze", "Analyze a recorded experiment run");
    exp_an->add_option("--in", an_in, "Run directory")->required();
    exp_an->add_option("--pooling", an_pooling, "trial or participant")->capture_default_str();
    exp_an->add_option("--fdr", an_fdr, "False discovery rate")->capture_default_str();
    exp_an->add_option("--out", an_out, "Report JSON path")->required();

    std::vector<std::string> argv(args.rbegin(), args.rend());
    try {
        app.parse(argv);
    } catch (const CLI::CallForHelp&) {
        err << app.help();
        inv.command = "help";
        return inv.finish(kOk);
    } catch (const CLI::ParseError& e) {
        inv.error(e.what());
        inv.command = app.get_subcommands().empty() ? "" : app.get_subcommands().front()->get_name();
        return inv.finish(kValidation, e.what());
    }
    inv.command = app.get_subcommands().front()->get_name();

    try {
        if (*design) return inv.finish(cmd_design(inv, design_flags, design_out, design_models, design_timeline));
        if (*calibrate_cmd)
            return inv.finish(cmd_calibrate(inv, cal_plant, cal_out, cal_resolution, cal_noise, cal_iters));
        if (*simulate) return inv.finish(cmd_simulate(inv, sim_flags, sim_plant, sim_models, sim_out));
        if (*exp_run) return inv.finish(cmd_experiment_run(inv, run_exp, run_participants, run_out));
        if (*exp_an) return inv.finish(cmd_experiment_analyze(inv, an_in, an_pooling, an_fdr, an_out));
    } catch (const ValidationError& e) {
        inv.error(e.what());
        return inv.finish(kValidation, e.what());
    } catch (const std::exception& e) {
        inv.error(e.what());
        return inv.finish(kRuntime, e.what());
    }
    return inv.finish(kValidation, "no command");
}

int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return run_cli(args, out, err);
}

}  // namespace coldloop::cli
