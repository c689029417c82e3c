#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "coldloop/analysis.hpp"
#include "coldloop/calibration.hpp"
#include "coldloop/experiment.hpp"
#include "coldloop/plant.hpp"

namespace coldloop::io {

std::string read_file(const std::filesystem::path& path);

/// Writes to a sibling temporary file and renames it into place, so readers
/// never observe a partially written artifact.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

// --- configuration ---------------------------------------------------------

/// Everything a `--config` document may set. Sections: "plant", "protocol",
/// "participant", "experiment". Missing keys keep their defaults; unknown keys
/// are rejected.
struct RunConfig {
    PlantParams plant;
    DisplayConstants display;
    CalibrationProtocol protocol;
    ParticipantModel participant;
    Exp2Config exp2;
    Exp3Config exp3;
    double plant_jitter = 0.10;
    double led_gain_nominal = 1.1;
    double dt = kDefaultControlStep;
    double log_rate = kDefaultLogRate;
    unsigned threads = 0;

    RunSettings settings() const;
};

RunConfig parse_run_config(std::string_view json_text);

/// Plant config document: the PlantParams fields plus descriptive constants.
void apply_plant_config(std::string_view json_text, PlantParams& params,
                        DisplayConstants* display = nullptr);
std::string plant_config_json(const PlantParams& params, const DisplayConstants& display = {});

// --- duty models -----------------------------------------------------------

struct ModelSet {
    DutyModel valve;
    DutyModel led;
};

std::string models_json(const CalibrationResult& result, const CalibrationProtocol& protocol);
std::string models_json(const ModelSet& models);
ModelSet parse_models_json(std::string_view json_text);

// --- experiment artifacts --------------------------------------------------

/// Header: trial,stimulus_id,kind,vc,lambda,seed,likert (one participant).
std::string records_csv(const std::vector<TrialRecord>& records);

/// Header: time_s,temp_c[,slider]
std::string trial_trace_csv(const TrialRecord& record);

std::string participant_records_name(int participant);       // participant_01.csv
std::string trial_trace_name(int participant, int trial);    // traces/p01_t001.csv

/// Writes per-participant record CSVs, per-trial traces and manifest.json.
/// Everything is rendered in memory first; nothing is written if rendering fails.
std::vector<std::filesystem::path> write_experiment(const std::filesystem::path& dir,
                                                    const ExperimentPlan& plan,
                                                    const std::vector<ParticipantSetup>& setups,
                                                    const std::vector<TrialRecord>& records);

/// Reads back what write_experiment produced.
std::vector<TrialRecord> load_experiment(const std::filesystem::path& dir,
                                         ExperimentKind* kind = nullptr);

std::string report_json(const Exp2Report& report);
std::string report_json(const Exp3Report& report);

}  // namespace coldloop::io
