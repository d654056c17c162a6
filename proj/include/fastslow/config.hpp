#pragma once

#include <cstdint>
#include <string>

#include "fastslow/compensator.hpp"
#include "fastslow/ensemble.hpp"
#include "fastslow/plant.hpp"

namespace fastslow {

// Full experiment configuration. Round-trips losslessly through JSON; every
// default here matches the module-level choices.
struct Config {
    PlantConfig plant;
    ExcitationSpec excitation;
    NarxConfig narx;
    EnsembleParams ensemble;
    GpConfig gp;

    std::string scenario = "two_regime";  // two_regime | internal_change | stationary
    int n_mon = 200;          // monitoring batch size
    int train_len = 1000;     // samples collected per member dataset
    int test_half = 400;      // per-regime half of the final mixed test
    int in_regime_batches = 2;
    double internal_change_gain = 1.3;
    std::uint64_t seed = 1;
    std::string out_dir = "out";
};

// Small two-regime plant meant for second-scale runs.
Config desk_preset();

// Dimensions and cadence of the reference district-heating benchmark
// (6 inputs / 17 outputs, daily batches of 288 at 5-minute sampling).
Config aroma_preset();

// Throws ConfigError naming the offending key.
void validate(const Config& config);

std::string config_to_json_string(const Config& config);
Config config_from_json_string(const std::string& text);

void save_config(const Config& config, const std::string& path);
Config load_config(const std::string& path);

}  // namespace fastslow
