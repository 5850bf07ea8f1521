#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "floorid/ingest.hpp"

namespace floorid {

struct Atrium {
    double center_x = 40.0;
    double center_y = 20.0;
    double radius = 8.0;
};

// Log-distance path loss with a per-floor attenuation factor:
// RSS = P0 - 10 n log10(max(d, 1)) - FAF |floor gap| + N(0, noise_sigma).
struct BuildingSpec {
    int floors = 5;
    double floor_height = 4.0;
    double width = 80.0;
    double depth = 40.0;
    int aps_per_floor = 20;
    int samples_per_floor = 200;
    double tx_power = -40.0;
    double path_loss_exponent = 3.0;
    double floor_attenuation = 15.0;
    double noise_sigma = 4.0;
    double detect_threshold = -100.0;
    std::optional<Atrium> atrium;
    int anchor_floor = 1;
    std::uint64_t seed = 1;

    void validate() const;
};

// Records carry ground-truth floors; exactly one record on `anchor_floor` is the anchor.
Dataset generate(const BuildingSpec& spec);

struct SuiteEntry {
    BuildingSpec spec;
    std::filesystem::path path;
};

// Writes one JSON Lines file per (spec, seed) into `dir`, plus manifest.json.
std::vector<SuiteEntry> generate_suite(const std::vector<BuildingSpec>& specs,
                                       const std::vector<std::uint64_t>& seeds,
                                       const std::filesystem::path& dir);

std::string spec_to_json(const BuildingSpec& spec);
BuildingSpec spec_from_json(const std::string& text);

}  // namespace floorid
