#include "floorid/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>

#include <json.hpp>

#include "floorid/errors.hpp"
#include "floorid/rfgnn.hpp"

namespace floorid {

namespace {

constexpr std::uint64_t kLayoutStream = 11;
constexpr std::uint64_t kAnchorStream = 12;

struct Point3 {
    double x, y, z;
};

std::string mac_name(int floor, int ap) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "02:00:00:%02x:%02x:%02x", floor & 0xff, (ap >> 8) & 0xff, ap & 0xff);
    return buf;
}

// Whether the segment's footprint on the floor plane crosses the atrium disc.
bool crosses_atrium(const Atrium& a, const Point3& p, const Point3& q) {
    const double dx = q.x - p.x, dy = q.y - p.y;
    const double len2 = dx * dx + dy * dy;
    double t = 0.0;
    if (len2 > 0.0) t = std::clamp(((a.center_x - p.x) * dx + (a.center_y - p.y) * dy) / len2, 0.0, 1.0);
    const double cx = p.x + t * dx - a.center_x, cy = p.y + t * dy - a.center_y;
    return cx * cx + cy * cy <= a.radius * a.radius;
}

}  // namespace

void BuildingSpec::validate() const {
    if (floors < kMinFloors) throw ValidationError("a building needs at least 3 floors");
    if (floor_height <= 0.0 || width <= 0.0 || depth <= 0.0) throw ValidationError("building dimensions must be positive");
    if (aps_per_floor < 1 || samples_per_floor < 1) throw ValidationError("need at least one AP and one sample per floor");
    if (path_loss_exponent <= 0.0) throw ValidationError("path-loss exponent must be positive");
    if (floor_attenuation < 0.0 || noise_sigma < 0.0) throw ValidationError("attenuation and noise must be non-negative");
    if (detect_threshold <= -kRssFloor) throw ValidationError("detection threshold must exceed -120 dBm");
    if (atrium && atrium->radius <= 0.0) throw ValidationError("atrium radius must be positive");
    if (anchor_floor < 1 || anchor_floor > floors) throw ValidationError("anchor floor outside the building");
}

Dataset generate(const BuildingSpec& spec) {
    spec.validate();
    Rng rng = stream_rng(spec.seed, kLayoutStream);
    std::uniform_real_distribution<double> ux(0.0, spec.width), uy(0.0, spec.depth);
    std::normal_distribution<double> noise(0.0, spec.noise_sigma);

    struct Ap {
        std::string mac;
        int floor;
        Point3 at;
    };
    std::vector<Ap> aps;
    for (int f = 1; f <= spec.floors; ++f) {
        const double z = (f - 1) * spec.floor_height;
        for (int a = 0; a < spec.aps_per_floor; ++a) {
            const double x = ux(rng);
            aps.push_back({mac_name(f, a), f, {x, uy(rng), z}});
        }
    }

    std::vector<ScanRecord> records;
    std::vector<int> detections(static_cast<std::size_t>(spec.floors) + 1, 0);
    for (int f = 1; f <= spec.floors; ++f) {
        const double z = (f - 1) * spec.floor_height;
        for (int s = 0; s < spec.samples_per_floor; ++s) {
            const double x = ux(rng);
            const Point3 at{x, uy(rng), z};
            ScanRecord rec;
            rec.id = "f" + std::to_string(f) + "s" + std::to_string(s);
            rec.floor = f;
            for (const auto& ap : aps) {
                const double d = std::sqrt((ap.at.x - at.x) * (ap.at.x - at.x) + (ap.at.y - at.y) * (ap.at.y - at.y) +
                                           (ap.at.z - at.z) * (ap.at.z - at.z));
                const int gap = std::abs(ap.floor - f);
                const bool open = spec.atrium && gap > 0 && crosses_atrium(*spec.atrium, ap.at, at);
                double rss = spec.tx_power - 10.0 * spec.path_loss_exponent * std::log10(std::max(d, 1.0)) -
                             (open ? 0.0 : spec.floor_attenuation * gap);
                // Always draw so the stream layout does not depend on earlier outcomes.
                rss += spec.noise_sigma > 0.0 ? noise(rng) : 0.0;
                if (rss >= spec.detect_threshold) rec.readings.push_back({ap.mac, std::min(rss, -0.01)});
            }
            if (rec.readings.empty()) continue;
            detections[static_cast<std::size_t>(f)] += 1;
            records.push_back(std::move(rec));
        }
    }
    for (int f = 1; f <= spec.floors; ++f) {
        if (detections[static_cast<std::size_t>(f)] == 0) {
            throw ValidationError("floor " + std::to_string(f) + " produced no detections; parameters are infeasible");
        }
    }
    std::shuffle(records.begin(), records.end(), rng);

    Rng pick = stream_rng(spec.seed, kAnchorStream);
    std::vector<std::size_t> on_floor;
    for (std::size_t r = 0; r < records.size(); ++r) {
        if (records[r].floor == spec.anchor_floor) on_floor.push_back(r);
    }
    std::uniform_int_distribution<std::size_t> choose(0, on_floor.size() - 1);
    records[on_floor[choose(pick)]].anchor = true;
    return make_dataset(std::move(records), spec.floors,
                        spec.anchor_floor == 1 ? AnchorMode::Bottom : AnchorMode::Arbitrary);
}

std::string spec_to_json(const BuildingSpec& spec) {
    nlohmann::ordered_json j;
    j["floors"] = spec.floors;
    j["floor_height"] = spec.floor_height;
    j["width"] = spec.width;
    j["depth"] = spec.depth;
    j["aps_per_floor"] = spec.aps_per_floor;
    j["samples_per_floor"] = spec.samples_per_floor;
    j["tx_power"] = spec.tx_power;
    j["path_loss_exponent"] = spec.path_loss_exponent;
    j["floor_attenuation"] = spec.floor_attenuation;
    j["noise_sigma"] = spec.noise_sigma;
    j["detect_threshold"] = spec.detect_threshold;
    if (spec.atrium) {
        j["atrium"] = {{"center_x", spec.atrium->center_x}, {"center_y", spec.atrium->center_y}, {"radius", spec.atrium->radius}};
    } else {
        j["atrium"] = nullptr;
    }
    j["anchor_floor"] = spec.anchor_floor;
    j["seed"] = spec.seed;
    return j.dump();
}

BuildingSpec spec_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("building spec: ") + e.what());
    }
    BuildingSpec s;
    auto get = [&](const char* key, auto& field) {
        if (j.contains(key)) field = j.at(key).get<std::remove_reference_t<decltype(field)>>();
    };
    try {
        get("floors", s.floors);
        get("floor_height", s.floor_height);
        get("width", s.width);
        get("depth", s.depth);
        get("aps_per_floor", s.aps_per_floor);
        get("samples_per_floor", s.samples_per_floor);
        get("tx_power", s.tx_power);
        get("path_loss_exponent", s.path_loss_exponent);
        get("floor_attenuation", s.floor_attenuation);
        get("noise_sigma", s.noise_sigma);
        get("detect_threshold", s.detect_threshold);
        get("anchor_floor", s.anchor_floor);
        get("seed", s.seed);
        if (j.contains("atrium") && !j["atrium"].is_null()) {
            Atrium a;
            a.center_x = j["atrium"].value("center_x", a.center_x);
            a.center_y = j["atrium"].value("center_y", a.center_y);
            a.radius = j["atrium"].value("radius", a.radius);
            s.atrium = a;
        }
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("building spec: ") + e.what());
    }
    s.validate();
    return s;
}

std::vector<SuiteEntry> generate_suite(const std::vector<BuildingSpec>& specs,
                                       const std::vector<std::uint64_t>& seeds,
                                       const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    std::vector<SuiteEntry> entries;
    auto manifest = nlohmann::ordered_json::array();
    for (const auto& base : specs) {
        for (auto seed : seeds) {
            BuildingSpec spec = base;
            spec.seed = seed;
            const auto name = "building_" + std::to_string(spec.floors) + "f_anchor" + std::to_string(spec.anchor_floor) +
                              "_seed" + std::to_string(seed) + ".jsonl";
            const auto path = dir / name;
            save_dataset(path, generate(spec));
            entries.push_back({spec, path});
            manifest.push_back({{"path", name}, {"seed", seed}, {"spec", nlohmann::ordered_json::parse(spec_to_json(spec))}});
        }
    }
    std::ofstream out(dir / "manifest.json");
    if (!out) throw ValidationError("cannot write manifest in " + dir.string());
    out << manifest.dump(2) << '\n';
    return entries;
}

}  // namespace floorid
