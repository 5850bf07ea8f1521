#include "floorid/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "floorid/errors.hpp"

namespace floorid {

using nlohmann::json;
using nlohmann::ordered_json;

std::size_t Dataset::anchor_index() const {
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (records[i].anchor) return i;
    }
    throw ValidationError("dataset has no anchor record");
}

bool Dataset::fully_labeled() const {
    return std::all_of(records.begin(), records.end(),
                       [](const ScanRecord& r) { return r.floor.has_value(); });
}

std::size_t Dataset::reading_count() const {
    std::size_t total = 0;
    for (const auto& r : records) total += r.readings.size();
    return total;
}

namespace {

void validate_record(const ScanRecord& record, std::size_t line_no) {
    if (record.readings.empty()) throw DatasetError(line_no, "empty readings");
    std::unordered_set<std::string> seen;
    for (const auto& reading : record.readings) {
        if (!(reading.rss > -kRssFloor && reading.rss <= 0.0)) {
            throw DatasetError(line_no, "rss out of range (-120, 0]: mac " + reading.mac);
        }
        if (!seen.insert(reading.mac).second) {
            throw DatasetError(line_no, "duplicate mac " + reading.mac);
        }
    }
    if (record.anchor && !record.floor) {
        throw DatasetError(line_no, "anchor record must carry a floor");
    }
    if (record.floor && *record.floor < 1) {
        throw DatasetError(line_no, "floor must be >= 1");
    }
}

// Drops floors 1..floor_count with too few records and renumbers the
// survivors 1..k. Returns k, or floor_count when no record carries a floor.
int apply_floor_filter(std::vector<ScanRecord>& records, int min_samples, int floor_count) {
    std::map<int, std::size_t> counts;
    for (const auto& r : records) {
        if (!r.floor) continue;
        if (*r.floor > floor_count) {
            throw ValidationError("record " + r.id + " has floor " + std::to_string(*r.floor) +
                                  " above floor count " + std::to_string(floor_count));
        }
        ++counts[*r.floor];
    }
    if (counts.empty()) return floor_count;

    std::map<int, int> renumber;
    int next = 1;
    for (const auto& [floor, count] : counts) {
        if (count >= static_cast<std::size_t>(min_samples)) renumber[floor] = next++;
    }
    std::vector<ScanRecord> kept;
    kept.reserve(records.size());
    for (auto& r : records) {
        if (!r.floor) {
            kept.push_back(std::move(r));
            continue;
        }
        auto it = renumber.find(*r.floor);
        if (it == renumber.end()) {
            if (r.anchor) throw ValidationError("anchor floor removed by --min-floor-samples");
            continue;
        }
        r.floor = it->second;
        kept.push_back(std::move(r));
    }
    records = std::move(kept);
    return static_cast<int>(renumber.size());
}

}  // namespace

ScanRecord parse_record(const std::string& line, std::size_t line_no) {
    json j;
    try {
        j = json::parse(line);
    } catch (const json::parse_error& e) {
        throw DatasetError(line_no, std::string("malformed JSON: ") + e.what());
    }
    if (!j.is_object()) throw DatasetError(line_no, "record must be a JSON object");

    ScanRecord record;
    try {
        if (!j.contains("id") || !j["id"].is_string()) {
            throw DatasetError(line_no, "missing string field 'id'");
        }
        record.id = j["id"].get<std::string>();

        if (j.contains("floor") && !j["floor"].is_null()) {
            if (!j["floor"].is_number_integer()) throw DatasetError(line_no, "'floor' must be an integer");
            record.floor = j["floor"].get<int>();
        }
        if (j.contains("anchor")) {
            if (!j["anchor"].is_boolean()) throw DatasetError(line_no, "'anchor' must be a boolean");
            record.anchor = j["anchor"].get<bool>();
        }
        if (!j.contains("scan") || !j["scan"].is_array()) {
            throw DatasetError(line_no, "missing array field 'scan'");
        }
        for (const auto& entry : j["scan"]) {
            if (!entry.is_object() || !entry.contains("mac") || !entry["mac"].is_string() ||
                !entry.contains("rss") || !entry["rss"].is_number()) {
                throw DatasetError(line_no, "scan entries need string 'mac' and numeric 'rss'");
            }
            record.readings.push_back({entry["mac"].get<std::string>(), entry["rss"].get<double>()});
        }
    } catch (const json::exception& e) {
        throw DatasetError(line_no, e.what());
    }
    validate_record(record, line_no);
    return record;
}

std::string serialize_record(const ScanRecord& record) {
    ordered_json j;
    j["id"] = record.id;
    j["floor"] = record.floor ? ordered_json(*record.floor) : ordered_json(nullptr);
    j["anchor"] = record.anchor;
    ordered_json scan = ordered_json::array();
    for (const auto& reading : record.readings) {
        ordered_json e;
        e["mac"] = reading.mac;
        e["rss"] = reading.rss;
        scan.push_back(std::move(e));
    }
    j["scan"] = std::move(scan);
    return j.dump();
}

Dataset make_dataset(std::vector<ScanRecord> records, int floor_count, AnchorMode mode) {
    if (floor_count < kMinFloors) {
        throw ValidationError("floor count must be >= 3 (got " + std::to_string(floor_count) + ")");
    }
    std::size_t anchors = 0;
    for (std::size_t i = 0; i < records.size(); ++i) {
        validate_record(records[i], i + 1);
        if (records[i].anchor) ++anchors;
    }
    if (anchors != 1) {
        throw ValidationError("exactly one anchor required (found " + std::to_string(anchors) + ")");
    }
    if (records.size() < static_cast<std::size_t>(floor_count)) {
        throw ValidationError("need at least one record per floor");
    }

    std::unordered_set<std::string> ids;
    Dataset dataset;
    dataset.floor_count = floor_count;
    std::unordered_set<std::string> seen_macs;
    for (const auto& r : records) {
        if (!ids.insert(r.id).second) throw ValidationError("duplicate record id " + r.id);
        if (r.floor && *r.floor > floor_count) {
            throw ValidationError("record " + r.id + " has floor " + std::to_string(*r.floor) +
                                  " above floor count " + std::to_string(floor_count));
        }
        if (r.anchor && mode == AnchorMode::Bottom && *r.floor != 1) {
            throw ValidationError("bottom-floor mode requires the anchor on floor 1");
        }
        for (const auto& reading : r.readings) {
            if (seen_macs.insert(reading.mac).second) dataset.mac_universe.push_back(reading.mac);
        }
    }
    dataset.records = std::move(records);
    return dataset;
}

Dataset read_dataset(std::istream& in, const LoadOptions& options) {
    std::vector<ScanRecord> records;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); })) {
            continue;
        }
        records.push_back(parse_record(line, line_no));
    }
    int floor_count = options.floor_count;
    if (options.min_samples_per_floor) {
        if (floor_count < kMinFloors) {
            throw ValidationError("floor count must be >= 3 (got " + std::to_string(floor_count) + ")");
        }
        floor_count = apply_floor_filter(records, *options.min_samples_per_floor, floor_count);
    }
    return make_dataset(std::move(records), floor_count, options.mode);
}

Dataset load_dataset(const std::filesystem::path& path, const LoadOptions& options) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open dataset " + path.string());
    return read_dataset(in, options);
}

Dataset load_dataset(const std::filesystem::path& path, int floor_count,
                     std::optional<int> min_samples_per_floor) {
    return load_dataset(path, LoadOptions{floor_count, min_samples_per_floor, AnchorMode::Bottom});
}

void write_dataset(std::ostream& out, const Dataset& dataset) {
    for (const auto& r : dataset.records) out << serialize_record(r) << '\n';
}

void save_dataset(const std::filesystem::path& path, const Dataset& dataset) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write " + path.string());
    write_dataset(out, dataset);
}

DatasetSummary summarize(const Dataset& dataset, bool with_histogram) {
    DatasetSummary summary;
    summary.record_count = dataset.records.size();
    summary.mac_count = dataset.mac_universe.size();
    summary.reading_count = dataset.reading_count();
    for (const auto& r : dataset.records) {
        if (r.floor) ++summary.records_per_floor[*r.floor];
    }
    if (!with_histogram) return summary;
    if (!dataset.fully_labeled()) {
        throw ValidationError("spillover histogram needs a ground-truth floor on every record");
    }

    std::unordered_map<std::string, std::set<int>> floors_of_mac;
    for (const auto& r : dataset.records) {
        for (const auto& reading : r.readings) floors_of_mac[reading.mac].insert(*r.floor);
    }
    const int n = dataset.floor_count;
    summary.floor_span_histogram.assign(static_cast<std::size_t>(n) + 1, 0);
    std::vector<std::vector<std::size_t>> shared(n + 1, std::vector<std::size_t>(n + 1, 0));
    for (const auto& [mac, floors] : floors_of_mac) {
        ++summary.floor_span_histogram[floors.size()];
        for (int a : floors) {
            for (int b : floors) {
                if (a < b) ++shared[a][b];
            }
        }
    }
    summary.mean_shared_by_gap.assign(static_cast<std::size_t>(n), 0.0);
    for (int gap = 1; gap < n; ++gap) {
        double total = 0.0;
        for (int a = 1; a + gap <= n; ++a) total += static_cast<double>(shared[a][a + gap]);
        summary.mean_shared_by_gap[gap] = total / static_cast<double>(n - gap);
    }
    return summary;
}

}  // namespace floorid
