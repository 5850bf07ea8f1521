#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace floorid {

// Readings must lie in (-kRssFloor, 0] dBm so that RSS + 120 stays positive.
inline constexpr double kRssFloor = 120.0;
inline constexpr int kMinFloors = 3;

struct Reading {
    std::string mac;
    double rss = 0.0;  // dBm

    bool operator==(const Reading&) const = default;
};

struct ScanRecord {
    std::string id;
    std::vector<Reading> readings;
    std::optional<int> floor;  // ground truth, 1 = bottom
    bool anchor = false;

    bool operator==(const ScanRecord&) const = default;
};

enum class AnchorMode { Bottom, Arbitrary };

struct Dataset {
    std::vector<ScanRecord> records;
    std::vector<std::string> mac_universe;  // first-seen order
    int floor_count = 0;

    std::size_t anchor_index() const;
    const ScanRecord& anchor() const { return records[anchor_index()]; }
    bool fully_labeled() const;
    std::size_t reading_count() const;
};

struct LoadOptions {
    int floor_count = 0;
    std::optional<int> min_samples_per_floor;
    AnchorMode mode = AnchorMode::Bottom;
};

// Parses one JSON Lines record. Throws DatasetError tagged with `line_no`.
ScanRecord parse_record(const std::string& line, std::size_t line_no);
std::string serialize_record(const ScanRecord& record);

Dataset read_dataset(std::istream& in, const LoadOptions& options);
Dataset load_dataset(const std::filesystem::path& path, const LoadOptions& options);
Dataset load_dataset(const std::filesystem::path& path, int floor_count,
                     std::optional<int> min_samples_per_floor = std::nullopt);

// Builds a Dataset from in-memory records and enforces every dataset invariant.
Dataset make_dataset(std::vector<ScanRecord> records, int floor_count,
                     AnchorMode mode = AnchorMode::Bottom);

void write_dataset(std::ostream& out, const Dataset& dataset);
void save_dataset(const std::filesystem::path& path, const Dataset& dataset);

struct DatasetSummary {
    std::size_t record_count = 0;
    std::size_t mac_count = 0;
    std::size_t reading_count = 0;
    std::map<int, std::size_t> records_per_floor;
    // floor_span_histogram[k] = number of MACs heard on exactly k distinct floors.
    std::vector<std::size_t> floor_span_histogram;
    // mean_shared_by_gap[g] = mean number of MACs heard on both floors of a pair g floors apart.
    std::vector<double> mean_shared_by_gap;
};

// Throws ValidationError when `with_histogram` is set and a record lacks its floor.
DatasetSummary summarize(const Dataset& dataset, bool with_histogram = true);

}  // namespace floorid
