#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "floorid/clustering.hpp"
#include "floorid/indexing.hpp"
#include "floorid/ingest.hpp"
#include "floorid/metrics.hpp"
#include "floorid/rfgnn.hpp"

namespace floorid {

enum class ClusterMethod { Hierarchical, KMeans };

struct PipelineConfig {
    std::filesystem::path dataset;
    int floor_count = 0;
    AnchorMode mode = AnchorMode::Bottom;
    GnnConfig gnn;
    ClusterMethod clustering = ClusterMethod::Hierarchical;
    SimilarityMethod similarity = SimilarityMethod::Adapted;
    SolverKind solver = SolverKind::Auto;
    int restarts = 16;
    double rss_offset = 120.0;
    std::optional<int> min_floor_samples;
    std::uint64_t seed = 1;            // overrides gnn.seed and seeds k-means and 2-opt
    std::filesystem::path output_dir;  // empty: keep everything in memory
    int threads = 1;
    bool deterministic = true;

    // The GNN settings actually used: gnn with seed and threads applied.
    GnnConfig effective_gnn() const;
    void validate() const;
};

Dataset load_for(const PipelineConfig& config);

TrainResult embed_stage(const Dataset& dataset, const PipelineConfig& config);
Clustering cluster_stage(const Dataset& dataset, const EmbeddingTable& embeddings, const PipelineConfig& config);

struct IndexResult {
    Eigen::MatrixXd similarity;
    FloorOrdering ordering;
    std::vector<int> labels;  // floor per record
};

IndexResult index_stage(const Dataset& dataset, const Clustering& clustering, const EmbeddingTable& embeddings,
                        const PipelineConfig& config);

// Empty when some record has no ground-truth floor.
std::optional<MetricsReport> eval_stage(const Dataset& dataset, std::span<const int> labels);

struct RunReport {
    PipelineConfig config;
    std::vector<double> epoch_losses;
    EmbeddingTable embeddings;
    Clustering clustering;
    IndexResult index;
    std::optional<MetricsReport> metrics;
    std::vector<std::string> warnings;
    std::map<std::string, double> seconds;             // wall clock per stage
    std::map<std::string, std::filesystem::path> artifacts;
};

// Runs every stage on an already loaded dataset; writes artifacts when config.output_dir is set.
RunReport run_pipeline(const Dataset& dataset, const PipelineConfig& config);
RunReport run_pipeline(const PipelineConfig& config);

std::string config_json(const PipelineConfig& config);
std::string metrics_json(const MetricsReport& metrics);
std::string index_json(const IndexResult& index);
std::string report_json(const RunReport& report);

void write_labels(std::ostream& out, const Dataset& dataset, std::span<const int> labels);
std::vector<int> read_labels(std::istream& in, const Dataset& dataset);

const char* to_string(AnchorMode mode);
const char* to_string(ClusterMethod method);
const char* to_string(SimilarityMethod method);
const char* to_string(SolverKind kind);
const char* to_string(Aggregator kind);

}  // namespace floorid
