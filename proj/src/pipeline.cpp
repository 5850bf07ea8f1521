#include "floorid/pipeline.hpp"

#include <chrono>
#include <fstream>
#include <istream>
#include <ostream>
#include <unordered_map>

#include <json.hpp>

#include "floorid/errors.hpp"
#include "floorid/graph.hpp"

namespace floorid {

using nlohmann::ordered_json;

const char* to_string(AnchorMode mode) { return mode == AnchorMode::Bottom ? "bottom" : "arbitrary"; }
const char* to_string(ClusterMethod method) { return method == ClusterMethod::Hierarchical ? "hierarchical" : "kmeans"; }
const char* to_string(SimilarityMethod method) { return method == SimilarityMethod::Adapted ? "adapted" : "plain"; }
const char* to_string(Aggregator kind) { return kind == Aggregator::Weighted ? "weighted" : "uniform"; }
const char* to_string(SolverKind kind) {
    switch (kind) {
        case SolverKind::Exact: return "exact";
        case SolverKind::TwoOpt: return "two_opt";
        case SolverKind::Auto: break;
    }
    return "auto";
}

GnnConfig PipelineConfig::effective_gnn() const {
    GnnConfig g = gnn;
    g.seed = seed;
    g.threads = deterministic ? 1 : threads;
    return g;
}

void PipelineConfig::validate() const {
    if (floor_count < kMinFloors) throw ValidationError("floor count must be at least 3");
    if (threads < 1) throw ValidationError("threads must be at least 1");
    if (restarts < 1) throw ValidationError("restarts must be at least 1");
    if (min_floor_samples && *min_floor_samples < 1) throw ValidationError("min floor samples must be positive");
    effective_gnn().validate();
}

Dataset load_for(const PipelineConfig& config) {
    if (!std::filesystem::exists(config.dataset)) {
        throw ValidationError("dataset not found: " + config.dataset.string());
    }
    return load_dataset(config.dataset, LoadOptions{config.floor_count, config.min_floor_samples, config.mode});
}

TrainResult embed_stage(const Dataset& dataset, const PipelineConfig& config) {
    const auto graph = build_graph(dataset, config.rss_offset);
    return train(graph, config.effective_gnn());
}

namespace {

std::optional<std::size_t> holdout_for(const Dataset& dataset, const PipelineConfig& config) {
    if (config.mode == AnchorMode::Arbitrary) return dataset.anchor_index();
    return std::nullopt;
}

void check_embeddings(const Dataset& dataset, const EmbeddingTable& embeddings) {
    if (embeddings.node_count() != embeddings.mac_count + dataset.records.size()) {
        throw ValidationError("embedding table does not match the dataset (" + std::to_string(embeddings.node_count()) +
                              " rows for " + std::to_string(dataset.records.size()) + " records)");
    }
}

}  // namespace

Clustering cluster_stage(const Dataset& dataset, const EmbeddingTable& embeddings, const PipelineConfig& config) {
    check_embeddings(dataset, embeddings);
    const auto points = embeddings.sample_rows();
    const auto holdout = holdout_for(dataset, config);
    if (config.clustering == ClusterMethod::KMeans) {
        return kmeans_cluster(points, dataset.floor_count, config.seed, holdout).clustering;
    }
    return hierarchical_cluster(points, dataset.floor_count, holdout).clustering;
}

IndexResult index_stage(const Dataset& dataset, const Clustering& clustering, const EmbeddingTable& embeddings,
                        const PipelineConfig& config) {
    check_embeddings(dataset, embeddings);
    if (clustering.assignment.size() != dataset.records.size()) {
        throw ValidationError("cluster assignment does not match the dataset");
    }
    IndexResult result;
    result.similarity = build_similarity(mac_frequency_profile(clustering, dataset), config.similarity);
    const IndexingOptions options{config.solver, config.restarts, config.seed};
    const auto anchor = dataset.anchor_index();
    if (config.mode == AnchorMode::Bottom) {
        const int cluster = clustering.assignment[anchor];
        if (cluster == kHeldOut) throw ValidationError("bottom-anchor mode needs the anchor inside a cluster");
        result.ordering = index_bottom_anchor(result.similarity, static_cast<std::size_t>(cluster), options);
        result.labels = assign_labels(result.ordering, clustering);
    } else {
        if (clustering.assignment[anchor] != kHeldOut) {
            throw ValidationError("arbitrary-anchor mode needs the anchor held out of clustering");
        }
        const auto points = embeddings.sample_rows();
        const Vec r = points.row(static_cast<Eigen::Index>(anchor)).transpose();
        const int floor = *dataset.records[anchor].floor;
        result.ordering = index_arbitrary_anchor(clustering, result.similarity, points, r, floor, options);
        result.labels = assign_labels(result.ordering, clustering, floor);
    }
    return result;
}

std::optional<MetricsReport> eval_stage(const Dataset& dataset, std::span<const int> labels) {
    if (!dataset.fully_labeled()) return std::nullopt;
    std::vector<int> truth;
    for (const auto& r : dataset.records) truth.push_back(*r.floor);
    return evaluate_labels(labels, truth, dataset.floor_count);
}

void write_labels(std::ostream& out, const Dataset& dataset, std::span<const int> labels) {
    for (std::size_t r = 0; r < dataset.records.size(); ++r) out << dataset.records[r].id << ' ' << labels[r] << '\n';
}

std::vector<int> read_labels(std::istream& in, const Dataset& dataset) {
    std::unordered_map<std::string, std::size_t> row;
    for (std::size_t r = 0; r < dataset.records.size(); ++r) row.emplace(dataset.records[r].id, r);
    std::vector<int> labels(dataset.records.size(), 0);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto space = line.find_last_of(' ');
        if (space == std::string::npos) throw DatasetError(line_no, "expected 'sample_id floor'");
        auto it = row.find(line.substr(0, space));
        if (it == row.end()) throw DatasetError(line_no, "unknown sample id " + line.substr(0, space));
        try {
            labels[it->second] = std::stoi(line.substr(space + 1));
        } catch (const std::exception&) {
            throw DatasetError(line_no, "bad floor label");
        }
    }
    for (std::size_t r = 0; r < labels.size(); ++r) {
        if (labels[r] < 1 || labels[r] > dataset.floor_count) {
            throw ValidationError("missing or out-of-range label for sample " + dataset.records[r].id);
        }
    }
    return labels;
}

namespace {

ordered_json config_object(const PipelineConfig& c) {
    const auto g = c.effective_gnn();
    ordered_json gnn{{"dim", g.dim},
                     {"hops", g.hops},
                     {"fanout", g.fanout},
                     {"walk_length", g.walk_length},
                     {"walks_per_node", g.walks_per_node},
                     {"negatives", g.negatives},
                     {"epochs", g.epochs},
                     {"batch_size", g.batch_size},
                     {"learning_rate", g.learning_rate},
                     {"optimizer", g.optimizer == Optimizer::Adam ? "adam" : "sgd"},
                     {"aggregator", to_string(g.aggregator)},
                     {"walk_law", g.walk_law == WalkLaw::Weighted ? "weighted" : "uniform"},
                     {"train_inputs", g.train_inputs}};
    return ordered_json{{"dataset", c.dataset.string()},
                        {"floor_count", c.floor_count},
                        {"mode", to_string(c.mode)},
                        {"gnn", gnn},
                        {"clustering", to_string(c.clustering)},
                        {"similarity", to_string(c.similarity)},
                        {"solver", to_string(c.solver)},
                        {"restarts", c.restarts},
                        {"rss_offset", c.rss_offset},
                        {"min_floor_samples", c.min_floor_samples ? ordered_json(*c.min_floor_samples) : ordered_json()},
                        {"seed", c.seed},
                        {"threads", c.threads},
                        {"deterministic", c.deterministic}};
}

ordered_json metrics_object(const MetricsReport& m) {
    ordered_json table = ordered_json::array();
    for (const auto& row : m.table.counts) table.push_back(row);
    ordered_json out{{"ari", m.ari},
                     {"nmi", m.nmi},
                     {"edit_distance", m.edit_distance ? ordered_json(*m.edit_distance) : ordered_json()},
                     {"contingency_table",
                      {{"predicted_floors", m.table.row_labels}, {"true_floors", m.table.col_labels}, {"counts", table}}}};
    if (m.sequence) out["sequence"] = {{"predicted", m.sequence->predicted}, {"truth", m.sequence->truth}};
    return out;
}

ordered_json index_object(const IndexResult& index) {
    ordered_json ordering = ordered_json::array();
    for (auto c : index.ordering.clusters) ordering.push_back(c + 1);
    ordered_json sim = ordered_json::array();
    for (Eigen::Index i = 0; i < index.similarity.rows(); ++i) {
        std::vector<double> row(static_cast<std::size_t>(index.similarity.cols()));
        for (Eigen::Index j = 0; j < index.similarity.cols(); ++j) row[static_cast<std::size_t>(j)] = index.similarity(i, j);
        sim.push_back(row);
    }
    return ordered_json{{"ordering", ordering},
                        {"path_cost", index.ordering.cost},
                        {"similarity_sum", index.ordering.similarity_sum},
                        {"solver", index.ordering.solver},
                        {"similarity", sim},
                        {"warnings", index.ordering.warnings}};
}

// Prefixes the stage name while keeping the error type (and so the exit status).
template <typename F>
auto with_stage(const std::string& stage, F&& f) {
    const auto tag = [&](const std::exception& e) { return stage + " stage: " + e.what(); };
    try {
        return f();
    } catch (const MiddleFloorAnchorError& e) {
        throw MiddleFloorAnchorError(tag(e));
    } catch (const AmbiguousOrientationError& e) {
        throw AmbiguousOrientationError(tag(e));
    } catch (const NumericError& e) {
        throw NumericError(tag(e));
    } catch (const ValidationError& e) {
        throw ValidationError(tag(e));
    }
}

template <typename F>
auto timed(std::map<std::string, double>& seconds, const std::string& stage, F&& f) {
    const auto start = std::chrono::steady_clock::now();
    auto result = with_stage(stage, std::forward<F>(f));
    seconds[stage] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return result;
}

template <typename F>
void write_file(const std::filesystem::path& path, F&& body) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write " + path.string());
    body(out);
}

}  // namespace

std::string config_json(const PipelineConfig& config) { return config_object(config).dump(2); }
std::string metrics_json(const MetricsReport& metrics) { return metrics_object(metrics).dump(2); }
std::string index_json(const IndexResult& index) { return index_object(index).dump(2); }

std::string report_json(const RunReport& report) {
    ordered_json paths = ordered_json::object();
    for (const auto& [name, path] : report.artifacts) paths[name] = path.string();
    ordered_json j{{"config", config_object(report.config)},
                   {"seconds", report.seconds},
                   {"artifacts", paths},
                   {"epoch_losses", report.epoch_losses},
                   {"cluster_sizes", report.clustering.sizes()},
                   {"index", index_object(report.index)},
                   {"metrics", report.metrics ? metrics_object(*report.metrics) : ordered_json()},
                   {"warnings", report.warnings}};
    return j.dump(2);
}

RunReport run_pipeline(const Dataset& dataset, const PipelineConfig& config) {
    config.validate();
    RunReport report;
    report.config = config;
    report.config.floor_count = dataset.floor_count;
    if (config.mode == AnchorMode::Arbitrary) {
        with_stage("index", [&] {
            check_anchor_floor(*dataset.anchor().floor, dataset.floor_count);
            return 0;
        });
    }

    auto trained = timed(report.seconds, "embed", [&] { return embed_stage(dataset, report.config); });
    report.epoch_losses = trained.epoch_losses;
    report.embeddings = std::move(trained.embeddings);
    report.clustering = timed(report.seconds, "cluster", [&] { return cluster_stage(dataset, report.embeddings, report.config); });
    report.index = timed(report.seconds, "index", [&] {
        return index_stage(dataset, report.clustering, report.embeddings, report.config);
    });
    report.metrics = timed(report.seconds, "eval", [&] { return eval_stage(dataset, report.index.labels); });
    report.warnings = report.index.ordering.warnings;
    if (report.metrics && !report.metrics->edit_distance) {
        report.warnings.emplace_back("two clusters share a majority floor; edit distance is undefined");
    }

    if (!config.output_dir.empty()) {
        const auto& dir = config.output_dir;
        std::filesystem::create_directories(dir);
        report.artifacts = {{"embeddings", dir / "embeddings.txt"}, {"training_log", dir / "training_log.txt"},
                            {"clusters", dir / "clusters.txt"},     {"labels", dir / "labels.txt"},
                            {"report", dir / "report.json"}};
        write_file(report.artifacts["embeddings"], [&](std::ostream& o) { write_embeddings(o, report.embeddings); });
        write_file(report.artifacts["training_log"], [&](std::ostream& o) { write_training_log(o, report.epoch_losses); });
        write_file(report.artifacts["clusters"], [&](std::ostream& o) { write_assignment(o, report.clustering, dataset); });
        write_file(report.artifacts["labels"], [&](std::ostream& o) { write_labels(o, dataset, report.index.labels); });
        write_file(report.artifacts["report"], [&](std::ostream& o) { o << report_json(report) << '\n'; });
    }
    return report;
}

RunReport run_pipeline(const PipelineConfig& config) {
    config.validate();
    return run_pipeline(with_stage("ingest", [&] { return load_for(config); }), config);
}

}  // namespace floorid
