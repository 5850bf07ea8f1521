#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "floorid/clustering.hpp"
#include "floorid/errors.hpp"
#include "floorid/ingest.hpp"
#include "floorid/pipeline.hpp"
#include "floorid/rfgnn.hpp"
#include "floorid/synth.hpp"

namespace fs = std::filesystem;
using namespace floorid;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitIndexing = 3;
constexpr int kExitNumeric = 4;

void add_dataset_options(CLI::App* cmd, PipelineConfig& cfg) {
    cmd->add_option("--dataset,-d", cfg.dataset, "Scan file (JSON Lines)")->required();
    cmd->add_option("--floors,-n", cfg.floor_count, "Number of floors N")->required();
    cmd->add_option("--mode", cfg.mode, "Anchor mode")
        ->transform(CLI::CheckedTransformer(std::map<std::string, AnchorMode>{{"bottom", AnchorMode::Bottom},
                                                                              {"arbitrary", AnchorMode::Arbitrary}},
                                            CLI::ignore_case));
    cmd->add_option("--min-floor-samples", cfg.min_floor_samples,
                    "Drop ground-truth floors with fewer records than this");
}

void add_gnn_options(CLI::App* cmd, PipelineConfig& cfg) {
    auto& g = cfg.gnn;
    cmd->add_option("--dim", g.dim, "Embedding dimension");
    cmd->add_option("--hops", g.hops, "Aggregation hops K");
    cmd->add_option("--fanout", g.fanout, "Neighbours sampled per hop (K values)");
    cmd->add_option("--walk-length", g.walk_length, "Steps per random walk");
    cmd->add_option("--walks-per-node", g.walks_per_node, "Random walks started at each node");
    cmd->add_option("--negatives", g.negatives, "Negative samples per positive pair");
    cmd->add_option("--epochs", g.epochs, "Training epochs");
    cmd->add_option("--batch-size", g.batch_size, "Positive pairs per mini-batch");
    cmd->add_option("--learning-rate", g.learning_rate, "Optimizer step size");
    cmd->add_option("--optimizer", g.optimizer, "adam or sgd")
        ->transform(CLI::CheckedTransformer(std::map<std::string, Optimizer>{{"adam", Optimizer::Adam}, {"sgd", Optimizer::Sgd}},
                                            CLI::ignore_case));
    cmd->add_option("--aggregator", g.aggregator, "weighted or uniform")
        ->transform(CLI::CheckedTransformer(
            std::map<std::string, Aggregator>{{"weighted", Aggregator::Weighted}, {"uniform", Aggregator::Uniform}},
            CLI::ignore_case));
    cmd->add_option("--walk-law", g.walk_law, "Random-walk step law: weighted or uniform")
        ->transform(CLI::CheckedTransformer(
            std::map<std::string, WalkLaw>{{"weighted", WalkLaw::Weighted}, {"uniform", WalkLaw::Uniform}}, CLI::ignore_case));
    cmd->add_flag("!--freeze-inputs", g.train_inputs, "Keep the input embeddings at their random init");
    cmd->add_option("--rss-offset", cfg.rss_offset, "Edge weight offset c in RSS + c");
}

void add_run_options(CLI::App* cmd, PipelineConfig& cfg) {
    cmd->add_option("--seed", cfg.seed, "Seed for training, k-means and 2-opt");
    cmd->add_option("--threads", cfg.threads, "Worker threads for walks and embedding");
    cmd->add_flag("--deterministic,!--no-deterministic", cfg.deterministic, "Serialise all parallel work");
}

void add_cluster_options(CLI::App* cmd, PipelineConfig& cfg) {
    cmd->add_option("--clustering", cfg.clustering, "hierarchical or kmeans")
        ->transform(CLI::CheckedTransformer(
            std::map<std::string, ClusterMethod>{{"hierarchical", ClusterMethod::Hierarchical}, {"kmeans", ClusterMethod::KMeans}},
            CLI::ignore_case));
}

void add_index_options(CLI::App* cmd, PipelineConfig& cfg) {
    cmd->add_option("--similarity", cfg.similarity, "adapted or plain Jaccard")
        ->transform(CLI::CheckedTransformer(
            std::map<std::string, SimilarityMethod>{{"adapted", SimilarityMethod::Adapted}, {"plain", SimilarityMethod::Plain}},
            CLI::ignore_case));
    cmd->add_option("--solver", cfg.solver, "exact, two_opt or auto")
        ->transform(CLI::CheckedTransformer(std::map<std::string, SolverKind>{{"exact", SolverKind::Exact},
                                                                              {"two_opt", SolverKind::TwoOpt},
                                                                              {"auto", SolverKind::Auto}},
                                            CLI::ignore_case));
    cmd->add_option("--restarts", cfg.restarts, "2-opt random restarts");
}

template <typename F>
void write_to(const fs::path& path, F&& body) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write " + path.string());
    body(out);
}

std::ifstream open_input(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot read " + path.string());
    return in;
}

EmbeddingTable load_embeddings(const fs::path& path) {
    auto in = open_input(path);
    return read_embeddings(in);
}

Clustering load_clusters(const fs::path& path, const Dataset& dataset) {
    auto in = open_input(path);
    return read_assignment(in, dataset);
}

nlohmann::ordered_json summary_json(const DatasetSummary& s) {
    nlohmann::ordered_json per_floor = nlohmann::ordered_json::object();
    for (const auto& [floor, count] : s.records_per_floor) per_floor[std::to_string(floor)] = count;
    return {{"records", s.record_count},
            {"macs", s.mac_count},
            {"readings", s.reading_count},
            {"records_per_floor", per_floor},
            {"floor_span_histogram", s.floor_span_histogram},
            {"mean_shared_by_gap", s.mean_shared_by_gap}};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Floor identification from crowdsourced RF scans with a single labeled scan"};
    app.set_config("--config", "", "Key-value (TOML/INI) config file; command-line flags take precedence");
    app.require_subcommand(1);

    PipelineConfig cfg;
    fs::path out_dir = ".";
    fs::path embeddings_path, clusters_path, labels_path, out_file;

    BuildingSpec spec;
    std::vector<std::uint64_t> suite_seeds;
    bool with_atrium = false;
    Atrium atrium;
    auto* gen = app.add_subcommand("generate", "Write a synthetic building (or a suite of them)");
    gen->add_option("--floors,-n", spec.floors, "Number of floors");
    gen->add_option("--seed", spec.seed, "Generator seed");
    gen->add_option("--floor-height", spec.floor_height, "Metres between floors");
    gen->add_option("--width", spec.width, "Footprint width in metres");
    gen->add_option("--depth", spec.depth, "Footprint depth in metres");
    gen->add_option("--aps-per-floor", spec.aps_per_floor, "Access points per floor");
    gen->add_option("--samples-per-floor", spec.samples_per_floor, "Scans per floor");
    gen->add_option("--tx-power", spec.tx_power, "RSS at 1 m in dBm");
    gen->add_option("--path-loss-exponent", spec.path_loss_exponent, "Log-distance exponent");
    gen->add_option("--floor-attenuation", spec.floor_attenuation, "dB lost per floor crossed");
    gen->add_option("--noise-sigma", spec.noise_sigma, "Gaussian RSS noise in dB");
    gen->add_option("--detect-threshold", spec.detect_threshold, "Weakest detectable RSS in dBm");
    gen->add_option("--anchor-floor", spec.anchor_floor, "Floor of the labeled scan");
    gen->add_flag("--atrium", with_atrium, "Add an open atrium with no floor attenuation");
    gen->add_option("--atrium-radius", atrium.radius, "Atrium radius in metres");
    gen->add_option("--out,-o", out_file, "Output JSON Lines file");
    gen->add_option("--suite-dir", out_dir, "Write one file per seed plus manifest.json here");
    gen->add_option("--suite-seeds", suite_seeds, "Seeds for --suite-dir");

    auto* sum = app.add_subcommand("summarize", "Print dataset statistics as JSON");
    add_dataset_options(sum, cfg);

    auto* embed = app.add_subcommand("embed", "Train the GNN and write node embeddings");
    add_dataset_options(embed, cfg);
    add_gnn_options(embed, cfg);
    add_run_options(embed, cfg);
    embed->add_option("--out,-o", out_dir, "Output directory");

    auto* cluster = app.add_subcommand("cluster", "Cluster sample embeddings into floors");
    add_dataset_options(cluster, cfg);
    add_cluster_options(cluster, cfg);
    cluster->add_option("--seed", cfg.seed, "k-means seed");
    cluster->add_option("--embeddings", embeddings_path, "Embedding file from 'embed'")->required();
    cluster->add_option("--out,-o", out_dir, "Output directory");

    auto* index = app.add_subcommand("index", "Order clusters into floors and label every scan");
    add_dataset_options(index, cfg);
    add_index_options(index, cfg);
    index->add_option("--seed", cfg.seed, "2-opt seed");
    index->add_option("--embeddings", embeddings_path, "Embedding file from 'embed'")->required();
    index->add_option("--clusters", clusters_path, "Assignment file from 'cluster'")->required();
    index->add_option("--out,-o", out_dir, "Output directory");

    auto* eval = app.add_subcommand("eval", "Score floor labels against ground truth");
    add_dataset_options(eval, cfg);
    eval->add_option("--labels", labels_path, "Label file from 'index' or 'run'")->required();
    eval->add_option("--out,-o", out_file, "Write the metrics JSON here instead of stdout");

    auto* run = app.add_subcommand("run", "Run every stage end to end");
    add_dataset_options(run, cfg);
    add_gnn_options(run, cfg);
    add_run_options(run, cfg);
    add_cluster_options(run, cfg);
    add_index_options(run, cfg);
    run->add_option("--out,-o", out_dir, "Output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitValidation;
    }

    try {
        if (*gen) {
            if (with_atrium) spec.atrium = atrium;
            if (!suite_seeds.empty()) {
                const auto entries = generate_suite({spec}, suite_seeds, out_dir);
                std::cout << "wrote " << entries.size() << " datasets and manifest.json to " << out_dir.string() << '\n';
            } else {
                if (out_file.empty()) throw ValidationError("generate needs --out or --suite-seeds");
                save_dataset(out_file, generate(spec));
            }
            return 0;
        }

        if (*sum) {
            const auto dataset = load_for(cfg);
            std::cout << summary_json(summarize(dataset, dataset.fully_labeled())).dump(2) << '\n';
            return 0;
        }

        if (*run) {
            cfg.output_dir = out_dir;
            const auto report = run_pipeline(cfg);
            for (const auto& w : report.warnings) std::cerr << "warning: " << w << '\n';
            if (report.metrics) std::cout << metrics_json(*report.metrics) << '\n';
            return 0;
        }

        cfg.validate();
        const auto dataset = load_for(cfg);

        if (*embed) {
            fs::create_directories(out_dir);
            const auto trained = embed_stage(dataset, cfg);
            write_to(out_dir / "embeddings.txt", [&](std::ostream& o) { write_embeddings(o, trained.embeddings); });
            write_to(out_dir / "training_log.txt", [&](std::ostream& o) { write_training_log(o, trained.epoch_losses); });
            write_to(out_dir / "config.json", [&](std::ostream& o) { o << config_json(cfg) << '\n'; });
        } else if (*cluster) {
            const auto clustering = cluster_stage(dataset, load_embeddings(embeddings_path), cfg);
            write_to(out_dir / "clusters.txt", [&](std::ostream& o) { write_assignment(o, clustering, dataset); });
        } else if (*index) {
            const auto embeddings = load_embeddings(embeddings_path);
            auto clustering = load_clusters(clusters_path, dataset);
            if (cfg.mode == AnchorMode::Arbitrary) clustering.assignment[dataset.anchor_index()] = kHeldOut;
            const auto result = index_stage(dataset, clustering, embeddings, cfg);
            for (const auto& w : result.ordering.warnings) std::cerr << "warning: " << w << '\n';
            write_to(out_dir / "labels.txt", [&](std::ostream& o) { write_labels(o, dataset, result.labels); });
            write_to(out_dir / "index.json", [&](std::ostream& o) { o << index_json(result) << '\n'; });
        } else if (*eval) {
            auto in = open_input(labels_path);
            const auto labels = read_labels(in, dataset);
            const auto metrics = eval_stage(dataset, labels);
            if (!metrics) throw ValidationError("eval needs a ground-truth floor on every record");
            if (out_file.empty()) {
                std::cout << metrics_json(*metrics) << '\n';
            } else {
                write_to(out_file, [&](std::ostream& o) { o << metrics_json(*metrics) << '\n'; });
            }
        }
        return 0;
    } catch (const IndexingError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitIndexing;
    } catch (const NumericError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitNumeric;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const DegenerateMappingError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
