#pragma once

// Attention-weighted GraphSAGE-style encoder for the scan/MAC bipartite graph.
//
// Neighbours are drawn with probability proportional to edge weight
// (RSS + c) and aggregated with the same weights renormalised over the
// drawn multiset. Each hop concatenates the node's previous representation
// with the aggregate, applies W^k, an activation, and l2 normalisation.
// Training is unsupervised: node pairs that co-occur on short random walks
// are pulled together, and tau degree^0.75 negatives per pair are pushed apart.
// Gradients are derived by hand for exactly this architecture.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "floorid/graph.hpp"

namespace floorid {

using Rng = std::mt19937_64;
using Vec = Eigen::VectorXd;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class Aggregator { Weighted, Uniform };
enum class WalkLaw { Weighted, Uniform };
enum class Optimizer { Adam, Sgd };

inline constexpr double kZeroGuardNorm = 1e-12;

struct GnnConfig {
    int dim = 32;
    int hops = 2;
    std::vector<int> fanout{10, 10};  // fanout[0] is drawn around the target itself
    int walk_length = 5;              // steps per walk, so walk_length + 1 visited nodes
    int walks_per_node = 20;
    int negatives = 4;                // tau
    int epochs = 10;
    int batch_size = 512;
    double learning_rate = 1e-2;
    Optimizer optimizer = Optimizer::Adam;
    Aggregator aggregator = Aggregator::Weighted;
    WalkLaw walk_law = WalkLaw::Weighted;
    bool train_inputs = true;  // false keeps r^0 frozen at its random init
    int threads = 1;           // walk generation and embedding; results do not depend on it
    std::uint64_t seed = 1;

    // Throws ValidationError on inconsistent settings.
    void validate() const;
};

// Derives an independent generator for (seed, stream, index); used so that
// per-node work yields the same draws no matter how it is scheduled.
Rng stream_rng(std::uint64_t seed, std::uint64_t stream, std::uint64_t index = 0);

// Pr(u) = w_u / sum(w) over the given edge weights.
std::vector<double> sampling_probabilities(std::span<const double> weights);

// Draws neighbours of a node with probability proportional to edge weight.
class NeighborSampler {
public:
    explicit NeighborSampler(const BipartiteGraph& graph, WalkLaw law = WalkLaw::Weighted);

    NodeId draw(NodeId node, Rng& rng) const;
    // Position of the drawn neighbour within graph.neighbors(node).
    std::size_t draw_edge(NodeId node, Rng& rng) const;
    // `count` independent draws with replacement. Throws on isolated nodes.
    std::vector<NodeId> sample(NodeId node, int count, Rng& rng) const;

private:
    const BipartiteGraph* graph_;
    WalkLaw law_;
    std::vector<double> cdf_;  // per-node cumulative weights, laid out like the CSR
};

// Pr(z) proportional to degree(z)^(3/4) over every node.
class NegativeSampler {
public:
    explicit NegativeSampler(const BipartiteGraph& graph);

    NodeId draw(Rng& rng) const;
    double probability(NodeId node) const;

private:
    std::vector<double> cdf_;
};

// Convex coefficients for aggregating the draws `sampled` around `target`.
// Repeated draws contribute once per occurrence.
std::vector<double> aggregation_coefficients(const BipartiteGraph& graph, NodeId target,
                                             std::span<const NodeId> sampled, Aggregator kind);

// reps[t] is the representation of sampled[t].
Vec aggregate_weighted(const BipartiteGraph& graph, NodeId target,
                       std::span<const NodeId> sampled, std::span<const Vec> reps);
Vec aggregate_uniform(std::span<const Vec> reps);

struct GnnModel {
    GnnConfig config;
    RowMatrix inputs;                      // r^0, one row per node
    std::vector<Eigen::MatrixXd> weights;  // W^1..W^K, each dim x 2*dim

    static GnnModel initialize(const BipartiteGraph& graph, const GnnConfig& config);
    bool finite() const;
};

// One layer of a sampled computation graph. Row r of this layer is node
// dst[r]; it reads its own previous representation from row self[r] of the
// layer below and aggregates rows nbr[nbr_offsets[r] .. nbr_offsets[r+1]).
struct ComputationBlock {
    std::vector<NodeId> dst;
    std::vector<std::uint32_t> self;
    std::vector<std::uint32_t> nbr_offsets;
    std::vector<std::uint32_t> nbr;
    std::vector<double> coef;
};

// Frozen neighbourhood samples for a set of target nodes. blocks[k-1]
// produces hop-k representations; blocks.back().dst lists the targets.
struct ComputationPlan {
    std::vector<NodeId> inputs;
    std::vector<ComputationBlock> blocks;

    const std::vector<NodeId>& targets() const { return blocks.back().dst; }
};

ComputationPlan plan_computation(const BipartiteGraph& graph, const NeighborSampler& sampler,
                                 std::span<const NodeId> targets, const GnnConfig& config,
                                 Rng& rng);

struct ForwardResult {
    RowMatrix outputs;           // one unit row per plan target
    std::vector<bool> guarded;   // row fell back to the e1 zero-guard vector
};

ForwardResult forward(const GnnModel& model, const ComputationPlan& plan);
// Samples a fresh K-hop neighbourhood of `node` and returns r^K.
Vec forward(const GnnModel& model, const BipartiteGraph& graph, NodeId node, Rng& rng);

using Walk = std::vector<NodeId>;
std::vector<Walk> generate_walks(const BipartiteGraph& graph, const GnnConfig& config);
// Every unordered pair of distinct nodes that share a walk, one entry per co-occurrence.
std::vector<std::pair<NodeId, NodeId>> walk_pairs(std::span<const Walk> walks);

struct PairBatch {
    std::vector<std::pair<NodeId, NodeId>> pairs;
    std::vector<NodeId> negatives;  // config.negatives per pair, pair-major
};

PairBatch draw_negatives(std::span<const std::pair<NodeId, NodeId>> pairs, int tau,
                         const NegativeSampler& sampler, Rng& rng);
ComputationPlan plan_for_batch(const BipartiteGraph& graph, const NeighborSampler& sampler,
                               const PairBatch& batch, const GnnConfig& config, Rng& rng);

struct Gradients {
    RowMatrix inputs;
    std::vector<Eigen::MatrixXd> weights;
};

struct LossResult {
    double loss = 0.0;  // mean over pairs
    Gradients grad;
};

// Negative-sampling loss and exact gradients over a frozen plan.
LossResult loss_and_grad(const GnnModel& model, const PairBatch& batch, const ComputationPlan& plan);
LossResult loss_and_grad(const GnnModel& model, const BipartiteGraph& graph,
                         std::span<const std::pair<NodeId, NodeId>> pairs, Rng& rng);

struct EmbeddingTable {
    RowMatrix rows;  // node order of the graph
    std::size_t mac_count = 0;
    std::vector<bool> guarded;

    std::size_t node_count() const { return static_cast<std::size_t>(rows.rows()); }
    int dim() const { return static_cast<int>(rows.cols()); }
    RowMatrix sample_rows() const;
};

// Fresh sampled neighbourhood per node, seeded per node from config.seed.
EmbeddingTable embed_all(const GnnModel& model, const BipartiteGraph& graph);

struct TrainResult {
    GnnModel model;
    EmbeddingTable embeddings;
    std::vector<double> epoch_losses;
};

// Throws NumericError if the loss or parameters stop being finite.
TrainResult train(const BipartiteGraph& graph, const GnnConfig& config);

void write_embeddings(std::ostream& out, const EmbeddingTable& table);
EmbeddingTable read_embeddings(std::istream& in);
void write_training_log(std::ostream& out, std::span<const double> epoch_losses);

}  // namespace floorid
