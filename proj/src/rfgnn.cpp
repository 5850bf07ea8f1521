#include "floorid/rfgnn.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <exception>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <unordered_map>

#include "floorid/errors.hpp"

namespace floorid {

namespace {

enum Stream : std::uint64_t { kInitStream = 1, kWalkStream = 2, kTrainStream = 3, kEmbedStream = 4 };

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }
double logistic(double x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

std::vector<double> cumulative(std::span<const double> weights) {
    std::vector<double> cdf(weights.size());
    std::partial_sum(weights.begin(), weights.end(), cdf.begin());
    return cdf;
}

std::size_t draw_index(std::span<const double> cdf, Rng& rng) {
    std::uniform_real_distribution<double> unit(0.0, cdf.back());
    const double u = unit(rng);
    auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    return std::min(static_cast<std::size_t>(it - cdf.begin()), cdf.size() - 1);
}

// Intermediate values of one block kept for the backward pass.
struct LayerCache {
    RowMatrix concat;  // [self | aggregate]
    RowMatrix pre;     // W * concat
    RowMatrix out;     // normalised activation
    Eigen::VectorXd norm;
    std::vector<bool> guarded;
};

// Runs body(i) for i in [0, n) over up to `threads` workers in contiguous chunks.
template <typename Body>
void parallel_for(std::size_t n, int threads, Body body) {
    const auto workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(threads, 1)));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    const std::size_t chunk = (n + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (std::size_t i = w * chunk; i < std::min(n, (w + 1) * chunk); ++i) body(i);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

bool hidden_layer(std::size_t k, std::size_t hops) { return k + 1 < hops; }

std::vector<LayerCache> forward_layers(const GnnModel& model, const ComputationPlan& plan) {
    const int d = model.config.dim;
    const std::size_t hops = plan.blocks.size();
    std::vector<LayerCache> caches(hops);

    RowMatrix prev(static_cast<Eigen::Index>(plan.inputs.size()), d);
    for (std::size_t r = 0; r < plan.inputs.size(); ++r) prev.row(static_cast<Eigen::Index>(r)) = model.inputs.row(plan.inputs[r]);

    for (std::size_t k = 0; k < hops; ++k) {
        const auto& block = plan.blocks[k];
        auto& cache = caches[k];
        const auto n = static_cast<Eigen::Index>(block.dst.size());
        cache.concat.setZero(n, 2 * d);
        for (Eigen::Index r = 0; r < n; ++r) {
            cache.concat.row(r).head(d) = prev.row(block.self[r]);
            for (auto e = block.nbr_offsets[r]; e < block.nbr_offsets[r + 1]; ++e) {
                cache.concat.row(r).tail(d) += block.coef[e] * prev.row(block.nbr[e]);
            }
        }
        cache.pre = cache.concat * model.weights[k].transpose();
        cache.out = hidden_layer(k, hops) ? RowMatrix(cache.pre.cwiseMax(0.0)) : cache.pre;
        cache.norm.resize(n);
        cache.guarded.assign(static_cast<std::size_t>(n), false);
        for (Eigen::Index r = 0; r < n; ++r) {
            const double norm = cache.out.row(r).norm();
            cache.norm[r] = norm;
            if (norm < kZeroGuardNorm) {
                cache.guarded[static_cast<std::size_t>(r)] = true;
                cache.out.row(r).setZero();
                cache.out(r, 0) = 1.0;
            } else {
                cache.out.row(r) /= norm;
            }
        }
        prev = cache.out;
    }
    return caches;
}

}  // namespace

void GnnConfig::validate() const {
    if (dim < 2) throw ValidationError("embedding dimension must be >= 2");
    if (hops < 1) throw ValidationError("hops must be >= 1");
    if (fanout.size() != static_cast<std::size_t>(hops)) throw ValidationError("fanout length must equal hops");
    for (int f : fanout) {
        if (f < 1) throw ValidationError("fanout entries must be >= 1");
    }
    if (walk_length < 1) throw ValidationError("walk length must be >= 1");
    if (walks_per_node < 1) throw ValidationError("walks per node must be >= 1");
    if (negatives < 1) throw ValidationError("negatives per pair must be >= 1");
    if (epochs < 0) throw ValidationError("epochs must be >= 0");
    if (batch_size < 1) throw ValidationError("batch size must be >= 1");
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw ValidationError("learning rate must be positive");
}

Rng stream_rng(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
    const std::uint64_t a = splitmix64(seed);
    const std::uint64_t b = splitmix64(a ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
    return Rng(splitmix64(b ^ splitmix64(index + 0x85ebca6b)));
}

std::vector<double> sampling_probabilities(std::span<const double> weights) {
    const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
    std::vector<double> p(weights.size());
    for (std::size_t i = 0; i < weights.size(); ++i) p[i] = weights[i] / total;
    return p;
}

NeighborSampler::NeighborSampler(const BipartiteGraph& graph, WalkLaw law) : graph_(&graph), law_(law) {
    cdf_.reserve(2 * graph.edge_count());
    for (NodeId v = 0; v < graph.node_count(); ++v) {
        auto c = cumulative(graph.weights(v));
        cdf_.insert(cdf_.end(), c.begin(), c.end());
    }
}

std::size_t NeighborSampler::draw_edge(NodeId node, Rng& rng) const {
    auto nbrs = graph_->neighbors(node);
    if (nbrs.empty()) throw std::logic_error("cannot sample neighbours of an isolated node");
    if (law_ == WalkLaw::Uniform) {
        std::uniform_int_distribution<std::size_t> pick(0, nbrs.size() - 1);
        return pick(rng);
    }
    const std::size_t offset = static_cast<std::size_t>(nbrs.data() - graph_->neighbors(0).data());
    return draw_index(std::span<const double>(cdf_.data() + offset, nbrs.size()), rng);
}

NodeId NeighborSampler::draw(NodeId node, Rng& rng) const { return graph_->neighbors(node)[draw_edge(node, rng)]; }

std::vector<NodeId> NeighborSampler::sample(NodeId node, int count, Rng& rng) const {
    std::vector<NodeId> out(static_cast<std::size_t>(count));
    for (auto& u : out) u = draw(node, rng);
    return out;
}

NegativeSampler::NegativeSampler(const BipartiteGraph& graph) {
    std::vector<double> w(graph.node_count());
    for (NodeId v = 0; v < graph.node_count(); ++v) w[v] = std::pow(static_cast<double>(graph.degree(v)), 0.75);
    cdf_ = cumulative(w);
}

NodeId NegativeSampler::draw(Rng& rng) const { return static_cast<NodeId>(draw_index(cdf_, rng)); }

double NegativeSampler::probability(NodeId node) const {
    const double lo = node == 0 ? 0.0 : cdf_[node - 1];
    return (cdf_[node] - lo) / cdf_.back();
}

std::vector<double> aggregation_coefficients(const BipartiteGraph& graph, NodeId target,
                                             std::span<const NodeId> sampled, Aggregator kind) {
    std::vector<double> coef(sampled.size(), 1.0 / static_cast<double>(sampled.size()));
    if (kind == Aggregator::Uniform) return coef;
    double total = 0.0;
    for (std::size_t t = 0; t < sampled.size(); ++t) {
        auto w = graph.edge_weight(target, sampled[t]);
        if (!w) throw std::invalid_argument("sampled node is not a neighbour of the target");
        coef[t] = *w;
        total += *w;
    }
    for (auto& c : coef) c /= total;
    return coef;
}

Vec aggregate_weighted(const BipartiteGraph& graph, NodeId target, std::span<const NodeId> sampled,
                       std::span<const Vec> reps) {
    if (sampled.empty() || sampled.size() != reps.size()) throw std::invalid_argument("need one rep per draw");
    const auto coef = aggregation_coefficients(graph, target, sampled, Aggregator::Weighted);
    Vec out = Vec::Zero(reps[0].size());
    for (std::size_t t = 0; t < reps.size(); ++t) out += coef[t] * reps[t];
    return out;
}

Vec aggregate_uniform(std::span<const Vec> reps) {
    if (reps.empty()) throw std::invalid_argument("need at least one rep");
    Vec out = Vec::Zero(reps[0].size());
    for (const auto& r : reps) out += r;
    return out / static_cast<double>(reps.size());
}

GnnModel GnnModel::initialize(const BipartiteGraph& graph, const GnnConfig& config) {
    config.validate();
    GnnModel model;
    model.config = config;
    Rng rng = stream_rng(config.seed, kInitStream);
    const int d = config.dim;
    std::normal_distribution<double> gauss(0.0, 1.0 / std::sqrt(static_cast<double>(d)));
    model.inputs.resize(static_cast<Eigen::Index>(graph.node_count()), d);
    for (Eigen::Index i = 0; i < model.inputs.size(); ++i) model.inputs.data()[i] = gauss(rng);
    const double limit = std::sqrt(6.0 / (3.0 * d));
    std::uniform_real_distribution<double> glorot(-limit, limit);
    for (int k = 0; k < config.hops; ++k) {
        Eigen::MatrixXd w(d, 2 * d);
        for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = glorot(rng);
        model.weights.push_back(std::move(w));
    }
    return model;
}

bool GnnModel::finite() const {
    if (!inputs.allFinite()) return false;
    return std::all_of(weights.begin(), weights.end(), [](const auto& w) { return w.allFinite(); });
}

ComputationPlan plan_computation(const BipartiteGraph& graph, const NeighborSampler& sampler,
                                 std::span<const NodeId> targets, const GnnConfig& config, Rng& rng) {
    const auto hops = static_cast<std::size_t>(config.hops);
    ComputationPlan plan;
    plan.blocks.resize(hops);

    std::vector<NodeId> level;
    std::unordered_map<NodeId, std::uint32_t> pos;
    for (NodeId t : targets) {
        if (pos.emplace(t, static_cast<std::uint32_t>(level.size())).second) level.push_back(t);
    }

    for (std::size_t k = hops; k-- > 0;) {
        auto& block = plan.blocks[k];
        block.dst = level;
        const int count = config.fanout[hops - 1 - k];
        // The level below starts as a copy of this one, so self[r] == r.
        std::vector<NodeId> below = level;
        block.nbr_offsets.push_back(0);
        for (std::uint32_t r = 0; r < block.dst.size(); ++r) {
            block.self.push_back(r);
            const NodeId node = block.dst[r];
            const auto nbrs = graph.neighbors(node);
            const auto weights = graph.weights(node);
            const std::size_t first = block.nbr.size();
            double total = 0.0;
            for (int t = 0; t < count; ++t) {
                const std::size_t e = sampler.draw_edge(node, rng);
                auto [it, inserted] = pos.emplace(nbrs[e], static_cast<std::uint32_t>(below.size()));
                if (inserted) below.push_back(nbrs[e]);
                block.nbr.push_back(it->second);
                const double c = config.aggregator == Aggregator::Weighted ? weights[e] : 1.0;
                block.coef.push_back(c);
                total += c;
            }
            for (std::size_t e = first; e < block.coef.size(); ++e) block.coef[e] /= total;
            block.nbr_offsets.push_back(static_cast<std::uint32_t>(block.nbr.size()));
        }
        level = std::move(below);
    }
    plan.inputs = std::move(level);
    return plan;
}

ForwardResult forward(const GnnModel& model, const ComputationPlan& plan) {
    auto caches = forward_layers(model, plan);
    return {std::move(caches.back().out), std::move(caches.back().guarded)};
}

namespace {
NeighborSampler plan_sampler(const BipartiteGraph& graph, const GnnConfig& config) {
    return NeighborSampler(graph, config.aggregator == Aggregator::Weighted ? WalkLaw::Weighted : WalkLaw::Uniform);
}
}  // namespace

Vec forward(const GnnModel& model, const BipartiteGraph& graph, NodeId node, Rng& rng) {
    const auto sampler = plan_sampler(graph, model.config);
    const NodeId target[] = {node};
    const auto plan = plan_computation(graph, sampler, target, model.config, rng);
    return forward(model, plan).outputs.row(0).transpose();
}

std::vector<Walk> generate_walks(const BipartiteGraph& graph, const GnnConfig& config) {
    const NeighborSampler sampler(graph, config.walk_law);
    const auto per_node = static_cast<std::size_t>(config.walks_per_node);
    std::vector<Walk> walks(graph.node_count() * per_node);
    parallel_for(graph.node_count(), config.threads, [&](std::size_t start) {
        Rng rng = stream_rng(config.seed, kWalkStream, start);
        for (std::size_t w = 0; w < per_node; ++w) {
            Walk walk{static_cast<NodeId>(start)};
            for (int step = 0; step < config.walk_length; ++step) walk.push_back(sampler.draw(walk.back(), rng));
            walks[start * per_node + w] = std::move(walk);
        }
    });
    return walks;
}

std::vector<std::pair<NodeId, NodeId>> walk_pairs(std::span<const Walk> walks) {
    std::vector<std::pair<NodeId, NodeId>> pairs;
    for (const auto& walk : walks) {
        for (std::size_t a = 0; a < walk.size(); ++a) {
            for (std::size_t b = a + 1; b < walk.size(); ++b) {
                if (walk[a] != walk[b]) pairs.emplace_back(walk[a], walk[b]);
            }
        }
    }
    return pairs;
}

PairBatch draw_negatives(std::span<const std::pair<NodeId, NodeId>> pairs, int tau,
                         const NegativeSampler& sampler, Rng& rng) {
    PairBatch batch;
    batch.pairs.assign(pairs.begin(), pairs.end());
    batch.negatives.reserve(pairs.size() * static_cast<std::size_t>(tau));
    for (std::size_t p = 0; p < pairs.size() * static_cast<std::size_t>(tau); ++p) {
        batch.negatives.push_back(sampler.draw(rng));
    }
    return batch;
}

ComputationPlan plan_for_batch(const BipartiteGraph& graph, const NeighborSampler& sampler,
                               const PairBatch& batch, const GnnConfig& config, Rng& rng) {
    std::vector<NodeId> targets;
    targets.reserve(2 * batch.pairs.size() + batch.negatives.size());
    for (const auto& [i, j] : batch.pairs) {
        targets.push_back(i);
        targets.push_back(j);
    }
    targets.insert(targets.end(), batch.negatives.begin(), batch.negatives.end());
    return plan_computation(graph, sampler, targets, config, rng);
}

LossResult loss_and_grad(const GnnModel& model, const PairBatch& batch, const ComputationPlan& plan) {
    if (batch.pairs.empty()) throw std::invalid_argument("empty batch");
    const int d = model.config.dim;
    const std::size_t tau = batch.negatives.size() / batch.pairs.size();
    if (tau * batch.pairs.size() != batch.negatives.size()) throw std::invalid_argument("ragged negatives");

    auto caches = forward_layers(model, plan);
    const RowMatrix& out = caches.back().out;
    std::unordered_map<NodeId, Eigen::Index> row;
    for (std::size_t r = 0; r < plan.targets().size(); ++r) row.emplace(plan.targets()[r], static_cast<Eigen::Index>(r));

    const double scale = 1.0 / static_cast<double>(batch.pairs.size());
    RowMatrix grad_out = RowMatrix::Zero(out.rows(), d);
    double loss = 0.0;
    for (std::size_t p = 0; p < batch.pairs.size(); ++p) {
        const Eigen::Index i = row.at(batch.pairs[p].first);
        const Eigen::Index j = row.at(batch.pairs[p].second);
        const double s = out.row(i).dot(out.row(j));
        loss += softplus(-s);
        const double gs = -logistic(-s) * scale;
        grad_out.row(i) += gs * out.row(j);
        grad_out.row(j) += gs * out.row(i);
        for (std::size_t t = 0; t < tau; ++t) {
            const Eigen::Index z = row.at(batch.negatives[p * tau + t]);
            const double sn = out.row(i).dot(out.row(z));
            loss += softplus(sn);
            const double gn = logistic(sn) * scale;
            grad_out.row(i) += gn * out.row(z);
            grad_out.row(z) += gn * out.row(i);
        }
    }

    LossResult result;
    result.loss = loss * scale;
    result.grad.weights.resize(plan.blocks.size());

    RowMatrix grad = std::move(grad_out);
    for (std::size_t k = plan.blocks.size(); k-- > 0;) {
        const auto& block = plan.blocks[k];
        const auto& cache = caches[k];
        const Eigen::Index n = cache.out.rows();
        // Through the l2 normalisation; guarded rows are constant.
        RowMatrix grad_pre(n, d);
        for (Eigen::Index r = 0; r < n; ++r) {
            if (cache.guarded[static_cast<std::size_t>(r)]) {
                grad_pre.row(r).setZero();
                continue;
            }
            const double proj = cache.out.row(r).dot(grad.row(r));
            grad_pre.row(r) = (grad.row(r) - proj * cache.out.row(r)) / cache.norm[r];
        }
        if (hidden_layer(k, plan.blocks.size())) {
            grad_pre = grad_pre.cwiseProduct(RowMatrix((cache.pre.array() > 0.0).cast<double>()));
        }
        result.grad.weights[k] = grad_pre.transpose() * cache.concat;
        const RowMatrix grad_concat = grad_pre * model.weights[k];

        const std::size_t below = k == 0 ? plan.inputs.size() : plan.blocks[k - 1].dst.size();
        RowMatrix grad_below = RowMatrix::Zero(static_cast<Eigen::Index>(below), d);
        for (Eigen::Index r = 0; r < n; ++r) {
            grad_below.row(block.self[r]) += grad_concat.row(r).head(d);
            for (auto e = block.nbr_offsets[r]; e < block.nbr_offsets[r + 1]; ++e) {
                grad_below.row(block.nbr[e]) += block.coef[e] * grad_concat.row(r).tail(d);
            }
        }
        grad = std::move(grad_below);
    }

    result.grad.inputs = RowMatrix::Zero(model.inputs.rows(), d);
    if (model.config.train_inputs) {
        for (std::size_t r = 0; r < plan.inputs.size(); ++r) {
            result.grad.inputs.row(plan.inputs[r]) += grad.row(static_cast<Eigen::Index>(r));
        }
    }
    return result;
}

LossResult loss_and_grad(const GnnModel& model, const BipartiteGraph& graph,
                         std::span<const std::pair<NodeId, NodeId>> pairs, Rng& rng) {
    const auto sampler = plan_sampler(graph, model.config);
    const NegativeSampler negatives(graph);
    const auto batch = draw_negatives(pairs, model.config.negatives, negatives, rng);
    const auto plan = plan_for_batch(graph, sampler, batch, model.config, rng);
    return loss_and_grad(model, batch, plan);
}

RowMatrix EmbeddingTable::sample_rows() const {
    return rows.bottomRows(rows.rows() - static_cast<Eigen::Index>(mac_count));
}

EmbeddingTable embed_all(const GnnModel& model, const BipartiteGraph& graph) {
    const auto sampler = plan_sampler(graph, model.config);
    EmbeddingTable table;
    table.mac_count = graph.mac_count();
    table.rows.resize(static_cast<Eigen::Index>(graph.node_count()), model.config.dim);
    table.guarded.assign(graph.node_count(), false);
    std::vector<char> guarded(graph.node_count(), 0);
    parallel_for(graph.node_count(), model.config.threads, [&](std::size_t v) {
        Rng rng = stream_rng(model.config.seed, kEmbedStream, v);
        const NodeId target[] = {static_cast<NodeId>(v)};
        const auto plan = plan_computation(graph, sampler, target, model.config, rng);
        auto result = forward(model, plan);
        table.rows.row(static_cast<Eigen::Index>(v)) = result.outputs.row(0);
        guarded[v] = result.guarded[0];
    });
    for (std::size_t v = 0; v < guarded.size(); ++v) table.guarded[v] = guarded[v] != 0;
    return table;
}

namespace {

class AdamState {
public:
    AdamState(const GnnModel& model, const GnnConfig& config) : config_(config) {
        m_inputs_ = RowMatrix::Zero(model.inputs.rows(), model.inputs.cols());
        v_inputs_ = m_inputs_;
        for (const auto& w : model.weights) {
            m_weights_.push_back(Eigen::MatrixXd::Zero(w.rows(), w.cols()));
            v_weights_.push_back(Eigen::MatrixXd::Zero(w.rows(), w.cols()));
        }
    }

    void step(GnnModel& model, const Gradients& grad) {
        ++t_;
        const double lr = config_.learning_rate;
        if (config_.optimizer == Optimizer::Sgd) {
            if (config_.train_inputs) model.inputs -= lr * grad.inputs;
            for (std::size_t k = 0; k < model.weights.size(); ++k) model.weights[k] -= lr * grad.weights[k];
            return;
        }
        const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(t_));
        const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(t_));
        auto update = [&](auto& param, auto& m, auto& v, const auto& g) {
            m = kBeta1 * m + (1.0 - kBeta1) * g;
            v = kBeta2 * v + (1.0 - kBeta2) * g.cwiseProduct(g);
            param.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + kEps);
        };
        if (config_.train_inputs) update(model.inputs, m_inputs_, v_inputs_, grad.inputs);
        for (std::size_t k = 0; k < model.weights.size(); ++k) {
            update(model.weights[k], m_weights_[k], v_weights_[k], grad.weights[k]);
        }
    }

private:
    static constexpr double kBeta1 = 0.9;
    static constexpr double kBeta2 = 0.999;
    static constexpr double kEps = 1e-8;

    GnnConfig config_;
    long t_ = 0;
    RowMatrix m_inputs_, v_inputs_;
    std::vector<Eigen::MatrixXd> m_weights_, v_weights_;
};

}  // namespace

TrainResult train(const BipartiteGraph& graph, const GnnConfig& config) {
    config.validate();
    TrainResult result{GnnModel::initialize(graph, config), {}, {}};
    GnnModel& model = result.model;

    const auto sampler = plan_sampler(graph, config);
    const NegativeSampler negatives(graph);
    const auto walks = generate_walks(graph, config);
    auto pairs = walk_pairs(walks);
    if (pairs.empty()) throw ValidationError("random walks produced no training pairs");

    AdamState optimizer(model, config);
    Rng rng = stream_rng(config.seed, kTrainStream);
    const auto batch_size = static_cast<std::size_t>(config.batch_size);
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        std::shuffle(pairs.begin(), pairs.end(), rng);
        double total = 0.0;
        for (std::size_t begin = 0; begin < pairs.size(); begin += batch_size) {
            const std::size_t end = std::min(pairs.size(), begin + batch_size);
            const std::span<const std::pair<NodeId, NodeId>> slice(pairs.data() + begin, end - begin);
            const auto batch = draw_negatives(slice, config.negatives, negatives, rng);
            const auto plan = plan_for_batch(graph, sampler, batch, config, rng);
            const auto step = loss_and_grad(model, batch, plan);
            if (!std::isfinite(step.loss)) {
                throw NumericError("non-finite loss at epoch " + std::to_string(epoch) + ", pair offset " +
                                   std::to_string(begin));
            }
            optimizer.step(model, step.grad);
            if (!model.finite()) {
                throw NumericError("non-finite parameters after update at epoch " + std::to_string(epoch));
            }
            total += step.loss * static_cast<double>(slice.size());
        }
        result.epoch_losses.push_back(total / static_cast<double>(pairs.size()));
    }
    result.embeddings = embed_all(model, graph);
    return result;
}

namespace {
void put_double(std::ostream& out, double x) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), x);
    out.write(buf, res.ptr - buf);
}
}  // namespace

void write_embeddings(std::ostream& out, const EmbeddingTable& table) {
    out << "floorid-embeddings " << table.node_count() << ' ' << table.dim() << ' ' << table.mac_count << '\n';
    for (Eigen::Index r = 0; r < table.rows.rows(); ++r) {
        for (Eigen::Index c = 0; c < table.rows.cols(); ++c) {
            if (c) out << ' ';
            put_double(out, table.rows(r, c));
        }
        out << '\n';
    }
}

EmbeddingTable read_embeddings(std::istream& in) {
    std::string magic;
    std::size_t nodes = 0, macs = 0;
    int dim = 0;
    if (!(in >> magic >> nodes >> dim >> macs) || magic != "floorid-embeddings" || dim < 1 || macs > nodes) {
        throw ValidationError("bad embedding header");
    }
    EmbeddingTable table;
    table.mac_count = macs;
    table.rows.resize(static_cast<Eigen::Index>(nodes), dim);
    table.guarded.assign(nodes, false);
    std::string token;
    for (Eigen::Index i = 0; i < table.rows.size(); ++i) {
        if (!(in >> token)) throw ValidationError("embedding file truncated");
        double x = 0.0;
        auto res = std::from_chars(token.data(), token.data() + token.size(), x);
        if (res.ec != std::errc() || res.ptr != token.data() + token.size()) {
            throw ValidationError("bad embedding value '" + token + "'");
        }
        table.rows.data()[i] = x;
    }
    return table;
}

void write_training_log(std::ostream& out, std::span<const double> epoch_losses) {
    for (std::size_t e = 0; e < epoch_losses.size(); ++e) {
        out << e << ' ';
        put_double(out, epoch_losses[e]);
        out << '\n';
    }
}

}  // namespace floorid
