#include "floorid/graph.hpp"

#include <algorithm>
#include <ostream>
#include <stdexcept>
#include <unordered_map>

#include "floorid/errors.hpp"

namespace floorid {

void BipartiteGraph::check(NodeId node) const {
    if (node >= node_count()) {
        throw std::out_of_range("node " + std::to_string(node) + " out of range");
    }
}

NodeId BipartiteGraph::mac_node(std::size_t mac_index) const {
    if (mac_index >= macs_.size()) throw std::out_of_range("mac index out of range");
    return static_cast<NodeId>(mac_index);
}

NodeId BipartiteGraph::sample_node(std::size_t sample_index) const {
    if (sample_index >= samples_.size()) throw std::out_of_range("sample index out of range");
    return static_cast<NodeId>(macs_.size() + sample_index);
}

std::size_t BipartiteGraph::sample_index(NodeId node) const {
    check(node);
    if (!is_sample(node)) throw std::invalid_argument("node is not a sample node");
    return node - macs_.size();
}

const std::string& BipartiteGraph::name(NodeId node) const {
    check(node);
    return is_sample(node) ? samples_[node - macs_.size()] : macs_[node];
}

std::size_t BipartiteGraph::degree(NodeId node) const {
    check(node);
    return offsets_[node + 1] - offsets_[node];
}

std::span<const NodeId> BipartiteGraph::neighbors(NodeId node) const {
    check(node);
    return {neighbors_.data() + offsets_[node], offsets_[node + 1] - offsets_[node]};
}

std::span<const double> BipartiteGraph::weights(NodeId node) const {
    check(node);
    return {weights_.data() + offsets_[node], offsets_[node + 1] - offsets_[node]};
}

std::optional<double> BipartiteGraph::edge_weight(NodeId u, NodeId v) const {
    check(u);
    check(v);
    auto nbrs = neighbors(u);
    auto it = std::find(nbrs.begin(), nbrs.end(), v);
    if (it == nbrs.end()) return std::nullopt;
    return weights(u)[static_cast<std::size_t>(it - nbrs.begin())];
}

void BipartiteGraph::write_edge_list(std::ostream& out) const {
    for (std::size_t s = 0; s < samples_.size(); ++s) {
        const NodeId v = sample_node(s);
        auto nbrs = neighbors(v);
        auto ws = weights(v);
        for (std::size_t e = 0; e < nbrs.size(); ++e) {
            out << nbrs[e] << ' ' << s << ' ' << ws[e] << '\n';
        }
    }
}

BipartiteGraph build_graph(const Dataset& dataset, double c) {
    BipartiteGraph g;
    g.c_ = c;
    g.macs_ = dataset.mac_universe;
    std::unordered_map<std::string, NodeId> mac_id;
    for (std::size_t k = 0; k < g.macs_.size(); ++k) mac_id.emplace(g.macs_[k], static_cast<NodeId>(k));

    const std::size_t n_mac = g.macs_.size();
    const std::size_t n = n_mac + dataset.records.size();
    std::vector<std::size_t> degree(n, 0);
    for (std::size_t s = 0; s < dataset.records.size(); ++s) {
        const auto& record = dataset.records[s];
        g.samples_.push_back(record.id);
        for (const auto& reading : record.readings) {
            if (!(reading.rss + c > 0.0)) {
                throw ValidationError("offset c = " + std::to_string(c) +
                                      " leaves a non-positive edge weight for rss " +
                                      std::to_string(reading.rss));
            }
            auto it = mac_id.find(reading.mac);
            if (it == mac_id.end()) throw ValidationError("mac " + reading.mac + " missing from universe");
            ++degree[it->second];
            ++degree[n_mac + s];
        }
    }

    g.offsets_.assign(n + 1, 0);
    for (std::size_t i = 0; i < n; ++i) g.offsets_[i + 1] = g.offsets_[i] + degree[i];
    g.neighbors_.resize(g.offsets_[n]);
    g.weights_.resize(g.offsets_[n]);
    std::vector<std::size_t> cursor(g.offsets_.begin(), g.offsets_.end() - 1);

    // Samples are visited in record order, so every MAC's list is ordered by sample id.
    for (std::size_t s = 0; s < dataset.records.size(); ++s) {
        const NodeId v = static_cast<NodeId>(n_mac + s);
        for (const auto& reading : dataset.records[s].readings) {
            const NodeId u = mac_id.at(reading.mac);
            const double w = reading.rss + c;
            g.neighbors_[cursor[v]] = u;
            g.weights_[cursor[v]++] = w;
            g.neighbors_[cursor[u]] = v;
            g.weights_[cursor[u]++] = w;
        }
    }
    return g;
}

}  // namespace floorid
