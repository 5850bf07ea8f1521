#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "floorid/ingest.hpp"

namespace floorid {

using NodeId = std::uint32_t;

inline constexpr double kDefaultRssOffset = 120.0;

// Weighted bipartite graph of MAC nodes and scan (sample) nodes.
//
// Node ids are dense: MACs occupy [0, mac_count()) in first-seen order and
// samples occupy [mac_count(), node_count()) in record order. Adjacency is
// stored as CSR with precomputed weights w = RSS + c, so both directions of
// every edge carry the same weight.
class BipartiteGraph {
public:
    std::size_t mac_count() const noexcept { return macs_.size(); }
    std::size_t sample_count() const noexcept { return samples_.size(); }
    std::size_t node_count() const noexcept { return offsets_.size() - 1; }
    std::size_t edge_count() const noexcept { return neighbors_.size() / 2; }
    double offset() const noexcept { return c_; }

    NodeId mac_node(std::size_t mac_index) const;
    NodeId sample_node(std::size_t sample_index) const;
    bool is_sample(NodeId node) const noexcept { return node >= macs_.size(); }
    std::size_t sample_index(NodeId node) const;

    const std::string& name(NodeId node) const;
    const std::vector<std::string>& mac_names() const noexcept { return macs_; }
    const std::vector<std::string>& sample_names() const noexcept { return samples_; }

    std::size_t degree(NodeId node) const;
    std::span<const NodeId> neighbors(NodeId node) const;
    std::span<const double> weights(NodeId node) const;
    std::optional<double> edge_weight(NodeId u, NodeId v) const;

    void write_edge_list(std::ostream& out) const;

private:
    friend BipartiteGraph build_graph(const Dataset& dataset, double c);

    void check(NodeId node) const;

    std::vector<std::string> macs_;
    std::vector<std::string> samples_;
    std::vector<std::size_t> offsets_{0};
    std::vector<NodeId> neighbors_;
    std::vector<double> weights_;
    double c_ = kDefaultRssOffset;
};

// Throws ValidationError if some reading has RSS + c <= 0.
BipartiteGraph build_graph(const Dataset& dataset, double c = kDefaultRssOffset);

}  // namespace floorid
