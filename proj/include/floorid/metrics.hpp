#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "floorid/clustering.hpp"
#include "floorid/indexing.hpp"

namespace floorid {

// n_ij = |X_i n Y_j| with rows indexed by the sorted distinct labels of X and
// columns by those of Y.
struct ContingencyTable {
    std::vector<int> row_labels;
    std::vector<int> col_labels;
    std::vector<std::vector<std::size_t>> counts;
    std::vector<std::size_t> row_sums;
    std::vector<std::size_t> col_sums;
    std::size_t total = 0;
};

// Throws std::invalid_argument when the label vectors differ in length or are empty.
ContingencyTable contingency(std::span<const int> x, std::span<const int> y);

double ari(std::span<const int> x, std::span<const int> y);
double ari(const ContingencyTable& table);
// 2 MI / (H(X) + H(Y)) in nats.
double nmi(std::span<const int> x, std::span<const int> y);
double nmi(const ContingencyTable& table);

// Jaro similarity with match window max(0, floor(max(|a|,|b|)/2) - 1) and
// t = half the matched symbols that appear out of order. No prefix bonus.
double jaro(std::span<const int> a, std::span<const int> b);
// jaro() restricted to equal-length permutations of 1..N.
double edit_distance(std::span<const int> predicted, std::span<const int> truth);

struct IndexSequence {
    std::vector<int> predicted;  // majority ground-truth floor of each cluster, in predicted floor order
    std::vector<int> truth;      // 1..N
};

// `truth` holds the ground-truth floor of every record. Throws
// DegenerateMappingError when two clusters vote for the same floor.
IndexSequence ordering_to_sequence(const FloorOrdering& ordering, const Clustering& clustering,
                                   std::span<const int> truth);

struct MetricsReport {
    double ari = 0.0;
    double nmi = 0.0;
    std::optional<double> edit_distance;  // empty when the cluster-to-floor mapping is degenerate
    std::optional<IndexSequence> sequence;
    ContingencyTable table;
};

MetricsReport evaluate(std::span<const int> predicted_floors, std::span<const int> truth,
                       const FloorOrdering& ordering, const Clustering& clustering);
// Same, with clusters and their order read off the predicted floor labels (1..floor_count).
MetricsReport evaluate_labels(std::span<const int> predicted_floors, std::span<const int> truth, int floor_count);

}  // namespace floorid
