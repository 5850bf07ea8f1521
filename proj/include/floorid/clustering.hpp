#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "floorid/ingest.hpp"
#include "floorid/rfgnn.hpp"

namespace floorid {

inline constexpr int kHeldOut = -1;

// Partition of the dataset records into floor clusters.
struct Clustering {
    int count = 0;
    std::vector<int> assignment;  // per record: cluster in [0, count) or kHeldOut

    std::vector<std::vector<std::size_t>> members() const;
    std::vector<std::size_t> sizes() const;
    std::optional<std::size_t> holdout() const;
};

// One agglomeration step: cluster `second` is folded into `first` (first < second).
struct Merge {
    std::size_t first = 0;
    std::size_t second = 0;
    double distance = 0.0;
};

struct HierarchyResult {
    Clustering clustering;
    std::vector<Merge> merges;
};

// Mean pairwise Euclidean distance between two sets of rows of `points`.
double cluster_distance(const RowMatrix& points, std::span<const std::size_t> a,
                        std::span<const std::size_t> b);

// Average-linkage agglomeration of the rows of `points` (one per record)
// down to `n` clusters. Ties on the merge distance go to the
// lexicographically smallest (first, second) id pair; a merged cluster keeps
// the smaller id. Final cluster labels follow each cluster's first member.
HierarchyResult hierarchical_cluster(const RowMatrix& points, int n,
                                     std::optional<std::size_t> holdout = std::nullopt);

struct KMeansResult {
    Clustering clustering;
    std::vector<double> objective;  // within-cluster sum of squares after each assignment
    int iterations = 0;
};

KMeansResult kmeans_cluster(const RowMatrix& points, int n, std::uint64_t seed,
                            std::optional<std::size_t> holdout = std::nullopt);

// f(i, k) = number of records in cluster i whose scan contains MAC k, with
// MACs in dataset.mac_universe order. Held-out records are not counted.
Eigen::MatrixXd mac_frequency_profile(const Clustering& clustering, const Dataset& dataset);

// "sample_id cluster_id" lines, cluster ids 1-based; held-out records are omitted.
void write_assignment(std::ostream& out, const Clustering& clustering, const Dataset& dataset);
Clustering read_assignment(std::istream& in, const Dataset& dataset);

}  // namespace floorid
