#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "floorid/clustering.hpp"
#include "floorid/rfgnn.hpp"

namespace floorid {

enum class SimilarityMethod { Adapted, Plain };
enum class SolverKind { Exact, TwoOpt, Auto };

inline constexpr std::size_t kMaxExactClusters = 20;
inline constexpr std::size_t kAutoExactLimit = 12;
inline constexpr double kCostTolerance = 1e-12;

// |A_i n A_j| / |A_i u A_j| where A_x is the support of a frequency row; 0 when both are empty.
double jaccard_plain(std::span<const double> fi, std::span<const double> fj);

struct AdaptedJaccard {
    double share = 0.0;   // sum_k f_ik f_jk
    double diff = 0.0;    // unshared counts, each scaled by the other cluster's mean
    double mean_i = 0.0;  // sum_k f_ik / m over the pair's union of MACs
    double mean_j = 0.0;
    std::size_t union_size = 0;
    double value = 0.0;   // share / (share + diff), 0 when both vanish
};

AdaptedJaccard jaccard_adapted_terms(std::span<const double> fi, std::span<const double> fj);
double jaccard_adapted(std::span<const double> fi, std::span<const double> fj);

// Symmetric N x N coefficients from an N x M frequency table; diagonal is 1.
Eigen::MatrixXd build_similarity(const Eigen::MatrixXd& freq, SimilarityMethod method);

// Complete digraph on clusters: w(i, j) = 1 - J(i, j), except edges into
// `start` which cost 0, so a tour from `start` is a Hamiltonian path.
struct TspInstance {
    Eigen::MatrixXd weight;
    std::size_t start = 0;

    std::size_t size() const { return static_cast<std::size_t>(weight.rows()); }
};

TspInstance make_instance(const Eigen::MatrixXd& similarity, std::size_t start);

struct PathSolution {
    std::vector<std::size_t> path;  // path.front() == instance.start
    double cost = 0.0;
};

double path_cost(const TspInstance& instance, std::span<const std::size_t> path);

// Held-Karp over subsets; among optimal paths returns the lexicographically smallest.
PathSolution solve_exact(const TspInstance& instance);
// Best of `restarts` random starts, each descended to a 2-opt local optimum.
PathSolution solve_2opt(const TspInstance& instance, int restarts, std::uint64_t seed);
bool is_two_opt_local_optimum(const TspInstance& instance, std::span<const std::size_t> path);

struct IndexingOptions {
    SolverKind solver = SolverKind::Auto;
    int restarts = 16;
    std::uint64_t seed = 1;
};

struct FloorOrdering {
    std::vector<std::size_t> clusters;  // clusters[p] sits on floor p + 1
    double cost = 0.0;                  // sum of (1 - J) along the path
    double similarity_sum = 0.0;        // sum of J between vertically adjacent clusters
    std::string solver;
    std::vector<std::string> warnings;

    std::vector<int> floor_of_cluster() const;
};

FloorOrdering index_bottom_anchor(const Eigen::MatrixXd& similarity, std::size_t anchor_cluster,
                                  const IndexingOptions& options = {});

// Mean Euclidean distance from `r` to the rows of `points` listed in `members`.
double anchor_distance(const RowMatrix& points, std::span<const std::size_t> members, const Vec& r);

// Throws ValidationError outside 1..floor_count and MiddleFloorAnchorError on the
// middle floor of an odd building.
void check_anchor_floor(int anchor_floor, int floor_count);

// Anchor held out of `clustering`; `anchor_floor` is 1-based. Throws
// MiddleFloorAnchorError for the middle floor of an odd building and
// AmbiguousOrientationError when both end candidates are equidistant.
FloorOrdering index_arbitrary_anchor(const Clustering& clustering, const Eigen::MatrixXd& similarity,
                                     const RowMatrix& points, const Vec& anchor, int anchor_floor,
                                     const IndexingOptions& options = {});

// Floor per record; a held-out record receives `holdout_floor`.
std::vector<int> assign_labels(const FloorOrdering& ordering, const Clustering& clustering,
                               std::optional<int> holdout_floor = std::nullopt);

}  // namespace floorid
