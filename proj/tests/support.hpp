#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "floorid/graph.hpp"
#include "floorid/ingest.hpp"
#include "floorid/rfgnn.hpp"

namespace floorid::testing {

ScanRecord record(std::string id, std::vector<std::pair<std::string, double>> scan,
                  std::optional<int> floor = std::nullopt, bool anchor = false);

// Random scans over `macs` MACs; every record hears at least one MAC and
// the anchor sits on floor 1. Floors cycle 1..floor_count over the records.
Dataset random_dataset(std::size_t records, std::size_t macs, int floor_count, std::uint64_t seed);

// Largest |a - b| / max(|a|, |b|, floor) over matching entries.
double max_relative_error(const std::vector<double>& a, const std::vector<double>& b, double floor);

struct GradientCheck {
    double max_relative_error = 0.0;
    std::size_t entries = 0;
};

// Compares loss_and_grad against central differences with step h on a frozen plan.
GradientCheck check_gradients(const GnnModel& model, const BipartiteGraph& graph, std::uint64_t seed, double h);

// Exhaustive minimum-cost Hamiltonian path from `start`; ties go to the lexicographically smallest path.
std::pair<std::vector<std::size_t>, double> brute_force_path(const Eigen::MatrixXd& weight, std::size_t start);

// O(n^3) average linkage: recompute every cluster distance from scratch at each step.
struct NaiveMerge {
    std::size_t first;
    std::size_t second;
    double distance;
};
std::vector<NaiveMerge> naive_average_linkage(const RowMatrix& points, int n);

// Pair-counting adjusted Rand index over all element pairs.
double ari_by_pairs(const std::vector<int>& x, const std::vector<int>& y);
// Mutual-information NMI by direct summation over label pairs.
double nmi_direct(const std::vector<int>& x, const std::vector<int>& y);
// Jaro similarity for permutations: symbol s matches iff its positions differ by at most the window.
double jaro_by_position(const std::vector<int>& a, const std::vector<int>& b);

}  // namespace floorid::testing
