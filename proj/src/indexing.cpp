#include "floorid/indexing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>

#include "floorid/errors.hpp"

namespace floorid {

double jaccard_plain(std::span<const double> fi, std::span<const double> fj) {
    if (fi.size() != fj.size()) throw std::invalid_argument("frequency rows differ in length");
    std::size_t both = 0, either = 0;
    for (std::size_t k = 0; k < fi.size(); ++k) {
        const bool a = fi[k] > 0.0, b = fj[k] > 0.0;
        both += a && b;
        either += a || b;
    }
    return either == 0 ? 0.0 : static_cast<double>(both) / static_cast<double>(either);
}

AdaptedJaccard jaccard_adapted_terms(std::span<const double> fi, std::span<const double> fj) {
    if (fi.size() != fj.size()) throw std::invalid_argument("frequency rows differ in length");
    AdaptedJaccard t;
    double sum_i = 0.0, sum_j = 0.0;
    for (std::size_t k = 0; k < fi.size(); ++k) {
        if (fi[k] > 0.0 || fj[k] > 0.0) ++t.union_size;
        sum_i += fi[k];
        sum_j += fj[k];
        t.share += fi[k] * fj[k];
    }
    if (t.union_size == 0) return t;
    t.mean_i = sum_i / static_cast<double>(t.union_size);
    t.mean_j = sum_j / static_cast<double>(t.union_size);
    for (std::size_t k = 0; k < fi.size(); ++k) {
        if (fi[k] == 0.0) t.diff += fj[k] * t.mean_i;
        if (fj[k] == 0.0) t.diff += fi[k] * t.mean_j;
    }
    const double denom = t.share + t.diff;
    t.value = denom > 0.0 ? t.share / denom : 0.0;
    return t;
}

double jaccard_adapted(std::span<const double> fi, std::span<const double> fj) {
    return jaccard_adapted_terms(fi, fj).value;
}

Eigen::MatrixXd build_similarity(const Eigen::MatrixXd& freq, SimilarityMethod method) {
    const Eigen::Index n = freq.rows();
    // Row-major copy so each cluster's profile is contiguous.
    const RowMatrix rows = freq;
    auto row = [&](Eigen::Index i) { return std::span<const double>(rows.data() + i * rows.cols(), static_cast<std::size_t>(rows.cols())); };
    Eigen::MatrixXd sim = Eigen::MatrixXd::Identity(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double v = method == SimilarityMethod::Adapted ? jaccard_adapted(row(i), row(j)) : jaccard_plain(row(i), row(j));
            sim(i, j) = v;
            sim(j, i) = v;
        }
    }
    return sim;
}

TspInstance make_instance(const Eigen::MatrixXd& similarity, std::size_t start) {
    const auto n = static_cast<std::size_t>(similarity.rows());
    if (similarity.cols() != similarity.rows()) throw std::invalid_argument("similarity must be square");
    if (start >= n) throw std::out_of_range("start cluster out of range");
    TspInstance inst;
    inst.start = start;
    inst.weight = Eigen::MatrixXd::Ones(similarity.rows(), similarity.cols()) - similarity;
    for (std::size_t i = 0; i < n; ++i) {
        inst.weight(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = 0.0;
        inst.weight(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(start)) = 0.0;
    }
    return inst;
}

double path_cost(const TspInstance& instance, std::span<const std::size_t> path) {
    double cost = 0.0;
    for (std::size_t p = 1; p < path.size(); ++p) {
        cost += instance.weight(static_cast<Eigen::Index>(path[p - 1]), static_cast<Eigen::Index>(path[p]));
    }
    return cost;
}

PathSolution solve_exact(const TspInstance& instance) {
    const std::size_t n = instance.size();
    if (n < 1 || n > kMaxExactClusters) {
        throw ValidationError("exact solver supports 1.." + std::to_string(kMaxExactClusters) + " clusters (got " +
                              std::to_string(n) + ")");
    }
    // Local order: the start node first, then the others ascending, so
    // scanning local ids ascending is scanning cluster ids ascending.
    std::vector<std::size_t> order{instance.start};
    for (std::size_t i = 0; i < n; ++i) {
        if (i != instance.start) order.push_back(i);
    }
    const std::size_t others = n - 1;
    auto w = [&](std::size_t a, std::size_t b) {
        return instance.weight(static_cast<Eigen::Index>(order[a]), static_cast<Eigen::Index>(order[b]));
    };
    // Bit t of a mask stands for local node t + 1. togo[mask * n + v] is the
    // cheapest completion when the nodes in mask are visited and we stand on v.
    const std::size_t full = (std::size_t{1} << others) - 1;
    std::vector<double> togo((full + 1) * n, std::numeric_limits<double>::infinity());
    auto at = [&](std::size_t mask, std::size_t v) -> double& { return togo[mask * n + v]; };
    for (std::size_t v = 0; v < n; ++v) at(full, v) = 0.0;
    auto best_completion = [&](std::size_t mask, std::size_t v) {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t t = 0; t < others; ++t) {
            if (mask & (std::size_t{1} << t)) continue;
            best = std::min(best, w(v, t + 1) + at(mask | (std::size_t{1} << t), t + 1));
        }
        return best;
    };
    for (std::size_t mask = full; mask-- > 0;) {
        if (mask == 0) {
            at(0, 0) = best_completion(0, 0);
            break;
        }
        for (std::size_t t = 0; t < others; ++t) {
            if (mask & (std::size_t{1} << t)) at(mask, t + 1) = best_completion(mask, t + 1);
        }
    }

    PathSolution sol;
    sol.path.push_back(instance.start);
    std::size_t mask = 0, v = 0;
    while (mask != full) {
        const double target = at(mask, v) + kCostTolerance;
        for (std::size_t t = 0; t < others; ++t) {
            const std::size_t bit = std::size_t{1} << t;
            if ((mask & bit) == 0 && w(v, t + 1) + at(mask | bit, t + 1) <= target) {
                mask |= bit;
                v = t + 1;
                sol.path.push_back(order[v]);
                break;
            }
        }
    }
    sol.cost = path_cost(instance, sol.path);
    return sol;
}

namespace {

double reversal_delta(const TspInstance& inst, const std::vector<std::size_t>& p, std::size_t i, std::size_t j) {
    auto w = [&](std::size_t a, std::size_t b) { return inst.weight(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)); };
    double delta = w(p[i - 1], p[j]) - w(p[i - 1], p[i]);
    if (j + 1 < p.size()) delta += w(p[i], p[j + 1]) - w(p[j], p[j + 1]);
    return delta;
}

void two_opt_descend(const TspInstance& inst, std::vector<std::size_t>& path) {
    const std::size_t n = path.size();
    bool improved = true;
    while (improved) {
        improved = false;
        for (std::size_t i = 1; i + 1 < n; ++i) {
            for (std::size_t j = i + 1; j < n; ++j) {
                if (reversal_delta(inst, path, i, j) < -kCostTolerance) {
                    std::reverse(path.begin() + static_cast<std::ptrdiff_t>(i), path.begin() + static_cast<std::ptrdiff_t>(j) + 1);
                    improved = true;
                }
            }
        }
    }
}

}  // namespace

bool is_two_opt_local_optimum(const TspInstance& instance, std::span<const std::size_t> path) {
    const std::vector<std::size_t> p(path.begin(), path.end());
    for (std::size_t i = 1; i + 1 < p.size(); ++i) {
        for (std::size_t j = i + 1; j < p.size(); ++j) {
            if (reversal_delta(instance, p, i, j) < -kCostTolerance) return false;
        }
    }
    return true;
}

PathSolution solve_2opt(const TspInstance& instance, int restarts, std::uint64_t seed) {
    const std::size_t n = instance.size();
    if (restarts < 1) throw ValidationError("2-opt needs at least one restart");
    std::vector<std::size_t> base{instance.start};
    for (std::size_t i = 0; i < n; ++i) {
        if (i != instance.start) base.push_back(i);
    }
    Rng rng(seed);
    PathSolution best;
    best.cost = std::numeric_limits<double>::infinity();
    for (int r = 0; r < restarts; ++r) {
        auto path = base;
        std::shuffle(path.begin() + 1, path.end(), rng);
        two_opt_descend(instance, path);
        const double cost = path_cost(instance, path);
        if (cost < best.cost - kCostTolerance || (cost <= best.cost + kCostTolerance && path < best.path)) {
            best.path = std::move(path);
            best.cost = cost;
        }
    }
    return best;
}

std::vector<int> FloorOrdering::floor_of_cluster() const {
    std::vector<int> floor(clusters.size(), 0);
    for (std::size_t p = 0; p < clusters.size(); ++p) floor[clusters[p]] = static_cast<int>(p) + 1;
    return floor;
}

namespace {

double adjacent_similarity(const Eigen::MatrixXd& similarity, std::span<const std::size_t> path) {
    double sum = 0.0;
    for (std::size_t p = 1; p < path.size(); ++p) {
        sum += similarity(static_cast<Eigen::Index>(path[p - 1]), static_cast<Eigen::Index>(path[p]));
    }
    return sum;
}

bool resolve_exact(SolverKind kind, std::size_t n) {
    if (kind == SolverKind::Exact) return true;
    if (kind == SolverKind::TwoOpt) return false;
    return n <= kAutoExactLimit;
}

PathSolution solve(const TspInstance& inst, const IndexingOptions& options) {
    return resolve_exact(options.solver, inst.size()) ? solve_exact(inst)
                                                      : solve_2opt(inst, options.restarts, options.seed);
}

void check_similarity(const Eigen::MatrixXd& similarity, std::vector<std::string>& warnings) {
    const Eigen::Index n = similarity.rows();
    if (n < 2) throw ValidationError("need at least two clusters to order");
    bool any = false;
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) any = any || (i != j && similarity(i, j) > 0.0);
    }
    if (!any) warnings.emplace_back("all inter-cluster similarities are zero; ordering carries no spillover evidence");
}

}  // namespace

FloorOrdering index_bottom_anchor(const Eigen::MatrixXd& similarity, std::size_t anchor_cluster,
                                  const IndexingOptions& options) {
    FloorOrdering ordering;
    check_similarity(similarity, ordering.warnings);
    const auto inst = make_instance(similarity, anchor_cluster);
    const auto sol = solve(inst, options);
    ordering.clusters = sol.path;
    ordering.cost = sol.cost;
    ordering.similarity_sum = adjacent_similarity(similarity, sol.path);
    ordering.solver = resolve_exact(options.solver, inst.size()) ? "exact" : "two_opt";
    return ordering;
}

double anchor_distance(const RowMatrix& points, std::span<const std::size_t> members, const Vec& r) {
    if (members.empty()) throw std::invalid_argument("anchor_distance needs a non-empty cluster");
    double total = 0.0;
    for (auto m : members) total += (points.row(static_cast<Eigen::Index>(m)).transpose() - r).norm();
    return total / static_cast<double>(members.size());
}

void check_anchor_floor(int anchor_floor, int floor_count) {
    if (anchor_floor < 1 || anchor_floor > floor_count) {
        throw ValidationError("anchor floor " + std::to_string(anchor_floor) + " outside 1.." + std::to_string(floor_count));
    }
    if (floor_count % 2 == 1 && anchor_floor == (floor_count + 1) / 2) {
        throw MiddleFloorAnchorError("anchor on the middle floor " + std::to_string(anchor_floor) + " of a " +
                                     std::to_string(floor_count) + "-floor building cannot orient the ordering");
    }
}

FloorOrdering index_arbitrary_anchor(const Clustering& clustering, const Eigen::MatrixXd& similarity,
                                     const RowMatrix& points, const Vec& anchor, int anchor_floor,
                                     const IndexingOptions& options) {
    const auto n = static_cast<int>(similarity.rows());
    check_anchor_floor(anchor_floor, n);

    FloorOrdering ordering;
    check_similarity(similarity, ordering.warnings);
    std::vector<std::size_t> best_path;
    double best_sum = -std::numeric_limits<double>::infinity();
    for (int s = 0; s < n; ++s) {
        const auto sol = solve(make_instance(similarity, static_cast<std::size_t>(s)), options);
        const double sum = adjacent_similarity(similarity, sol.path);
        if (sum > best_sum + kCostTolerance || (sum >= best_sum - kCostTolerance && sol.path < best_path)) {
            best_sum = sum;
            best_path = sol.path;
        }
    }

    const auto members = clustering.members();
    const auto near_end = best_path[static_cast<std::size_t>(anchor_floor - 1)];
    const auto far_end = best_path[static_cast<std::size_t>(n - anchor_floor)];
    const double d_near = anchor_distance(points, members[near_end], anchor);
    const double d_far = anchor_distance(points, members[far_end], anchor);
    if (std::abs(d_near - d_far) < 1e-12) {
        throw AmbiguousOrientationError("anchor is equidistant from both candidate clusters");
    }
    if (d_far < d_near) std::reverse(best_path.begin(), best_path.end());

    ordering.clusters = best_path;
    ordering.cost = path_cost(make_instance(similarity, best_path.front()), best_path);
    ordering.similarity_sum = adjacent_similarity(similarity, best_path);
    ordering.solver = resolve_exact(options.solver, static_cast<std::size_t>(n)) ? "exact" : "two_opt";
    return ordering;
}

std::vector<int> assign_labels(const FloorOrdering& ordering, const Clustering& clustering,
                               std::optional<int> holdout_floor) {
    const auto floor = ordering.floor_of_cluster();
    std::vector<int> labels(clustering.assignment.size(), 0);
    for (std::size_t r = 0; r < labels.size(); ++r) {
        const int c = clustering.assignment[r];
        if (c == kHeldOut) {
            if (!holdout_floor) throw std::invalid_argument("held-out record needs its declared floor");
            labels[r] = *holdout_floor;
        } else {
            labels[r] = floor[static_cast<std::size_t>(c)];
        }
    }
    return labels;
}

}  // namespace floorid
