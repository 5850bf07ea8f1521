#include "floorid/clustering.hpp"

#include <algorithm>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <random>
#include <string>
#include <unordered_map>

#include "floorid/errors.hpp"

namespace floorid {

std::vector<std::vector<std::size_t>> Clustering::members() const {
    std::vector<std::vector<std::size_t>> out(static_cast<std::size_t>(count));
    for (std::size_t r = 0; r < assignment.size(); ++r) {
        if (assignment[r] != kHeldOut) out[static_cast<std::size_t>(assignment[r])].push_back(r);
    }
    return out;
}

std::vector<std::size_t> Clustering::sizes() const {
    std::vector<std::size_t> out(static_cast<std::size_t>(count), 0);
    for (int a : assignment) {
        if (a != kHeldOut) ++out[static_cast<std::size_t>(a)];
    }
    return out;
}

std::optional<std::size_t> Clustering::holdout() const {
    for (std::size_t r = 0; r < assignment.size(); ++r) {
        if (assignment[r] == kHeldOut) return r;
    }
    return std::nullopt;
}

double cluster_distance(const RowMatrix& points, std::span<const std::size_t> a,
                        std::span<const std::size_t> b) {
    if (a.empty() || b.empty()) throw std::invalid_argument("cluster_distance needs non-empty clusters");
    double total = 0.0;
    for (auto i : a) {
        for (auto j : b) {
            total += (points.row(static_cast<Eigen::Index>(i)) - points.row(static_cast<Eigen::Index>(j))).norm();
        }
    }
    return total / (static_cast<double>(a.size()) * static_cast<double>(b.size()));
}

namespace {

std::vector<std::size_t> active_points(std::size_t rows, int n, std::optional<std::size_t> holdout) {
    if (holdout && *holdout >= rows) throw std::out_of_range("holdout index out of range");
    std::vector<std::size_t> idx;
    for (std::size_t r = 0; r < rows; ++r) {
        if (!holdout || r != *holdout) idx.push_back(r);
    }
    if (n < 1 || idx.size() < static_cast<std::size_t>(n)) {
        throw ValidationError("need at least " + std::to_string(n) + " points to form " + std::to_string(n) +
                              " clusters (have " + std::to_string(idx.size()) + ")");
    }
    return idx;
}

// Relabels raw per-point labels so cluster c is the c-th distinct label in point order.
Clustering finalize(std::size_t rows, std::span<const std::size_t> points, std::span<const std::size_t> raw, int n) {
    Clustering c;
    c.count = n;
    c.assignment.assign(rows, kHeldOut);
    std::unordered_map<std::size_t, int> relabel;
    for (std::size_t p = 0; p < points.size(); ++p) {
        auto [it, inserted] = relabel.emplace(raw[p], static_cast<int>(relabel.size()));
        c.assignment[points[p]] = it->second;
    }
    return c;
}

}  // namespace

HierarchyResult hierarchical_cluster(const RowMatrix& points, int n, std::optional<std::size_t> holdout) {
    const auto idx = active_points(static_cast<std::size_t>(points.rows()), n, holdout);
    const std::size_t m = idx.size();

    std::vector<double> dist(m * m, 0.0);
    auto D = [&](std::size_t i, std::size_t j) -> double& { return dist[i * m + j]; };
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = i + 1; j < m; ++j) {
            const double d = (points.row(static_cast<Eigen::Index>(idx[i])) - points.row(static_cast<Eigen::Index>(idx[j]))).norm();
            D(i, j) = d;
            D(j, i) = d;
        }
    }

    std::vector<bool> active(m, true);
    std::vector<std::size_t> size(m, 1);
    // For each active i: nearest active j > i (ties to the smallest j).
    constexpr auto kNone = std::numeric_limits<std::size_t>::max();
    std::vector<std::size_t> nn(m, kNone);
    std::vector<double> nd(m, std::numeric_limits<double>::infinity());
    auto rescan = [&](std::size_t i) {
        nn[i] = kNone;
        nd[i] = std::numeric_limits<double>::infinity();
        for (std::size_t j = i + 1; j < m; ++j) {
            if (active[j] && D(i, j) < nd[i]) {
                nd[i] = D(i, j);
                nn[i] = j;
            }
        }
    };
    for (std::size_t i = 0; i < m; ++i) rescan(i);

    HierarchyResult result;
    for (std::size_t remaining = m; remaining > static_cast<std::size_t>(n); --remaining) {
        std::size_t a = kNone;
        for (std::size_t i = 0; i < m; ++i) {
            if (active[i] && nn[i] != kNone && (a == kNone || nd[i] < nd[a])) a = i;
        }
        const std::size_t b = nn[a];
        result.merges.push_back({a, b, nd[a]});

        const double wa = static_cast<double>(size[a]);
        const double wb = static_cast<double>(size[b]);
        for (std::size_t k = 0; k < m; ++k) {
            if (!active[k] || k == a || k == b) continue;
            const double d = (wa * D(a, k) + wb * D(b, k)) / (wa + wb);
            D(a, k) = d;
            D(k, a) = d;
        }
        active[b] = false;
        size[a] += size[b];

        rescan(a);
        for (std::size_t i = 0; i < a; ++i) {
            if (!active[i]) continue;
            if (nn[i] == a || nn[i] == b) {
                rescan(i);
            } else if (D(i, a) < nd[i] || (D(i, a) == nd[i] && a < nn[i])) {
                nd[i] = D(i, a);
                nn[i] = a;
            }
        }
        for (std::size_t i = a + 1; i < b; ++i) {
            if (active[i] && nn[i] == b) rescan(i);
        }
    }

    // Each point's raw label is the surviving id of its cluster.
    std::vector<std::size_t> parent(m);
    for (std::size_t i = 0; i < m; ++i) parent[i] = i;
    for (const auto& merge : result.merges) parent[merge.second] = merge.first;
    std::vector<std::size_t> raw(m);
    for (std::size_t i = 0; i < m; ++i) {
        std::size_t r = i;
        while (parent[r] != r) r = parent[r];
        raw[i] = r;
    }
    result.clustering = finalize(static_cast<std::size_t>(points.rows()), idx, raw, n);
    return result;
}

KMeansResult kmeans_cluster(const RowMatrix& points, int n, std::uint64_t seed, std::optional<std::size_t> holdout) {
    constexpr int kMaxIterations = 300;
    const auto idx = active_points(static_cast<std::size_t>(points.rows()), n, holdout);
    const std::size_t m = idx.size();
    const auto k = static_cast<std::size_t>(n);
    auto point = [&](std::size_t p) { return points.row(static_cast<Eigen::Index>(idx[p])); };

    Rng rng(seed);
    RowMatrix centers(n, points.cols());
    // k-means++ seeding.
    std::uniform_int_distribution<std::size_t> first(0, m - 1);
    centers.row(0) = point(first(rng));
    std::vector<double> d2(m, std::numeric_limits<double>::infinity());
    for (std::size_t c = 1; c < k; ++c) {
        double total = 0.0;
        for (std::size_t p = 0; p < m; ++p) {
            d2[p] = std::min(d2[p], (point(p) - centers.row(static_cast<Eigen::Index>(c - 1))).squaredNorm());
            total += d2[p];
        }
        std::size_t pick = 0;
        if (total > 0.0) {
            std::uniform_real_distribution<double> unit(0.0, total);
            double u = unit(rng);
            for (pick = 0; pick + 1 < m && u >= d2[pick]; ++pick) u -= d2[pick];
        } else {
            pick = first(rng);
        }
        centers.row(static_cast<Eigen::Index>(c)) = point(pick);
    }

    KMeansResult result;
    std::vector<std::size_t> label(m, k);
    for (int iter = 0; iter < kMaxIterations; ++iter) {
        bool changed = false;
        double objective = 0.0;
        std::vector<double> own(m);
        for (std::size_t p = 0; p < m; ++p) {
            std::size_t best = 0;
            double best_d = std::numeric_limits<double>::infinity();
            for (std::size_t c = 0; c < k; ++c) {
                const double d = (point(p) - centers.row(static_cast<Eigen::Index>(c))).squaredNorm();
                if (d < best_d) {
                    best_d = d;
                    best = c;
                }
            }
            changed = changed || label[p] != best;
            label[p] = best;
            own[p] = best_d;
            objective += best_d;
        }
        // Repair empty clusters with the point farthest from its center.
        std::vector<std::size_t> counts(k, 0);
        for (auto l : label) ++counts[l];
        for (std::size_t c = 0; c < k; ++c) {
            if (counts[c] != 0) continue;
            std::size_t far = m;
            for (std::size_t p = 0; p < m; ++p) {
                if (counts[label[p]] > 1 && (far == m || own[p] > own[far])) far = p;
            }
            --counts[label[far]];
            objective -= own[far];
            label[far] = c;
            own[far] = 0.0;
            ++counts[c];
            changed = true;
        }
        result.objective.push_back(objective);
        result.iterations = iter + 1;
        if (!changed) break;

        centers.setZero();
        for (std::size_t p = 0; p < m; ++p) centers.row(static_cast<Eigen::Index>(label[p])) += point(p);
        for (std::size_t c = 0; c < k; ++c) centers.row(static_cast<Eigen::Index>(c)) /= static_cast<double>(counts[c]);
    }
    result.clustering = finalize(static_cast<std::size_t>(points.rows()), idx, label, n);
    return result;
}

Eigen::MatrixXd mac_frequency_profile(const Clustering& clustering, const Dataset& dataset) {
    if (clustering.assignment.size() != dataset.records.size()) {
        throw std::invalid_argument("clustering does not match dataset");
    }
    std::unordered_map<std::string, Eigen::Index> column;
    for (std::size_t k = 0; k < dataset.mac_universe.size(); ++k) {
        column.emplace(dataset.mac_universe[k], static_cast<Eigen::Index>(k));
    }
    Eigen::MatrixXd freq = Eigen::MatrixXd::Zero(clustering.count, static_cast<Eigen::Index>(dataset.mac_universe.size()));
    for (std::size_t r = 0; r < dataset.records.size(); ++r) {
        const int c = clustering.assignment[r];
        if (c == kHeldOut) continue;
        for (const auto& reading : dataset.records[r].readings) freq(c, column.at(reading.mac)) += 1.0;
    }
    return freq;
}

void write_assignment(std::ostream& out, const Clustering& clustering, const Dataset& dataset) {
    for (std::size_t r = 0; r < dataset.records.size(); ++r) {
        if (clustering.assignment[r] == kHeldOut) continue;
        out << dataset.records[r].id << ' ' << clustering.assignment[r] + 1 << '\n';
    }
}

Clustering read_assignment(std::istream& in, const Dataset& dataset) {
    std::unordered_map<std::string, std::size_t> row;
    for (std::size_t r = 0; r < dataset.records.size(); ++r) row.emplace(dataset.records[r].id, r);

    Clustering c;
    c.assignment.assign(dataset.records.size(), kHeldOut);
    std::string line;
    std::size_t line_no = 0;
    int max_id = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto space = line.find_last_of(' ');
        if (space == std::string::npos) throw DatasetError(line_no, "expected 'sample_id cluster_id'");
        const std::string id = line.substr(0, space);
        int cluster = 0;
        try {
            cluster = std::stoi(line.substr(space + 1));
        } catch (const std::exception&) {
            throw DatasetError(line_no, "bad cluster id");
        }
        auto it = row.find(id);
        if (it == row.end()) throw DatasetError(line_no, "unknown sample id " + id);
        if (cluster < 1) throw DatasetError(line_no, "cluster ids are 1-based");
        c.assignment[it->second] = cluster - 1;
        max_id = std::max(max_id, cluster);
    }
    c.count = max_id;
    const auto sizes = c.sizes();
    if (std::any_of(sizes.begin(), sizes.end(), [](std::size_t s) { return s == 0; })) {
        throw ValidationError("assignment leaves a cluster id unused");
    }
    return c;
}

}  // namespace floorid
