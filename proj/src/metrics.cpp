#include "floorid/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "floorid/errors.hpp"

namespace floorid {

namespace {

double choose2(std::size_t n) {
    const auto v = static_cast<double>(n);
    return v * (v - 1.0) / 2.0;
}

std::vector<int> distinct(std::span<const int> labels) {
    std::vector<int> out(labels.begin(), labels.end());
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

std::size_t position(const std::vector<int>& sorted, int label) {
    return static_cast<std::size_t>(std::lower_bound(sorted.begin(), sorted.end(), label) - sorted.begin());
}

double entropy(std::span<const std::size_t> sizes, double n) {
    double h = 0.0;
    for (auto s : sizes) {
        if (s == 0) continue;
        const double p = static_cast<double>(s) / n;
        h -= p * std::log(p);
    }
    return h;
}

}  // namespace

ContingencyTable contingency(std::span<const int> x, std::span<const int> y) {
    if (x.size() != y.size()) throw std::invalid_argument("label vectors cover different universes");
    if (x.empty()) throw std::invalid_argument("label vectors are empty");
    ContingencyTable t;
    t.row_labels = distinct(x);
    t.col_labels = distinct(y);
    t.counts.assign(t.row_labels.size(), std::vector<std::size_t>(t.col_labels.size(), 0));
    t.row_sums.assign(t.row_labels.size(), 0);
    t.col_sums.assign(t.col_labels.size(), 0);
    for (std::size_t e = 0; e < x.size(); ++e) {
        const auto i = position(t.row_labels, x[e]);
        const auto j = position(t.col_labels, y[e]);
        ++t.counts[i][j];
        ++t.row_sums[i];
        ++t.col_sums[j];
    }
    t.total = x.size();
    return t;
}

double ari(const ContingencyTable& t) {
    double index = 0.0, a = 0.0, b = 0.0;
    for (const auto& row : t.counts) {
        for (auto c : row) index += choose2(c);
    }
    for (auto s : t.row_sums) a += choose2(s);
    for (auto s : t.col_sums) b += choose2(s);
    const double pairs = choose2(t.total);
    const double expected = pairs > 0.0 ? a * b / pairs : 0.0;
    const double max_index = (a + b) / 2.0;
    const double denom = max_index - expected;
    if (denom == 0.0) return 1.0;
    return (index - expected) / denom;
}

double ari(std::span<const int> x, std::span<const int> y) { return ari(contingency(x, y)); }

namespace {

// Each row and each column holds exactly one non-zero cell.
bool same_partition(const ContingencyTable& t) {
    if (t.row_labels.size() != t.col_labels.size()) return false;
    for (std::size_t i = 0; i < t.counts.size(); ++i) {
        if (std::count(t.counts[i].begin(), t.counts[i].end(), 0u) + 1 != static_cast<std::ptrdiff_t>(t.counts[i].size())) return false;
    }
    return true;
}

}  // namespace

double nmi(const ContingencyTable& t) {
    const auto n = static_cast<double>(t.total);
    const double hx = entropy(t.row_sums, n);
    const double hy = entropy(t.col_sums, n);
    if (hx == 0.0 && hy == 0.0) return 1.0;
    if (same_partition(t)) return 1.0;
    double mi = 0.0;
    for (std::size_t i = 0; i < t.counts.size(); ++i) {
        for (std::size_t j = 0; j < t.counts[i].size(); ++j) {
            const auto c = static_cast<double>(t.counts[i][j]);
            if (c == 0.0) continue;
            mi += (c / n) * std::log(n * c / (static_cast<double>(t.row_sums[i]) * static_cast<double>(t.col_sums[j])));
        }
    }
    return std::clamp(2.0 * mi / (hx + hy), 0.0, 1.0);
}

double nmi(std::span<const int> x, std::span<const int> y) { return nmi(contingency(x, y)); }

double jaro(std::span<const int> a, std::span<const int> b) {
    if (a.empty() && b.empty()) return 1.0;
    const auto longest = static_cast<std::ptrdiff_t>(std::max(a.size(), b.size()));
    const std::ptrdiff_t window = std::max<std::ptrdiff_t>(0, longest / 2 - 1);
    std::vector<bool> a_hit(a.size(), false), b_hit(b.size(), false);
    std::size_t m = 0;
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(a.size()); ++i) {
        const auto lo = std::max<std::ptrdiff_t>(0, i - window);
        const auto hi = std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(b.size()) - 1, i + window);
        for (auto j = lo; j <= hi; ++j) {
            if (!b_hit[static_cast<std::size_t>(j)] && a[static_cast<std::size_t>(i)] == b[static_cast<std::size_t>(j)]) {
                a_hit[static_cast<std::size_t>(i)] = true;
                b_hit[static_cast<std::size_t>(j)] = true;
                ++m;
                break;
            }
        }
    }
    if (m == 0) return 0.0;
    std::size_t out_of_order = 0;
    for (std::size_t i = 0, j = 0; i < a.size(); ++i) {
        if (!a_hit[i]) continue;
        while (!b_hit[j]) ++j;
        if (a[i] != b[j]) ++out_of_order;
        ++j;
    }
    const double md = static_cast<double>(m);
    const double t = static_cast<double>(out_of_order) / 2.0;
    return (md / static_cast<double>(a.size()) + md / static_cast<double>(b.size()) + (md - t) / md) / 3.0;
}

namespace {

void require_permutation(std::span<const int> s, const char* which) {
    std::vector<int> sorted(s.begin(), s.end());
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        if (sorted[i] != static_cast<int>(i) + 1) {
            throw std::invalid_argument(std::string(which) + " sequence is not a permutation of 1..N");
        }
    }
}

}  // namespace

double edit_distance(std::span<const int> predicted, std::span<const int> truth) {
    if (predicted.size() != truth.size()) throw std::invalid_argument("sequences differ in length");
    require_permutation(predicted, "predicted");
    require_permutation(truth, "ground-truth");
    return jaro(predicted, truth);
}

IndexSequence ordering_to_sequence(const FloorOrdering& ordering, const Clustering& clustering,
                                   std::span<const int> truth) {
    if (truth.size() != clustering.assignment.size()) throw std::invalid_argument("ground truth does not match clustering");
    const auto members = clustering.members();
    std::vector<int> identity(members.size(), 0);
    for (std::size_t c = 0; c < members.size(); ++c) {
        std::map<int, std::size_t> votes;
        for (auto r : members[c]) ++votes[truth[r]];
        std::size_t best = 0;
        for (const auto& [floor, count] : votes) {
            if (count > best) {
                best = count;
                identity[c] = floor;
            }
        }
    }
    IndexSequence seq;
    for (std::size_t p = 0; p < ordering.clusters.size(); ++p) {
        seq.predicted.push_back(identity[ordering.clusters[p]]);
        seq.truth.push_back(static_cast<int>(p) + 1);
    }
    std::vector<int> sorted = seq.predicted;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
        throw DegenerateMappingError("two clusters share the same majority ground-truth floor");
    }
    return seq;
}

MetricsReport evaluate(std::span<const int> predicted_floors, std::span<const int> truth,
                       const FloorOrdering& ordering, const Clustering& clustering) {
    MetricsReport report;
    report.table = contingency(predicted_floors, truth);
    report.ari = ari(report.table);
    report.nmi = nmi(report.table);
    try {
        report.sequence = ordering_to_sequence(ordering, clustering, truth);
        report.edit_distance = edit_distance(report.sequence->predicted, report.sequence->truth);
    } catch (const DegenerateMappingError&) {
        report.edit_distance.reset();
    } catch (const std::invalid_argument&) {
        // Majority floors outside 1..N (e.g. a filtered building) cannot form a permutation.
        report.edit_distance.reset();
    }
    return report;
}

MetricsReport evaluate_labels(std::span<const int> predicted_floors, std::span<const int> truth, int floor_count) {
    Clustering clustering;
    clustering.count = floor_count;
    for (int f : predicted_floors) {
        if (f < 1 || f > floor_count) throw std::invalid_argument("predicted floor outside 1.." + std::to_string(floor_count));
        clustering.assignment.push_back(f - 1);
    }
    FloorOrdering ordering;
    for (int c = 0; c < floor_count; ++c) ordering.clusters.push_back(static_cast<std::size_t>(c));
    return evaluate(predicted_floors, truth, ordering, clustering);
}

}  // namespace floorid
