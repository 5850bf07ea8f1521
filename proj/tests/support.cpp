#include "support.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>

namespace floorid::testing {

ScanRecord record(std::string id, std::vector<std::pair<std::string, double>> scan, std::optional<int> floor,
                  bool anchor) {
    ScanRecord r;
    r.id = std::move(id);
    for (auto& [mac, rss] : scan) r.readings.push_back({mac, rss});
    r.floor = floor;
    r.anchor = anchor;
    return r;
}

Dataset random_dataset(std::size_t records, std::size_t macs, int floor_count, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::bernoulli_distribution keep(0.5);
    std::uniform_real_distribution<double> rss(-110.0, -30.0);
    std::uniform_int_distribution<std::size_t> any(0, macs - 1);
    std::vector<ScanRecord> out;
    for (std::size_t r = 0; r < records; ++r) {
        ScanRecord rec;
        rec.id = "r" + std::to_string(r);
        rec.floor = static_cast<int>(r % static_cast<std::size_t>(floor_count)) + 1;
        rec.anchor = r == 0;
        for (std::size_t m = 0; m < macs; ++m) {
            if (keep(rng)) rec.readings.push_back({"m" + std::to_string(m), rss(rng)});
        }
        if (rec.readings.empty()) rec.readings.push_back({"m" + std::to_string(any(rng)), rss(rng)});
        out.push_back(std::move(rec));
    }
    return make_dataset(std::move(out), floor_count);
}

double max_relative_error(const std::vector<double>& a, const std::vector<double>& b, double floor) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double denom = std::max({std::abs(a[i]), std::abs(b[i]), floor});
        worst = std::max(worst, std::abs(a[i] - b[i]) / denom);
    }
    return worst;
}

GradientCheck check_gradients(const GnnModel& model, const BipartiteGraph& graph, std::uint64_t seed, double h) {
    Rng rng(seed);
    const NeighborSampler sampler(graph, model.config.aggregator == Aggregator::Weighted ? WalkLaw::Weighted : WalkLaw::Uniform);
    const NegativeSampler negatives(graph);
    std::uniform_int_distribution<NodeId> node(0, static_cast<NodeId>(graph.node_count() - 1));
    std::vector<std::pair<NodeId, NodeId>> pairs;
    for (int p = 0; p < 5; ++p) pairs.emplace_back(node(rng), node(rng));
    const auto batch = draw_negatives(pairs, model.config.negatives, negatives, rng);
    const auto plan = plan_for_batch(graph, sampler, batch, model.config, rng);
    const auto analytic = loss_and_grad(model, batch, plan);

    std::vector<double> g, fd;
    GnnModel probe = model;
    auto central = [&](double& param) {
        const double saved = param;
        param = saved + h;
        const double up = loss_and_grad(probe, batch, plan).loss;
        param = saved - h;
        const double down = loss_and_grad(probe, batch, plan).loss;
        param = saved;
        return (up - down) / (2.0 * h);
    };
    for (Eigen::Index i = 0; i < probe.inputs.size(); ++i) {
        g.push_back(analytic.grad.inputs.data()[i]);
        fd.push_back(central(probe.inputs.data()[i]));
    }
    for (std::size_t k = 0; k < probe.weights.size(); ++k) {
        for (Eigen::Index i = 0; i < probe.weights[k].size(); ++i) {
            g.push_back(analytic.grad.weights[k].data()[i]);
            fd.push_back(central(probe.weights[k].data()[i]));
        }
    }
    return {max_relative_error(g, fd, 1e-6), g.size()};
}

std::pair<std::vector<std::size_t>, double> brute_force_path(const Eigen::MatrixXd& weight, std::size_t start) {
    const auto n = static_cast<std::size_t>(weight.rows());
    std::vector<std::size_t> rest;
    for (std::size_t i = 0; i < n; ++i) {
        if (i != start) rest.push_back(i);
    }
    std::vector<std::size_t> best;
    double best_cost = std::numeric_limits<double>::infinity();
    do {
        double cost = 0.0;
        std::size_t at = start;
        for (auto next : rest) {
            cost += weight(static_cast<Eigen::Index>(at), static_cast<Eigen::Index>(next));
            at = next;
        }
        if (cost < best_cost - 1e-12) {
            best_cost = cost;
            best = rest;
        }
    } while (std::next_permutation(rest.begin(), rest.end()));
    best.insert(best.begin(), start);
    return {best, best_cost};
}

std::vector<NaiveMerge> naive_average_linkage(const RowMatrix& points, int n) {
    std::vector<std::vector<std::size_t>> clusters;
    for (Eigen::Index i = 0; i < points.rows(); ++i) clusters.push_back({static_cast<std::size_t>(i)});
    std::vector<NaiveMerge> merges;
    while (clusters.size() > static_cast<std::size_t>(n)) {
        std::size_t bi = 0, bj = 1;
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < clusters.size(); ++i) {
            for (std::size_t j = i + 1; j < clusters.size(); ++j) {
                double total = 0.0;
                for (auto a : clusters[i]) {
                    for (auto b : clusters[j]) {
                        total += (points.row(static_cast<Eigen::Index>(a)) - points.row(static_cast<Eigen::Index>(b))).norm();
                    }
                }
                const double d = total / static_cast<double>(clusters[i].size() * clusters[j].size());
                if (d < best) {
                    best = d;
                    bi = i;
                    bj = j;
                }
            }
        }
        // Clusters stay sorted by their smallest member, which is also their id.
        merges.push_back({clusters[bi].front(), clusters[bj].front(), best});
        clusters[bi].insert(clusters[bi].end(), clusters[bj].begin(), clusters[bj].end());
        std::sort(clusters[bi].begin(), clusters[bi].end());
        clusters.erase(clusters.begin() + static_cast<std::ptrdiff_t>(bj));
    }
    return merges;
}

double ari_by_pairs(const std::vector<int>& x, const std::vector<int>& y) {
    double a = 0, b = 0, c = 0, d = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        for (std::size_t j = i + 1; j < x.size(); ++j) {
            const bool sx = x[i] == x[j], sy = y[i] == y[j];
            if (sx && sy) ++a;
            else if (sx) ++b;
            else if (sy) ++c;
            else ++d;
        }
    }
    const double denom = (a + b) * (b + d) + (a + c) * (c + d);
    if (denom == 0.0) return 1.0;
    return 2.0 * (a * d - b * c) / denom;
}

double nmi_direct(const std::vector<int>& x, const std::vector<int>& y) {
    const double n = static_cast<double>(x.size());
    std::map<int, long> cx, cy;
    std::map<std::pair<int, int>, long> cxy;
    for (std::size_t e = 0; e < x.size(); ++e) {
        ++cx[x[e]];
        ++cy[y[e]];
        ++cxy[{x[e], y[e]}];
    }
    double hx = 0, hy = 0, mi = 0;
    for (auto [k, c] : cx) hx -= (c / n) * std::log(c / n);
    for (auto [k, c] : cy) hy -= (c / n) * std::log(c / n);
    if (hx == 0.0 && hy == 0.0) return 1.0;
    for (auto [k, c] : cxy) mi += (c / n) * std::log((c / n) / ((cx[k.first] / n) * (cy[k.second] / n)));
    return 2.0 * mi / (hx + hy);
}

double jaro_by_position(const std::vector<int>& a, const std::vector<int>& b) {
    const auto n = static_cast<long>(a.size());
    if (n == 0) return 1.0;
    const long window = std::max(0L, n / 2 - 1);
    std::map<int, long> pos_b;
    for (long i = 0; i < n; ++i) pos_b[b[static_cast<std::size_t>(i)]] = i;
    std::vector<std::pair<long, int>> in_a, in_b;
    for (long i = 0; i < n; ++i) {
        const int s = a[static_cast<std::size_t>(i)];
        const long j = pos_b.at(s);
        if (std::abs(i - j) <= window) {
            in_a.emplace_back(i, s);
            in_b.emplace_back(j, s);
        }
    }
    const double m = static_cast<double>(in_a.size());
    if (m == 0.0) return 0.0;
    std::sort(in_b.begin(), in_b.end());
    double half = 0;
    for (std::size_t k = 0; k < in_a.size(); ++k) half += in_a[k].second != in_b[k].second;
    const double t = half / 2.0;
    return (m / static_cast<double>(n) + m / static_cast<double>(n) + (m - t) / m) / 3.0;
}

}  // namespace floorid::testing
