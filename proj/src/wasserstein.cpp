#include "desgrada/wasserstein.hpp"

#include <algorithm>
#include <cmath>

#include "desgrada/errors.hpp"

namespace desgrada {
namespace {

// Sorted support with normalized weights; equal values merged.
std::vector<WeightedPoint> canonicalize(const std::vector<WeightedPoint>& pts) {
    if (pts.empty()) throw ArgumentError("wasserstein_1d: empty distribution");
    double total = 0.0;
    for (const auto& p : pts) {
        if (p.weight < 0.0) throw ArgumentError("wasserstein_1d: negative weight");
        total += p.weight;
    }
    if (!(total > 0.0)) throw ArgumentError("wasserstein_1d: weights sum to zero");
    std::vector<WeightedPoint> s = pts;
    std::sort(s.begin(), s.end(),
              [](const WeightedPoint& x, const WeightedPoint& y) { return x.value < y.value; });
    std::vector<WeightedPoint> merged;
    for (const auto& p : s) {
        if (p.weight == 0.0) continue;
        if (!merged.empty() && merged.back().value == p.value)
            merged.back().weight += p.weight;
        else
            merged.push_back(p);
    }
    if (merged.empty()) throw ArgumentError("wasserstein_1d: weights sum to zero");
    for (auto& p : merged) p.weight /= total;
    return merged;
}

} // namespace

double wasserstein_1d(const std::vector<WeightedPoint>& a, const std::vector<WeightedPoint>& b) {
    auto pa = canonicalize(a);
    auto pb = canonicalize(b);

    // Sweep the merged quantile grid; on each interval both inverse CDFs are
    // constant, so the integral is |va - vb| * dq.
    double dist = 0.0;
    std::size_t ia = 0, ib = 0;
    double qa = pa[0].weight; // cumulative weight through current a point
    double qb = pb[0].weight;
    double q = 0.0;
    while (true) {
        const double q_next = std::min(qa, qb);
        dist += std::abs(pa[ia].value - pb[ib].value) * (q_next - q);
        q = q_next;
        if (q >= 1.0 - 1e-15 && ia + 1 >= pa.size() && ib + 1 >= pb.size()) break;
        if (qa <= qb && ia + 1 < pa.size()) {
            ++ia;
            qa += pa[ia].weight;
        } else if (qb <= qa && ib + 1 < pb.size()) {
            ++ib;
            qb += pb[ib].weight;
        } else if (ia + 1 < pa.size()) {
            ++ia;
            qa += pa[ia].weight;
        } else if (ib + 1 < pb.size()) {
            ++ib;
            qb += pb[ib].weight;
        } else {
            break;
        }
    }
    return dist;
}

double wasserstein_1d(const std::vector<double>& a, const std::vector<double>& b) {
    auto lift = [](const std::vector<double>& v) {
        std::vector<WeightedPoint> pts;
        pts.reserve(v.size());
        const double w = v.empty() ? 0.0 : 1.0 / static_cast<double>(v.size());
        for (double x : v) pts.push_back({x, w});
        return pts;
    };
    return wasserstein_1d(lift(a), lift(b));
}

} // namespace desgrada
