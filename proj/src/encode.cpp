#include "desgrada/encode.hpp"

#include "desgrada/errors.hpp"
#include "desgrada/rng.hpp"

namespace desgrada {

SpikeTensor bernoulli_encode(const Graph& g, int T, std::uint64_t seed) {
    if (T < 1) throw ArgumentError("bernoulli_encode: T must be >= 1");
    const int n = g.node_count;
    const int f = static_cast<int>(g.features.cols());

    SpikeTensor s;
    s.T = T;
    s.node_count = n;
    s.feature_dim = f;
    s.seed = seed;
    s.values.resize(static_cast<std::size_t>(T) * static_cast<std::size_t>(n) *
                    static_cast<std::size_t>(f));

    std::size_t idx = 0;
    for (int t = 0; t < T; ++t) {
        for (int v = 0; v < n; ++v) {
            for (int j = 0; j < f; ++j, ++idx) {
                const double p = g.features(static_cast<std::size_t>(v),
                                            static_cast<std::size_t>(j));
                if (!(p >= 0.0 && p <= 1.0)) {
                    throw DomainError("bernoulli_encode: feature outside [0,1]");
                }
                const double u = to_unit(counter_hash(seed, static_cast<std::uint64_t>(t),
                                                      static_cast<std::uint64_t>(v),
                                                      static_cast<std::uint64_t>(j)));
                s.values[idx] = u < p ? 1 : 0;
            }
        }
    }
    return s;
}

} // namespace desgrada
