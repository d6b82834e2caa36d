// Serial reference vs OpenMP forward pass on large empirical measures.
#include <chrono>
#include <cstdio>
#include <omp.h>

#include "drnet/construct.hpp"
#include "drnet/dfnn.hpp"
#include "drnet/measure.hpp"

using namespace drnet;

namespace {

template <class F>
double best_of(int reps, F&& fn) {
    double best = 1e300;
    for (int r = 0; r < reps; ++r) {
        const auto t0 = std::chrono::steady_clock::now();
        fn();
        best = std::min(best, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    }
    return best;
}

}  // namespace

int main() {
    std::printf("threads=%d\n", omp_get_max_threads());
    std::printf("%-12s %4s %8s %12s %12s %8s %s\n", "target", "N", "atoms", "serial_ms", "openmp_ms", "speedup",
                "equal");
    for (const char* id : {"radial-sin", "poly-cubic"}) {
        const auto t = shipped_target(id);
        for (std::size_t N : {4, 16}) {
            const auto r = build(t, N, 1);
            for (std::size_t n : {1000, 100000}) {
                const auto mu = sample_measure(DistributionSpec::uniform_ball(r.dim), n, 7);
                double a = 0.0, b = 0.0;
                const double ts = best_of(3, [&] { a = r.net.forward_reference(mu); });
                const double tp = best_of(3, [&] { b = r.net.forward(mu); });
                std::printf("%-12s %4zu %8zu %12.3f %12.3f %8.2f %s\n", id, N, n, 1e3 * ts, 1e3 * tp, ts / tp,
                            a == b ? "yes" : "no");
            }
        }
    }
}
