#pragma once

#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace contagion {

// Every ensemble kernel exists in two flavours: an OpenMP loop over
// independent work items and a plain serial loop kept as the reference
// implementation. Work items write to preassigned slots and reductions run
// serially in index order, so both flavours are bit-identical for any
// thread count.
enum class Exec { serial, openmp };

inline Exec default_exec() {
#ifdef _OPENMP
    return Exec::openmp;
#else
    return Exec::serial;
#endif
}

template <typename Body>
void for_each_index(std::size_t n, Exec mode, Body&& body) {
#ifdef _OPENMP
    if (mode == Exec::openmp) {
        #pragma omp parallel for schedule(static)
        for (long long i = 0; i < static_cast<long long>(n); ++i) {
            body(static_cast<std::size_t>(i));
        }
        return;
    }
#else
    (void)mode;
#endif
    for (std::size_t i = 0; i < n; ++i) body(i);
}

// Fixed-order sum of per-slot results; the reduction order never depends on
// the worker count.
inline double ordered_sum(const std::vector<double>& slots) {
    double acc = 0.0;
    for (double v : slots) acc += v;
    return acc;
}

struct MeanStderr {
    double mean = 0.0;
    double stderr_ = 0.0;
    std::size_t n = 0;
};

inline MeanStderr mean_stderr(const std::vector<double>& samples) {
    MeanStderr out;
    out.n = samples.size();
    if (out.n == 0) return out;
    out.mean = ordered_sum(samples) / double(out.n);
    if (out.n < 2) return out;
    double ss = 0.0;
    for (double v : samples) {
        const double dev = v - out.mean;
        ss += dev * dev;
    }
    out.stderr_ = std::sqrt(ss / (double(out.n) * double(out.n - 1)));
    return out;
}

} // namespace contagion
