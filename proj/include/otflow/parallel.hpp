#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace otflow::par {

// Worker cap: OTFLOW_THREADS when set, otherwise machine parallelism.
int thread_budget();

// Force the serial reference path regardless of the thread budget. Used by
// the tests that pin the OpenMP kernels against the serial implementation
// and by the benchmark tool.
void force_serial(bool on);
bool serial_forced();

// Independent-iteration loop. Iterations must not share mutable state.
template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn) {
#ifdef _OPENMP
    if (!serial_forced() && thread_budget() > 1 && n > 1) {
        const int threads = thread_budget();
#pragma omp parallel for schedule(static) num_threads(threads)
        for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
            fn(static_cast<std::size_t>(i));
        }
        return;
    }
#endif
    for (std::size_t i = 0; i < n; ++i) fn(i);
}

// Deterministic reduction: items are grouped into fixed-size chunks, each
// chunk accumulates serially in index order, and chunk partials are combined
// in ascending chunk order. The summation tree depends only on (n, chunk),
// never on the thread count, so serial and OpenMP runs are bit-identical.
//
// Acc must be default-constructible or built via `make`; `item(acc, i)` folds
// item i into a chunk accumulator; `join(total, acc)` folds chunk partials.
template <typename Acc, typename Make, typename Item, typename Join>
Acc chunked_reduce(std::size_t n, std::size_t chunk, Make&& make, Item&& item,
                   Join&& join) {
    if (chunk == 0) chunk = 1;
    const std::size_t n_chunks = (n + chunk - 1) / chunk;
    std::vector<Acc> partials;
    partials.reserve(n_chunks);
    for (std::size_t c = 0; c < n_chunks; ++c) partials.push_back(make());

    parallel_for(n_chunks, [&](std::size_t c) {
        const std::size_t lo = c * chunk;
        const std::size_t hi = lo + chunk < n ? lo + chunk : n;
        for (std::size_t i = lo; i < hi; ++i) item(partials[c], i);
    });

    Acc total = make();
    for (std::size_t c = 0; c < n_chunks; ++c) join(total, partials[c]);
    return total;
}

// Scalar convenience wrapper over chunked_reduce.
template <typename Item>
double chunked_sum(std::size_t n, std::size_t chunk, Item&& item) {
    return chunked_reduce<double>(
        n, chunk, [] { return 0.0; },
        [&](double& acc, std::size_t i) { acc += item(i); },
        [](double& total, const double& acc) { total += acc; });
}

}  // namespace otflow::par
