// parallel.hpp — Deterministic fan-out over independent work items. Items are
// grouped into fixed-size chunks; chunk results are reduced in index order, so
// the result is identical for any worker count (QFL_WORKERS caps it).

#pragma once

#include <algorithm>
#include <cstdlib>
#include <future>
#include <string>
#include <thread>
#include <vector>

namespace qfc {

inline std::size_t worker_count() {
    std::size_t n = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("QFL_WORKERS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && v > 0) n = std::min<std::size_t>(n, static_cast<std::size_t>(v));
    }
    return n;
}

// per_chunk(first, last) -> R for items [first, last); reduce(R) called in
// chunk order. Single-threaded when workers == 1.
template <class R, class PerChunk, class Reduce>
void parallel_chunks(std::size_t n_items, std::size_t chunk_size, PerChunk per_chunk,
                     Reduce reduce) {
    if (n_items == 0) return;
    chunk_size = std::max<std::size_t>(1, chunk_size);
    const std::size_t workers = worker_count();
    if (workers == 1) {
        for (std::size_t first = 0; first < n_items; first += chunk_size) {
            reduce(per_chunk(first, std::min(first + chunk_size, n_items)));
        }
        return;
    }
    const std::size_t n_chunks = (n_items + chunk_size - 1) / chunk_size;
    std::vector<std::future<R>> inflight;
    std::size_t launched = 0;
    std::size_t reduced = 0;
    const std::size_t max_inflight = 2 * workers;
    while (reduced < n_chunks) {
        while (launched < n_chunks && inflight.size() < max_inflight) {
            const std::size_t first = launched * chunk_size;
            const std::size_t last = std::min(first + chunk_size, n_items);
            inflight.push_back(std::async(std::launch::async, per_chunk, first, last));
            ++launched;
        }
        reduce(inflight.front().get());
        inflight.erase(inflight.begin());
        ++reduced;
    }
}

} // namespace qfc
