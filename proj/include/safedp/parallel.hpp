#pragma once

#include <omp.h>

#include <cstddef>
#include <cstdlib>
#include <exception>
#include <string>

namespace safedp {

/// Serial kernels are the reference implementation; parallel ones must match them bit for bit.
enum class Exec { serial, parallel };

/// OpenMP worker count, capped by SAFE_MDP_THREADS when set to a positive integer.
inline int worker_count() {
    int n = omp_get_max_threads();
    if (const char* env = std::getenv("SAFE_MDP_THREADS")) {
        try {
            const int cap = std::stoi(env);
            if (cap > 0 && cap < n)
                n = cap;
        } catch (const std::exception&) {
        }
    }
    return n < 1 ? 1 : n;
}

inline int workers_for(Exec exec) { return exec == Exec::parallel ? worker_count() : 1; }

/// Runs body(k) for k in [0, n); the first exception thrown by any worker is rethrown.
template <class Body>
void parallel_for(std::size_t n, Exec exec, Body&& body) {
    if (exec == Exec::serial || n < 2) {
        for (std::size_t k = 0; k < n; ++k)
            body(k);
        return;
    }
    std::exception_ptr error;
    const auto count = static_cast<long long>(n);
#pragma omp parallel for num_threads(worker_count()) schedule(dynamic, 16)
    for (long long k = 0; k < count; ++k) {
        try {
            body(static_cast<std::size_t>(k));
        } catch (...) {
#pragma omp critical(safedp_parallel_for_error)
            if (!error)
                error = std::current_exception();
        }
    }
    if (error)
        std::rethrow_exception(error);
}

} // namespace safedp
