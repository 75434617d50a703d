#include "otflow/parallel.hpp"

#include <atomic>
#include <cstdlib>
#include <string>
#include <thread>

namespace otflow::par {

namespace {
std::atomic<bool> g_force_serial{false};

int detect_budget() {
    if (const char* env = std::getenv("OTFLOW_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v >= 1) return static_cast<int>(v);
    }
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
#endif
}
}  // namespace

int thread_budget() {
    static const int budget = detect_budget();
    return budget;
}

void force_serial(bool on) { g_force_serial.store(on); }

bool serial_forced() { return g_force_serial.load(); }

}  // namespace otflow::par
