#include "fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <utility>

namespace dbf::detail {

namespace {

// FFTW planning is not thread-safe; execution on a shared plan with
// fftw_execute_dft is. Plans are created once per (size, direction).
class PlanCache {
public:
    ~PlanCache() {
        for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
    }

    fftw_plan get(std::size_t n, bool inverse) {
        std::lock_guard lock(mutex_);
        auto key = std::make_pair(n, inverse);
        if (auto it = plans_.find(key); it != plans_.end()) return it->second;
        std::vector<std::complex<double>> scratch(n);
        auto* buf = reinterpret_cast<fftw_complex*>(scratch.data());
        fftw_plan plan = fftw_plan_dft_1d(static_cast<int>(n), buf, buf, inverse ? FFTW_BACKWARD : FFTW_FORWARD,
                                          FFTW_ESTIMATE | FFTW_UNALIGNED);
        plans_.emplace(key, plan);
        return plan;
    }

private:
    std::mutex mutex_;
    std::map<std::pair<std::size_t, bool>, fftw_plan> plans_;
};

PlanCache& cache() {
    static PlanCache instance;
    return instance;
}

}  // namespace

void fft(std::span<std::complex<double>> data, bool inverse) {
    if (data.empty()) return;
    auto plan = cache().get(data.size(), inverse);
    auto* buf = reinterpret_cast<fftw_complex*>(data.data());
    fftw_execute_dft(plan, buf, buf);
}

std::size_t fft_size_for(std::size_t n) {
    std::size_t size = 1;
    while (size < n) size <<= 1;
    return size;
}

}  // namespace dbf::detail
