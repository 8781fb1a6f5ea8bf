#include "fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>

namespace qspde::fft {
namespace {

// The FFTW planner is not thread-safe; execution with the new-array interface
// is. Plans are created once per size under a lock and kept for the process
// lifetime. FFTW_UNALIGNED lets the plans run on any std::vector buffer, and
// FFTW_ESTIMATE keeps the chosen algorithm (and so the bits) deterministic.
struct Plans {
    fftw_plan r2c = nullptr;
    fftw_plan c2r = nullptr;
};

class PlanCache {
public:
    ~PlanCache() {
        for (auto& [n, p] : plans_) {
            fftw_destroy_plan(p.r2c);
            fftw_destroy_plan(p.c2r);
        }
    }

    const Plans& get(std::size_t n) {
        std::lock_guard lock(mutex_);
        auto it = plans_.find(n);
        if (it != plans_.end()) return it->second;
        std::vector<double> real(n);
        std::vector<std::complex<double>> cplx(n / 2 + 1);
        const int len = static_cast<int>(n);
        const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
        Plans p;
        p.r2c = fftw_plan_dft_r2c_1d(len, real.data(),
                                     reinterpret_cast<fftw_complex*>(cplx.data()), flags);
        p.c2r = fftw_plan_dft_c2r_1d(len, reinterpret_cast<fftw_complex*>(cplx.data()),
                                     real.data(), flags | FFTW_DESTROY_INPUT);
        return plans_.emplace(n, p).first->second;
    }

private:
    std::mutex mutex_;
    std::map<std::size_t, Plans> plans_;
};

PlanCache& cache() {
    static PlanCache instance;
    return instance;
}

}  // namespace

Spectrum forward(std::span<const double> in) {
    const std::size_t n = in.size();
    const Plans& p = cache().get(n);
    std::vector<double> buffer(in.begin(), in.end());
    Spectrum out(n / 2 + 1);
    fftw_execute_dft_r2c(p.r2c, buffer.data(), reinterpret_cast<fftw_complex*>(out.data()));
    return out;
}

std::vector<double> inverse(std::span<const std::complex<double>> in, std::size_t n) {
    const Plans& p = cache().get(n);
    std::vector<std::complex<double>> buffer(in.begin(), in.begin() + static_cast<std::ptrdiff_t>(n / 2 + 1));
    std::vector<double> out(n);
    fftw_execute_dft_c2r(p.c2r, reinterpret_cast<fftw_complex*>(buffer.data()), out.data());
    const double scale = 1.0 / static_cast<double>(n);
    for (double& v : out) v *= scale;
    return out;
}

}  // namespace qspde::fft
