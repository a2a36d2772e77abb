#include "ofsim/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>

namespace ofsim::fft {
namespace {

// FFTW planning is not thread-safe; execution with the new-array interface is.
struct PlanCache {
    std::mutex mutex;
    std::map<std::pair<std::size_t, int>, fftw_plan> plans;

    ~PlanCache()
    {
        for (auto& [key, plan] : plans) fftw_destroy_plan(plan);
    }

    fftw_plan get(std::size_t n, int sign)
    {
        std::lock_guard lock(mutex);
        auto key = std::make_pair(n, sign);
        if (auto it = plans.find(key); it != plans.end()) return it->second;
        CVec scratch(n);
        auto* buf = reinterpret_cast<fftw_complex*>(scratch.data());
        fftw_plan plan = fftw_plan_dft_1d(static_cast<int>(n), buf, buf, sign,
                                          FFTW_ESTIMATE | FFTW_UNALIGNED);
        if (!plan) throw Error("fftw: failed to create plan");
        plans.emplace(key, plan);
        return plan;
    }
};

PlanCache& cache()
{
    static PlanCache instance;
    return instance;
}

void execute(std::span<Complex> data, int sign)
{
    if (data.empty()) return;
    fftw_plan plan = cache().get(data.size(), sign);
    auto* buf = reinterpret_cast<fftw_complex*>(data.data());
    fftw_execute_dft(plan, buf, buf);
}

}  // namespace

void forward(std::span<Complex> data) { execute(data, FFTW_FORWARD); }

void inverse(std::span<Complex> data)
{
    execute(data, FFTW_BACKWARD);
    const double scale = 1.0 / static_cast<double>(data.size());
    for (auto& v : data) v *= scale;
}

CVec forward_copy(const CVec& data)
{
    CVec out = data;
    forward(out);
    return out;
}

CVec inverse_copy(const CVec& data)
{
    CVec out = data;
    inverse(out);
    return out;
}

}  // namespace ofsim::fft
