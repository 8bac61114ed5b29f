#include "dtrti/kernels.hpp"

#include "dtrti/errors.hpp"
#include "kernels_detail.hpp"

#include <atomic>
#include <cmath>

namespace dtrti::kernels {

namespace detail {

namespace {

double gauss_kernel_sum_scalar(const double* pts, const double* w, std::size_t n, double x, double inv_h) {
    double acc = 0.0;
    if (w == nullptr) {
        for (std::size_t i = 0; i < n; ++i) {
            const double t = (x - pts[i]) * inv_h;
            acc += std::exp(-0.5 * t * t);
        }
    } else {
        for (std::size_t i = 0; i < n; ++i) {
            const double t = (x - pts[i]) * inv_h;
            acc += w[i] * std::exp(-0.5 * t * t);
        }
    }
    return acc;
}

std::size_t count_in_range_scalar(const double* v, std::size_t n, double lo, double hi) {
    std::size_t count = 0;
    for (std::size_t i = 0; i < n; ++i) {
        count += (v[i] >= lo) & (v[i] <= hi);
    }
    return count;
}

} // namespace

const Vtable scalar_vtable = {&gauss_kernel_sum_scalar, &count_in_range_scalar};

} // namespace detail

namespace {

bool cpu_has_avx2() {
#if defined(DTRTI_HAVE_AVX2)
    return __builtin_cpu_supports("avx2");
#else
    return false;
#endif
}

const detail::Vtable* table_for(Backend b) {
    switch (b) {
    case Backend::scalar:
        return &detail::scalar_vtable;
    case Backend::avx2:
#if defined(DTRTI_HAVE_AVX2)
        return &detail::avx2_vtable;
#else
        break;
#endif
    }
    return nullptr;
}

Backend auto_backend() {
    return cpu_has_avx2() ? Backend::avx2 : Backend::scalar;
}

struct Dispatch {
    std::atomic<const detail::Vtable*> table;
    std::atomic<Backend> backend;
    Dispatch() {
        const Backend b = auto_backend();
        backend.store(b);
        table.store(table_for(b));
    }
};

Dispatch& dispatch() {
    static Dispatch d;
    return d;
}

} // namespace

Backend active_backend() { return dispatch().backend.load(); }

bool backend_available(Backend b) {
    if (b == Backend::scalar) return true;
    return cpu_has_avx2();
}

void force_backend(Backend b) {
    if (!backend_available(b)) {
        throw ContractError("kernel backend not available on this machine: " + backend_name(b));
    }
    dispatch().backend.store(b);
    dispatch().table.store(table_for(b));
}

void reset_backend() { force_backend(auto_backend()); }

std::string backend_name(Backend b) {
    switch (b) {
    case Backend::scalar: return "scalar";
    case Backend::avx2: return "avx2";
    }
    return "unknown";
}

double gauss_kernel_sum(const double* pts, const double* w, std::size_t n, double x, double inv_h) {
    return dispatch().table.load()->gauss_kernel_sum(pts, w, n, x, inv_h);
}

std::size_t count_in_range(const double* v, std::size_t n, double lo, double hi) {
    return dispatch().table.load()->count_in_range(v, n, lo, hi);
}

} // namespace dtrti::kernels
