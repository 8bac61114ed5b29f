#pragma once

#include <cstddef>

// Internal dispatch table shared between the kernel translation units.

namespace dtrti::kernels::detail {

struct Vtable {
    double (*gauss_kernel_sum)(const double*, const double*, std::size_t, double, double);
    std::size_t (*count_in_range)(const double*, std::size_t, double, double);
};

extern const Vtable scalar_vtable;

#if defined(DTRTI_HAVE_AVX2)
extern const Vtable avx2_vtable;
#endif

} // namespace dtrti::kernels::detail
