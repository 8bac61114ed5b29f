#pragma once

#include <cstddef>
#include <string>

// Hot arithmetic loops shared by the density and Monte Carlo code. Each
// kernel has a scalar reference implementation and, on x86-64 with AVX2, a
// vectorized variant selected at runtime. The variants are equivalence-tested
// against the scalar reference; callers see one function.

namespace dtrti::kernels {

enum class Backend { scalar, avx2 };

/// Backend currently wired into the dispatch table.
Backend active_backend();

/// True if the named backend can run on this machine.
bool backend_available(Backend b);

/// Pins the dispatch table to a backend (testing hook). Throws if unavailable.
void force_backend(Backend b);

/// Restores automatic backend selection.
void reset_backend();

std::string backend_name(Backend b);

/// Sum of Gaussian kernel terms: sum_i w[i] * exp(-0.5 * ((x - pts[i]) * inv_h)^2).
/// Pass w == nullptr for unit weights.
double gauss_kernel_sum(const double* pts, const double* w, std::size_t n, double x, double inv_h);

/// Number of elements v[i] with lo <= v[i] <= hi.
std::size_t count_in_range(const double* v, std::size_t n, double lo, double hi);

} // namespace dtrti::kernels
