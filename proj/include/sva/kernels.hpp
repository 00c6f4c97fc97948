#pragma once

#include <cstddef>
#include <string_view>

// Vector arithmetic kernels behind the feature, graph and clustering math.
// Every kernel has a scalar reference implementation and, on x86-64, an AVX2
// variant compiled into a separate translation unit. The dispatched entry
// points select a backend once at startup (CPU probe, overridable with the
// SVA_KERNEL_BACKEND environment variable or force_backend()); scalar and
// SIMD variants are equivalence-tested against each other.

namespace sva::kernels {

enum class Backend { scalar, avx2 };

/// Backend the dispatched entry points currently use.
Backend active_backend();

/// Override the dispatch, e.g. to pin the scalar reference path in tests.
/// Throws sva::Error if the requested backend is unavailable on this host.
void force_backend(Backend backend);

/// True if `backend` can run on this machine.
bool backend_available(Backend backend);

std::string_view backend_name(Backend backend);

// Dispatched entry points.
double dot(const double* a, const double* b, std::size_t n);
double sum(const double* a, std::size_t n);
double sumsq(const double* a, std::size_t n);
double squared_distance(const double* a, const double* b, std::size_t n);
void magnitudes(const double* re, const double* im, double* out, std::size_t n);
void scale(double* a, std::size_t n, double factor);
void add_scalar(double* a, std::size_t n, double value);

// Reference implementations: plain sequential loops, always available.
namespace scalar {
double dot(const double* a, const double* b, std::size_t n);
double sum(const double* a, std::size_t n);
double sumsq(const double* a, std::size_t n);
double squared_distance(const double* a, const double* b, std::size_t n);
void magnitudes(const double* re, const double* im, double* out, std::size_t n);
void scale(double* a, std::size_t n, double factor);
void add_scalar(double* a, std::size_t n, double value);
}  // namespace scalar

#if defined(__x86_64__) || defined(_M_X64)
#define SVA_HAVE_AVX2_KERNELS 1
// AVX2+FMA variants. Call only when backend_available(Backend::avx2).
namespace avx2 {
double dot(const double* a, const double* b, std::size_t n);
double sum(const double* a, std::size_t n);
double sumsq(const double* a, std::size_t n);
double squared_distance(const double* a, const double* b, std::size_t n);
void magnitudes(const double* re, const double* im, double* out, std::size_t n);
void scale(double* a, std::size_t n, double factor);
void add_scalar(double* a, std::size_t n, double value);
}  // namespace avx2
#endif

}  // namespace sva::kernels
