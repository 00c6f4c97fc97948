#include "sva/kernels.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <string>

#include "sva/error.hpp"

namespace sva::kernels {

namespace scalar {

double dot(const double* a, const double* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

double sum(const double* a, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i];
    return acc;
}

double sumsq(const double* a, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i] * a[i];
    return acc;
}

double squared_distance(const double* a, const double* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = a[i] - b[i];
        acc += d * d;
    }
    return acc;
}

void magnitudes(const double* re, const double* im, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = std::sqrt(re[i] * re[i] + im[i] * im[i]);
}

void scale(double* a, std::size_t n, double factor) {
    for (std::size_t i = 0; i < n; ++i) a[i] *= factor;
}

void add_scalar(double* a, std::size_t n, double value) {
    for (std::size_t i = 0; i < n; ++i) a[i] += value;
}

}  // namespace scalar

namespace {

struct KernelTable {
    double (*dot)(const double*, const double*, std::size_t);
    double (*sum)(const double*, std::size_t);
    double (*sumsq)(const double*, std::size_t);
    double (*squared_distance)(const double*, const double*, std::size_t);
    void (*magnitudes)(const double*, const double*, double*, std::size_t);
    void (*scale)(double*, std::size_t, double);
    void (*add_scalar)(double*, std::size_t, double);
    Backend backend;
};

constexpr KernelTable kScalarTable = {
    scalar::dot,    scalar::sum,   scalar::sumsq,      scalar::squared_distance,
    scalar::magnitudes, scalar::scale, scalar::add_scalar, Backend::scalar,
};

#ifdef SVA_HAVE_AVX2_KERNELS
constexpr KernelTable kAvx2Table = {
    avx2::dot,    avx2::sum,   avx2::sumsq,      avx2::squared_distance,
    avx2::magnitudes, avx2::scale, avx2::add_scalar, Backend::avx2,
};
#endif

bool avx2_supported() {
#ifdef SVA_HAVE_AVX2_KERNELS
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

const KernelTable* table_for(Backend backend) {
#ifdef SVA_HAVE_AVX2_KERNELS
    if (backend == Backend::avx2) return &kAvx2Table;
#endif
    (void)backend;
    return &kScalarTable;
}

const KernelTable* detect_table() {
    if (const char* env = std::getenv("SVA_KERNEL_BACKEND")) {
        const std::string name(env);
        if (name == "scalar") return &kScalarTable;
        if (name == "avx2" && avx2_supported()) return table_for(Backend::avx2);
    }
    return avx2_supported() ? table_for(Backend::avx2) : &kScalarTable;
}

std::atomic<const KernelTable*>& active_table() {
    static std::atomic<const KernelTable*> table{detect_table()};
    return table;
}

}  // namespace

Backend active_backend() { return active_table().load()->backend; }

bool backend_available(Backend backend) {
    return backend == Backend::scalar || (backend == Backend::avx2 && avx2_supported());
}

void force_backend(Backend backend) {
    if (!backend_available(backend)) {
        throw Error("kernel backend '" + std::string(backend_name(backend)) + "' is not available on this machine");
    }
    active_table().store(table_for(backend));
}

std::string_view backend_name(Backend backend) {
    switch (backend) {
        case Backend::scalar: return "scalar";
        case Backend::avx2: return "avx2";
    }
    return "unknown";
}

double dot(const double* a, const double* b, std::size_t n) { return active_table().load()->dot(a, b, n); }
double sum(const double* a, std::size_t n) { return active_table().load()->sum(a, n); }
double sumsq(const double* a, std::size_t n) { return active_table().load()->sumsq(a, n); }
double squared_distance(const double* a, const double* b, std::size_t n) {
    return active_table().load()->squared_distance(a, b, n);
}
void magnitudes(const double* re, const double* im, double* out, std::size_t n) {
    active_table().load()->magnitudes(re, im, out, n);
}
void scale(double* a, std::size_t n, double factor) { active_table().load()->scale(a, n, factor); }
void add_scalar(double* a, std::size_t n, double value) { active_table().load()->add_scalar(a, n, value); }

}  // namespace sva::kernels
