#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "sva/kernels.hpp"
#include "sva/rng.hpp"

using namespace sva;

namespace {

std::vector<double> random_vector(std::mt19937_64& rng, std::size_t n, double scale = 1.0) {
    std::vector<double> v(n);
    for (auto& x : v) x = scale * (2.0 * uniform_unit(rng) - 1.0);
    return v;
}

}  // namespace

TEST_CASE("scalar kernels compute the plain definitions") {
    const std::vector<double> a{1.0, -2.0, 3.0};
    const std::vector<double> b{4.0, 5.0, -6.0};
    CHECK(kernels::scalar::dot(a.data(), b.data(), 3) == doctest::Approx(1 * 4 - 2 * 5 - 3 * 6));
    CHECK(kernels::scalar::sum(a.data(), 3) == doctest::Approx(2.0));
    CHECK(kernels::scalar::sumsq(a.data(), 3) == doctest::Approx(14.0));
    CHECK(kernels::scalar::squared_distance(a.data(), b.data(), 3) == doctest::Approx(9.0 + 49.0 + 81.0));

    std::vector<double> re{3.0, 0.0};
    std::vector<double> im{4.0, -2.0};
    std::vector<double> mag(2);
    kernels::scalar::magnitudes(re.data(), im.data(), mag.data(), 2);
    CHECK(mag[0] == doctest::Approx(5.0));
    CHECK(mag[1] == doctest::Approx(2.0));

    std::vector<double> s{1.0, 2.0};
    kernels::scalar::scale(s.data(), 2, 0.5);
    CHECK(s[0] == doctest::Approx(0.5));
    kernels::scalar::add_scalar(s.data(), 2, 1.0);
    CHECK(s[1] == doctest::Approx(2.0));
}

#ifdef SVA_HAVE_AVX2_KERNELS
TEST_CASE("avx2 kernels match the scalar reference") {
    if (!kernels::backend_available(kernels::Backend::avx2)) {
        MESSAGE("avx2 not available on this host; skipping");
        return;
    }
    std::mt19937_64 rng(0x4e31ull);
    for (const std::size_t n : {0ul, 1ul, 3ul, 4ul, 7ul, 8ul, 17ul, 64ul, 1500ul, 6001ul}) {
        const auto a = random_vector(rng, n, 3.0);
        const auto b = random_vector(rng, n, 2.0);
        const double tol = 1e-12 * (static_cast<double>(n) + 1.0);

        CHECK(kernels::avx2::dot(a.data(), b.data(), n) ==
              doctest::Approx(kernels::scalar::dot(a.data(), b.data(), n)).epsilon(tol));
        CHECK(kernels::avx2::sum(a.data(), n) ==
              doctest::Approx(kernels::scalar::sum(a.data(), n)).epsilon(tol));
        CHECK(kernels::avx2::sumsq(a.data(), n) ==
              doctest::Approx(kernels::scalar::sumsq(a.data(), n)).epsilon(tol));
        CHECK(kernels::avx2::squared_distance(a.data(), b.data(), n) ==
              doctest::Approx(kernels::scalar::squared_distance(a.data(), b.data(), n)).epsilon(tol));

        std::vector<double> mag_scalar(n), mag_avx2(n);
        kernels::scalar::magnitudes(a.data(), b.data(), mag_scalar.data(), n);
        kernels::avx2::magnitudes(a.data(), b.data(), mag_avx2.data(), n);
        for (std::size_t i = 0; i < n; ++i) {
            CHECK(mag_avx2[i] == doctest::Approx(mag_scalar[i]).epsilon(1e-14));
        }

        auto s1 = a, s2 = a;
        kernels::scalar::scale(s1.data(), n, 1.7);
        kernels::avx2::scale(s2.data(), n, 1.7);
        CHECK(s1 == s2);
        kernels::scalar::add_scalar(s1.data(), n, -0.3);
        kernels::avx2::add_scalar(s2.data(), n, -0.3);
        CHECK(s1 == s2);
    }
}
#endif

TEST_CASE("backend dispatch can be forced and restored") {
    const kernels::Backend original = kernels::active_backend();
    kernels::force_backend(kernels::Backend::scalar);
    CHECK(kernels::active_backend() == kernels::Backend::scalar);
    const std::vector<double> a{1.0, 2.0, 3.0, 4.0, 5.0};
    CHECK(kernels::sum(a.data(), a.size()) == doctest::Approx(15.0));
    if (kernels::backend_available(kernels::Backend::avx2)) {
        kernels::force_backend(kernels::Backend::avx2);
        CHECK(kernels::active_backend() == kernels::Backend::avx2);
        CHECK(kernels::sum(a.data(), a.size()) == doctest::Approx(15.0));
    }
    kernels::force_backend(original);
}
