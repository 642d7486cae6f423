#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "contagion/parallel.hpp"
#include "contagion/rng.hpp"
#include "contagion/simulate.hpp"
#include "contagion/value.hpp"
#include "support/fixtures.hpp"

#include <cmath>
#include <set>

using namespace contagion;

TEST_CASE("substreams are reproducible and purpose/path disjoint") {
    Substream a(42, 7, Stream::thinning);
    Substream b(42, 7, Stream::thinning);
    Substream c(42, 7, Stream::marks);
    Substream d(42, 8, Stream::thinning);
    Substream e(43, 7, Stream::thinning);
    for (int i = 0; i < 100; ++i) {
        const double va = a.uniform();
        CHECK(va == b.uniform());
        CHECK(va != c.uniform());
        CHECK(va != d.uniform());
        CHECK(va != e.uniform());
        CHECK(va > 0.0);
        CHECK(va < 1.0);
    }
}

TEST_CASE("uniforms look uniform, gaussians look standard") {
    Substream u(1, 0, Stream::aux);
    Substream g(1, 1, Stream::gauss);
    const int n = 200000;
    double su = 0.0, suu = 0.0, sg = 0.0, sgg = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = u.uniform();
        su += x;
        suu += x * x;
        const double y = g.gauss();
        sg += y;
        sgg += y * y;
    }
    CHECK(su / n == doctest::Approx(0.5).epsilon(0.01));
    CHECK(suu / n - (su / n) * (su / n) == doctest::Approx(1.0 / 12.0).epsilon(0.02));
    CHECK(std::abs(sg / n) <= 3.0 / std::sqrt(double(n)));
    CHECK(sgg / n == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("exponential draws have unit mean") {
    Substream s(9, 0, Stream::thinning);
    const int n = 100000;
    double acc = 0.0;
    for (int i = 0; i < n; ++i) acc += s.exponential();
    CHECK(acc / n == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("ensemble reductions are identical under serial and OpenMP execution") {
    const auto hp = fixtures::hawkes1(2.0, 1.0, 1.3, 0.9);
    const auto fn = [](const std::vector<double>& lam) { return lam[0] * lam[0]; };
    const MeanStderr serial =
        discounted_integral_mc(hp, {1.3}, 0.3, 15.0, 0.05, 800, 5, Exec::serial, fn);
    const MeanStderr openmp =
        discounted_integral_mc(hp, {1.3}, 0.3, 15.0, 0.05, 800, 5, Exec::openmp, fn);
    CHECK(serial.mean == openmp.mean);
    CHECK(serial.stderr_ == openmp.stderr_);
}

TEST_CASE("the parallel flavour actually runs multithreaded when available") {
#ifdef _OPENMP
    CHECK(default_exec() == Exec::openmp);
#else
    CHECK(default_exec() == Exec::serial);
#endif
}

TEST_CASE("path simulation is reproducible across repeated construction") {
    const auto hp = fixtures::hawkes1(2.0, 1.0, 1.0, 1.0);
    const std::vector<JumpLaw> laws{JumpLaw::deterministic(0.3)};
    const HawkesPath a = simulate_hawkes(hp, laws, 5.0, 123, 11);
    const HawkesPath b = simulate_hawkes(hp, laws, 5.0, 123, 11);
    REQUIRE(a.log.events.size() == b.log.events.size());
    for (std::size_t i = 0; i < a.log.events.size(); ++i) {
        CHECK(a.log.events[i].t == b.log.events[i].t);
        CHECK(a.log.events[i].cls == b.log.events[i].cls);
        CHECK(a.log.events[i].z == b.log.events[i].z);
    }
}

TEST_CASE("distinct paths decorrelate event counts") {
    const auto hp = fixtures::hawkes1(2.0, 1.0, 1.0, 0.5);
    const std::vector<JumpLaw> laws{JumpLaw::deterministic(0.3)};
    std::set<std::size_t> distinct;
    for (std::size_t p = 0; p < 64; ++p) {
        distinct.insert(simulate_hawkes(hp, laws, 5.0, 2222, p).log.events.size());
    }
    CHECK(distinct.size() >= 3);
}
