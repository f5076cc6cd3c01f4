#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "spectraflow/quadrature.hpp"

using namespace spectraflow;

TEST_CASE("single panel is exact on low-degree polynomials") {
	auto q = gk15_panel([](double x) { return x * x; }, 0.0, 1.0);
	CHECK(q.value == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
	q = gk15_panel([](double x) { return std::pow(x, 7) - 3.0 * x; }, -1.0, 2.0);
	CHECK(q.value == doctest::Approx(255.0 / 8.0 - 4.5).epsilon(1e-13));
}

TEST_CASE("adaptive sine integral") {
	auto q = integrate_adaptive([](double x) { return std::sin(x); },
	                            linear_seeds(0.0, M_PI, 2), 1e-13, 1e-13);
	CHECK(std::abs(q.value - 2.0) < 1e-12);
	CHECK(q.error < 1e-10);
}

TEST_CASE("adaptive gaussian") {
	auto q = integrate_adaptive([](double x) { return std::exp(-x * x); },
	                            linear_seeds(-8.0, 8.0, 4), 1e-14, 1e-13);
	CHECK(std::abs(q.value - std::sqrt(M_PI)) < 1e-12);
}

TEST_CASE("oscillatory integrand with seeded panels") {
	// int_0^10 cos(50 x) dx = sin(500)/50
	auto q = integrate_adaptive([](double x) { return std::cos(50.0 * x); },
	                            linear_seeds(0.0, 10.0, 200), 1e-13, 1e-12);
	CHECK(std::abs(q.value - std::sin(500.0) / 50.0) < 1e-11);
}

TEST_CASE("integrable endpoint spike") {
	auto q = integrate_adaptive([](double x) { return 1.0 / std::sqrt(x + 1e-300); },
	                            geometric_seeds(0.0, 1.0, 1e-6, 2.0), 1e-9, 1e-9);
	CHECK(std::abs(q.value - 2.0) < 1e-6);
}

TEST_CASE("seed builders") {
	auto s = linear_seeds(0.0, 1.0, 4);
	REQUIRE(s.size() == 5);
	CHECK(s[2] == doctest::Approx(0.5));

	auto g = geometric_seeds(1.0, 100.0, 1.0, 2.0);
	CHECK(g.front() == 1.0);
	CHECK(g.back() == 100.0);
	for (size_t i = 0; i + 1 < g.size(); ++i) CHECK(g[i] < g[i + 1]);

	auto st = stretched_seeds(0.0, 10.0, 1000.0, 1.0, 1.5);
	CHECK(st.front() == 0.0);
	CHECK(st.back() == 1000.0);
	for (size_t i = 0; i + 1 < st.size(); ++i) CHECK(st[i] < st[i + 1]);
}

TEST_CASE("bad seeds throw") {
	CHECK_THROWS(integrate_adaptive([](double) { return 0.0; }, {1.0}, 1e-8, 1e-8));
	CHECK_THROWS(integrate_adaptive([](double) { return 0.0; }, {1.0, 0.5}, 1e-8, 1e-8));
}
