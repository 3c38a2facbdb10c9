#include <catch_amalgamated.hpp>

#include <random>

#include "detlab/flux_models.hpp"

using namespace detlab;
using Catch::Approx;

TEST_CASE("burgers flux values")
{
	const auto f = ScalarFlux::burgers();
	CHECK(flux_eval(f, 1.0, 0) == 0.5);
	CHECK(flux_eval(f, 0.0, 1) == 0.0);
	CHECK(flux_eval(f, 2.0, 2) == 1.0);
	CHECK(flux_eval(f, 3.0, 3) == 0.0);
}

TEST_CASE("flux errors")
{
	const auto f = ScalarFlux::burgers(-1.0, 1.0);
	try {
		flux_eval(f, 1.5, 0);
		FAIL("expected OutOfInterval");
	} catch (const FluxError& e) {
		CHECK(e.code() == FluxErrc::OutOfInterval);
	}
	try {
		flux_eval(f, 0.5, 4);
		FAIL("expected UnsupportedOrder");
	} catch (const FluxError& e) {
		CHECK(e.code() == FluxErrc::UnsupportedOrder);
	}
}

TEST_CASE("polynomial flux matches hand-expanded derivatives")
{
	// f = 2 - u + 3u^2 + 0.5u^3
	const auto f = ScalarFlux::polynomial({2.0, -1.0, 3.0, 0.5}, -5, 5);
	const double u = 1.3;
	CHECK(flux_eval(f, u, 0) == Approx(2 - u + 3 * u * u + 0.5 * u * u * u));
	CHECK(flux_eval(f, u, 1) == Approx(-1 + 6 * u + 1.5 * u * u));
	CHECK(flux_eval(f, u, 2) == Approx(6 + 3 * u));
	CHECK(flux_eval(f, u, 3) == Approx(3.0));
	const auto cube = ScalarFlux::polynomial({0, 0, 0, 1}, -2, 2);
	CHECK(flux_eval(cube, 1.0, 0) == 1.0);
}

TEST_CASE("flux derivatives agree with central differences on random points")
{
	std::mt19937_64 rng(7);
	const std::vector<ScalarFlux> fluxes{ScalarFlux::burgers(-3, 3), ScalarFlux::cubic_convex(-0.9, 3),
										 ScalarFlux::polynomial({0.1, -1.0, 0.5, 0.2}, -3, 3)};
	const double step = 1e-5;
	for (const auto& f : fluxes) {
		for (int s = 0; s < 10000; ++s) {
			const double u = uniform(rng, f.lo + step, f.hi - step);
			for (int n = 0; n <= 2; ++n) {
				const double fd = (flux_eval(f, u + step, n) - flux_eval(f, u - step, n)) / (2 * step);
				const double exact = flux_eval(f, u, n + 1);
				REQUIRE(std::abs(exact - fd) <= 1e-6 * (1 + std::abs(exact)));
			}
		}
	}
}

TEST_CASE("eos partials closed form")
{
	const IdealGasEOS eos{0.4, 1.0};
	const auto pp = eos_pressure_partials(eos, 1.0, 0.0, 1.0);
	CHECK(pp.p == Approx(0.4));
	CHECK(pp.p_v == Approx(-0.4));
	CHECK(pp.p_u == Approx(0.0).margin(1e-15));
	CHECK(pp.p_E == Approx(0.4));
	CHECK(eos_pressure_partials(eos, 2.0, 0.0, 1.0).p == Approx(0.2));
	CHECK(eos_pressure_partials(eos, 1.0, 1.0, 1.5).p == Approx(0.4));
	CHECK_THROWS_AS(eos_pressure_partials(eos, 0.0, 0.0, 1.0), FluxError);
	CHECK_THROWS_AS(eos_pressure_partials(eos, 1.0, 2.0, 1.0), FluxError);
}

TEST_CASE("eos partials agree with central differences")
{
	const IdealGasEOS eos{0.4, 1.0};
	std::mt19937_64 rng(11);
	auto p = [&](double v, double u, double E) { return eos_pressure_partials(eos, v, u, E).p; };
	for (int s = 0; s < 1000; ++s) {
		const double v = uniform(rng, 0.3, 3.0), u = uniform(rng, -2.0, 2.0);
		const double E = 0.5 * u * u + uniform(rng, 0.2, 4.0);
		const auto pp = eos_pressure_partials(eos, v, u, E);
		const double d = 1e-6;
		const double fv = (p(v + d, u, E) - p(v - d, u, E)) / (2 * d);
		const double fu = (p(v, u + d, E) - p(v, u - d, E)) / (2 * d);
		const double fE = (p(v, u, E + d) - p(v, u, E - d)) / (2 * d);
		REQUIRE(std::abs(fv - pp.p_v) <= 1e-6 * (1 + std::abs(pp.p_v)));
		REQUIRE(std::abs(fu - pp.p_u) <= 1e-6 * (1 + std::abs(pp.p_u)));
		REQUIRE(std::abs(fE - pp.p_E) <= 1e-6 * (1 + std::abs(pp.p_E)));
	}
}

TEST_CASE("sound speed")
{
	const IdealGasEOS eos{0.4, 1.0};
	CHECK(sound_speed(eos, 1.0, 0.0, 1.0) == Approx(std::sqrt(0.56)).epsilon(1e-14));
	CHECK(sound_speed(eos, 2.0, 0.0, 1.0) == Approx(std::sqrt(0.56) / 2).epsilon(1e-14));
	CHECK(sound_speed(eos, 1.0, 0.0, 1.0) == Approx(0.7483315).epsilon(1e-7));
	try {
		sound_speed(IdealGasEOS{0.0, 1.0}, 1.0, 0.0, 1.0);
		FAIL("expected NotHyperbolic");
	} catch (const FluxError& e) {
		CHECK(e.code() == FluxErrc::NotHyperbolic);
	}
	std::mt19937_64 rng(3);
	for (int s = 0; s < 1000; ++s) {
		const double v = uniform(rng, 0.3, 3.0), u = uniform(rng, -2.0, 2.0);
		const double E = 0.5 * u * u + uniform(rng, 0.2, 4.0);
		const auto pp = eos_pressure_partials(eos, v, u, E);
		const double c = sound_speed(eos, v, u, E);
		const double scale = std::abs(pp.p * pp.p_E) + std::abs(pp.p_v);
		REQUIRE(std::abs(c * c + pp.p_v - pp.p * pp.p_E) <= 1e-12 * scale);
		const double e = E - 0.5 * u * u;
		REQUIRE(c == Approx(std::sqrt(0.4 * 1.4 * e) / v).epsilon(1e-12));
	}
}

TEST_CASE("flux increment matches the plain difference")
{
	std::mt19937_64 rng(13);
	const std::vector<ScalarFlux> fluxes{ScalarFlux::burgers(-3, 3), ScalarFlux::cubic_convex(-0.9, 3),
										 ScalarFlux::polynomial({0.1, -1.0, 0.5, 0.2}, -3, 3),
										 ScalarFlux::polynomial({0.0, 1.0, 0.0, 0.0, 0.1}, -3, 3)};
	for (const auto& f : fluxes) {
		CHECK(flux_increment(f, 0.5, 0.0) == 0.0);
		for (int s = 0; s < 1000; ++s) {
			const double u = uniform(rng, -0.4, 1.0), dv = uniform(rng, -0.4, 1.0);
			const double diff = flux_eval(f, u + dv, 0) - flux_eval(f, u, 0);
			REQUIRE(flux_increment(f, u, dv) == Approx(diff).margin(1e-14));
		}
	}
	// no cancellation for tiny increments: Burgers gives dv (u + dv/2)
	CHECK(flux_increment(ScalarFlux::burgers(), 1.0, 1e-20) == 1e-20);
	CHECK_THROWS_AS(flux_increment(ScalarFlux::burgers(-1, 1), 0.5, 1.0), FluxError);
}
