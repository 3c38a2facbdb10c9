#include <catch_amalgamated.hpp>

#include <cmath>

#include "detlab/profile.hpp"

using namespace detlab;
using Catch::Approx;

namespace {

WaveParams burgers_params(double q, double k = 1.0, double u0 = 1.0)
{
	WaveParams p;
	p.k = k;
	p.q = q;
	p.u0 = u0;
	p.u_i = 0.5 * u0;
	p.flux = ScalarFlux::burgers();
	return p;
}

// Burgers: integrating (f(u) - sigma u)' = k q z gives u^2 - 2 sigma u + 2 q sigma (1 - z) = 0 with f(0) = 0.
double burgers_exact(double sigma, double q, double z)
{
	return sigma + std::sqrt(sigma * sigma - 2 * q * sigma * (1 - z));
}

} // namespace

TEST_CASE("speed from the jump condition")
{
	CHECK(compute_speed(burgers_params(0.09)) == 0.5);
	CHECK(compute_speed(burgers_params(0.09, 1.0, 2.0)) == 1.0);
	WaveParams p = burgers_params(0.0);
	p.flux = ScalarFlux::polynomial({0, 0, 0, 1}, -3, 3);
	CHECK(compute_speed(p) == 1.0);
}

TEST_CASE("reactant profile")
{
	WaveParams p = burgers_params(0.09);
	CHECK(reactant_profile(p, 0.5, -1.0) == Approx(std::exp(-2.0)));
	CHECK(reactant_profile(p, 0.5, 0.0) == 1.0);
	p.k = 2.0;
	CHECK(reactant_profile(p, 1.0, -0.5) == Approx(std::exp(-1.0)));
	CHECK_THROWS_AS(reactant_profile(p, 0.0, -1.0), ProfileError);
}

TEST_CASE("existence checks")
{
	CHECK(check_existence(burgers_params(0.09)) == Approx(0.9).margin(1e-11));
	CHECK(check_existence(burgers_params(0.0)) == 1.0);
	try {
		check_existence(burgers_params(0.3));
		FAIL("expected NoRoot");
	} catch (const ProfileError& e) {
		CHECK(e.code() == ProfileErrc::Inadmissible);
		CHECK(e.detail() == int(Inadmissibility::NoRoot));
	}
	// q = 0.2: root 0.5 + sqrt(0.05) > u_i, gap f'(u) - sigma stays positive
	CHECK(check_existence(burgers_params(0.2)) == Approx(0.5 + std::sqrt(0.05)).margin(1e-11));
	// concave flux: f'(u0) = 0 < sigma
	WaveParams c = burgers_params(0.0);
	c.flux = ScalarFlux::polynomial({0, 1, -0.5}, -3, 3);
	try {
		check_existence(c);
		FAIL("expected inadmissible");
	} catch (const ProfileError& e) {
		CHECK(e.code() == ProfileErrc::Inadmissible);
		CHECK(e.detail() == int(Inadmissibility::DegenerateCharacteristic));
	}
}

TEST_CASE("admissibility is monotone in |q|")
{
	// find the admissibility edge on a q sweep, then check every smaller q
	double last_ok = 0.0;
	for (int s = 1; s <= 60; ++s) {
		const double q = 0.005 * s;
		try {
			check_existence(burgers_params(q));
			CHECK(last_ok == Approx(q - 0.005));
			last_ok = q;
		} catch (const ProfileError&) {
		}
	}
	CHECK(last_ok == Approx(0.245)); // roots of u^2 - u + q stay above 1/2 while q < 1/4
}

TEST_CASE("burgers profile matches the implicit relation")
{
	const WaveParams p = burgers_params(0.09);
	const auto prof = integrate_profile(p, 8.0, 1e-11);
	CHECK(prof.sigma == 0.5);
	CHECK(prof.u_minus_inf == Approx(0.9).margin(1e-11));
	double worst = 0.0;
	for (std::size_t j = 0; j < prof.grid_x.size(); ++j) {
		const double z = std::exp(prof.grid_x[j] / prof.sigma);
		worst = std::max(worst, std::abs(prof.u_bar[j] - burgers_exact(prof.sigma, p.q, z)));
	}
	CHECK(worst <= 10 * 1e-9);
	const double xm = -std::log(10.0) / 2;
	CHECK(prof.u_at(xm) == Approx(0.9111).margin(5e-5));
	CHECK(prof.u_at(xm) == Approx(burgers_exact(0.5, 0.09, 0.1)).margin(1e-9));
	for (std::size_t j = 0; j + 1 < prof.grid_x.size(); ++j) {
		REQUIRE(prof.u_bar[j] > prof.u_minus_inf);
		REQUIRE(prof.u_bar[j] < p.u0);
		REQUIRE(prof.u_bar[j] <= prof.u_bar[j + 1]);
		REQUIRE(flux_eval(p.flux, prof.u_bar[j], 1) > prof.sigma);
	}
	CHECK(prof.sigma > flux_eval(p.flux, 0.0, 1));
}

TEST_CASE("oracle agreement over several admissible parameter sets")
{
	for (double k : {0.5, 1.0, 2.0})
		for (double qf : {0.01, 0.05, 0.1})
			for (double u0 : {1.0, 1.5}) {
				const WaveParams p = burgers_params(qf * u0 * u0, k, u0);
				const double tol = 1e-10;
				const auto prof = integrate_profile(p, 6.0, tol);
				double worst = 0.0;
				for (std::size_t j = 0; j < prof.grid_x.size(); ++j) {
					const double z = std::exp(k * prof.grid_x[j] / prof.sigma);
					worst = std::max(worst, std::abs(prof.u_bar[j] - burgers_exact(prof.sigma, p.q, z)));
				}
				REQUIRE(worst <= 10 * tol);
			}
}

TEST_CASE("constant profile at q = 0")
{
	const auto prof = integrate_profile(burgers_params(0.0), 5.0, 1e-10);
	for (double u : prof.u_bar)
		CHECK(u == 1.0);
	CHECK(prof.kappa == 0.0);
	const auto rep = verify_profile(prof, 1e-12);
	CHECK(rep.ok);
	CHECK(rep.kappa == 0.0);
}

TEST_CASE("tail decays at the reactant rate")
{
	const WaveParams p = burgers_params(0.09);
	const double L = 6.0;
	const auto prof = integrate_profile(p, L, 1e-13);
	const double r = (prof.u_at(-L) - prof.u_minus_inf) / (prof.u_at(-L / 2) - prof.u_minus_inf);
	const double expected = std::exp(-p.k * L / (2 * prof.sigma));
	CHECK(std::abs(r / expected - 1.0) < 0.1);
}

TEST_CASE("verify_profile reports small residuals and a valid envelope")
{
	const auto prof = integrate_profile(burgers_params(0.09), 8.0, 1e-11);
	const auto rep = verify_profile(prof, 1e-5);
	CHECK(rep.ode_residual < 1e-5);
	CHECK(rep.envelope_ok);
	CHECK(rep.rh_residual == 0.0);
	CHECK(rep.ok);
	CHECK(rep.kappa > 0.0);
}

TEST_CASE("closed-form second and third derivatives match differences of the interpolant")
{
	const auto prof = integrate_profile(burgers_params(0.09), 6.0, 1e-13);
	for (double x : {-0.3, -1.0, -2.5}) {
		const double d = 1e-3;
		const auto a = prof.derivatives(x, prof.u_at(x));
		const auto ap = prof.derivatives(x + d, prof.u_at(x + d));
		const auto am = prof.derivatives(x - d, prof.u_at(x - d));
		CHECK((ap[0] - am[0]) / (2 * d) == Approx(a[1]).epsilon(1e-5));
		CHECK((ap[1] - am[1]) / (2 * d) == Approx(a[2]).epsilon(1e-5));
	}
}

TEST_CASE("kappa shrinks with q")
{
	double prev = 1e300;
	for (double q : {0.09, 0.05, 0.01, 0.001}) {
		const auto prof = integrate_profile(burgers_params(q), 8.0, 1e-11);
		CHECK(prof.kappa < prev);
		prev = prof.kappa;
	}
}
