#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "detlab/shock_frame_sim.hpp"

using namespace detlab;
using Catch::Approx;

namespace {

WaveParams burgers_params(double q)
{
	WaveParams p;
	p.q = q;
	p.flux = ScalarFlux::burgers();
	return p;
}

std::shared_ptr<const WaveProfile> make_profile(double q, double L = 10.0)
{
	return std::make_shared<const WaveProfile>(integrate_profile(burgers_params(q), L, 1e-10));
}

// C-infinity bump on [a, b] with peak height amp.
FieldFn bump(double a, double b, double amp)
{
	return [=](double x) {
		if (x <= a || x >= b)
			return 0.0;
		const double s = (2 * x - a - b) / (b - a);
		return amp * std::exp(1.0 - 1.0 / (1.0 - s * s));
	};
}

double mass(const std::vector<double>& a, double h)
{
	double m = 0.0;
	for (double x : a)
		m += x;
	return m * h;
}

} // namespace

TEST_CASE("unperturbed state is a fixed point")
{
	auto prof = make_profile(0.09);
	const auto g = TwinGrid::make(0.02, 6.0, 4.0);
	auto s = init_state(prof, nullptr, nullptr, g);
	CHECK(s.psi_dot == prof->sigma);
	const double dt = 0.01;
	for (int n = 0; n < 200; ++n)
		s = step(s, dt);
	CHECK(sup_abs(s.v) == 0.0);
	CHECK(sup_abs(s.zeta) == 0.0);
	CHECK(s.psi == Approx(prof->sigma * s.t).epsilon(1e-14));
	const auto rep = boundary_diagnostics(s, 1.0);
	CHECK(rep.zeta_trace_mismatch == 0.0);
	CHECK(rep.psi_ratio == 0.0);
}

TEST_CASE("init_state preconditions")
{
	auto prof = make_profile(0.09);
	const auto g = TwinGrid::make(0.01, 8.0, 4.0);
	const auto s = init_state(prof, bump(-5, -4, 1e-3), nullptr, g);
	CHECK(sup_abs(s.v) == Approx(1e-3).epsilon(1e-3));
	CHECK(s.psi == 0.0);
	try {
		init_state(prof, bump(-0.05, 0.05, 1e-3), nullptr, g);
		FAIL("expected SupportTouchesShock");
	} catch (const SimError& e) {
		CHECK(e.code() == SimErrc::SupportTouchesShock);
	}
	try {
		init_state(prof, nullptr, bump(1, 2, 0.3), g);
		FAIL("expected AmplitudeTooLarge");
	} catch (const SimError& e) {
		CHECK(e.code() == SimErrc::AmplitudeTooLarge);
	}
	CHECK_THROWS_AS(TwinGrid::make(0.0, 1.0, 1.0), SimError);
}

TEST_CASE("grid layout")
{
	const auto g = TwinGrid::make(0.25, 2.0, 1.0);
	CHECK(g.n_minus == 8);
	CHECK(g.n_plus == 4);
	CHECK(g.x_minus(0) == -1.875);
	CHECK(g.x_minus(7) == -0.125);
	CHECK(g.x_plus(0) == 0.125);
	CHECK(g.h * double(g.n_minus) == g.L_minus);
}

TEST_CASE("jump condition arithmetic")
{
	auto prof = make_profile(0.09);
	auto s = init_state(prof, nullptr, nullptr, TwinGrid::make(0.1, 2.0, 2.0));
	CHECK(rh_speed(s) == 0.5);
	// constant traces 0.1 on both sides: u(0-) = 1.1, u(0+) = 0.1
	s.v.minus.back() = s.v.minus[s.v.minus.size() - 2] = 0.1;
	s.v.plus[0] = s.v.plus[1] = 0.1;
	CHECK(rh_speed(s) == Approx(0.6).epsilon(1e-14));
	s.v.plus[0] = s.v.plus[1] = 0.7;
	try {
		rh_speed(s);
		FAIL("expected DegenerateJump");
	} catch (const SimError& e) {
		CHECK(e.code() == SimErrc::DegenerateJump);
	}
}

TEST_CASE("jump speed obeys the Lipschitz bound")
{
	auto prof = make_profile(0.09);
	const double eta = 0.25;
	const double Ct = rh_lipschitz_bound(*prof, eta);
	auto s = init_state(prof, nullptr, nullptr, TwinGrid::make(0.1, 2.0, 2.0));
	std::mt19937_64 rng(5);
	double worst = 0.0;
	for (int n = 0; n < 1000; ++n) {
		const double a = uniform(rng, -eta, eta), b = uniform(rng, -eta, eta);
		s.v.minus.back() = s.v.minus[s.v.minus.size() - 2] = a;
		s.v.plus[0] = s.v.plus[1] = b;
		const double d = rh_speed(s) - prof->sigma;
		REQUIRE(d * d <= Ct * (a * a + b * b) + 1e-300);
		worst = std::max(worst, d * d / (a * a + b * b));
	}
	CHECK(worst > 0.0);
}

TEST_CASE("Courant bound is enforced")
{
	auto prof = make_profile(0.09);
	const auto g = TwinGrid::make(0.01, 4.0, 4.0);
	auto s = init_state(prof, nullptr, nullptr, g);
	CHECK_THROWS_AS(step(s, 0.05), SimError);
	CHECK_NOTHROW(step(s, 0.004));
	try {
		step(s, 1.0);
	} catch (const SimError& e) {
		CHECK(e.code() == SimErrc::CFLViolation);
	}
}

TEST_CASE("right-side mass changes only through boundary fluxes")
{
	auto prof = make_profile(0.0);
	const auto g = TwinGrid::make(0.01, 4.0, 6.0);
	auto s = init_state(prof, nullptr, nullptr, g);
	s = init_state(prof, bump(2.0, 3.0, 0.05), nullptr, g);
	const double m0 = mass(s.v.plus, g.h);
	for (int n = 0; n < 300; ++n)
		s = step(s, 0.008);
	// the bump stays interior, so both boundary fluxes vanish
	CHECK(std::abs(mass(s.v.plus, g.h) - m0) <= 1e-14);
	// numerical diffusion leaves roundoff-level tails at the shock
	CHECK(std::abs(s.psi_dot - prof->sigma) <= 1e-12);
	CHECK(sup_abs(s.zeta) <= 1e-12);
}

TEST_CASE("reactant bump on the right drifts to the shock and leaves v untouched")
{
	auto prof = make_profile(0.09);
	const auto g = TwinGrid::make(0.01, 4.0, 6.0);
	auto s = init_state(prof, nullptr, bump(3.0, 4.0, 0.05), g);
	auto centre = [&](const PerturbationState& st) {
		double m = 0.0, mx = 0.0;
		for (std::size_t j = 0; j < st.zeta.plus.size(); ++j) {
			m += st.zeta.plus[j];
			mx += st.zeta.plus[j] * g.x_plus(j);
		}
		return mx / m;
	};
	const double c0 = centre(s);
	const double dt = 0.008;
	for (int n = 0; n < 500; ++n)
		s = step(s, dt);
	for (double x : s.v.plus)
		REQUIRE(x == 0.0);
	// roundoff tails of zeta reach the left side through the reaction coupling
	CHECK(sup_abs(s.v) <= 1e-12);
	CHECK(centre(s) == Approx(c0 - prof->sigma * s.t).margin(2 * g.h));
}

TEST_CASE("empty run reports the initial observables")
{
	auto prof = make_profile(0.09);
	const auto s = init_state(prof, bump(-5, -4, 1e-3), nullptr, TwinGrid::make(0.02, 8.0, 4.0));
	const auto out = run(s, 0.0);
	CHECK(out.status == RunStatus::Completed);
	CHECK(out.T_end == 0.0);
	REQUIRE(out.history.size() == 1);
	CHECK(out.history[0].sup_v == sup_abs(s.v));
	CHECK(out.history[0].psi_dot == prof->sigma);
}

TEST_CASE("steep left-side data blows up near the characteristic time")
{
	// q = 0: v_t + (1/2 + v) v_x = 0 in the shock frame, gradient blowup at 1/m
	auto prof = make_profile(0.0);
	const auto g = TwinGrid::make(0.005, 10.0, 2.0);
	const double w = 1.0, amp = 0.2;
	auto s = init_state(prof, bump(-8.0, -8.0 + w, amp), nullptr, g);
	double m = 0.0;
	for (std::size_t j = 1; j < s.v.minus.size(); ++j)
		m = std::max(m, -(s.v.minus[j] - s.v.minus[j - 1]) / g.h);
	RunOptions opt;
	opt.rho = 1.0;
	// first-order upwind smears the forming shock, so the grid gradient saturates
	// at a few multiples of m; the sharp time oracle lives with the characteristics
	opt.grad_threshold = 2 * m;
	opt.output_interval = 0.05;
	const auto out = run(s, 10.0, opt);
	CHECK(out.status == RunStatus::GradientBlowup);
	CHECK(out.T_end > 0.8 / m);
	CHECK(out.T_end < 1.3 / m);
	CHECK(out.history.back().sup_v <= 1.05 * amp);
}

TEST_CASE("small data on a weak profile completes with the speed relaxing to sigma")
{
	auto prof = make_profile(0.01);
	const auto g = TwinGrid::make(0.02, 10.0, 4.0);
	const auto s = init_state(prof, bump(-6, -5, 1e-3), nullptr, g);
	RunOptions opt;
	opt.output_interval = 1.0;
	const auto out = run(s, 20.0, opt);
	CHECK(out.status == RunStatus::Completed);
	CHECK(out.T_end == 20.0);
	CHECK(out.history.size() == 21);
	CHECK(std::abs(out.history.back().psi_dot - prof->sigma) < 1e-5);
	for (const auto& o : out.history)
		CHECK(o.sup_v <= 2e-3);
}

TEST_CASE("first-order convergence to the Burgers characteristic solution")
{
	auto prof = make_profile(0.0);
	auto v0 = bump(-6.0, -4.0, 0.05);
	const double T = 2.0;
	// exact: v(x, T) = v0(y) with x = y + (1/2 + v0(y)) T
	auto exact = [&](double x) {
		double y = x - 0.5 * T;
		for (int it = 0; it < 200; ++it) {
			const double F = y + (0.5 + v0(y)) * T - x;
			const double d = 1e-7;
			const double dF = 1.0 + (v0(y + d) - v0(y - d)) / (2 * d) * T;
			y -= F / dF;
		}
		return v0(y);
	};
	std::vector<double> errs;
	for (double h : {0.02, 0.01, 0.005}) {
		const auto g = TwinGrid::make(h, 8.0, 2.0);
		auto s = init_state(prof, v0, nullptr, g);
		RunOptions opt;
		opt.output_interval = T;
		s = run(s, T, opt).final_state;
		double e = 0.0;
		for (std::size_t j = 0; j < g.n_minus; ++j)
			e += std::abs(s.v.minus[j] - exact(g.x_minus(j))) * h;
		errs.push_back(e);
	}
	for (std::size_t i = 1; i < errs.size(); ++i) {
		const double ratio = errs[i - 1] / errs[i];
		CHECK(ratio > 1.6);
		CHECK(ratio < 2.6);
	}
}

TEST_CASE("reactant trace mismatch shrinks under refinement")
{
	auto prof = make_profile(0.09);
	std::vector<double> mism;
	for (double h : {0.02, 0.01, 0.005}) {
		const auto g = TwinGrid::make(h, 4.0, 4.0);
		auto s = init_state(prof, nullptr, bump(0.2, 1.2, 0.01), g);
		RunOptions opt;
		opt.output_interval = 1.0;
		s = run(s, 1.0, opt).final_state;
		const auto rep = boundary_diagnostics(s, rh_lipschitz_bound(*prof, 0.25));
		CHECK(rep.zeta_trace_mismatch <= 10 * h);
		mism.push_back(rep.zeta_trace_mismatch);
	}
	CHECK(mism[1] < mism[0]);
	CHECK(mism[2] < mism[1]);
}

TEST_CASE("reactant stays within its physical range")
{
	auto prof = make_profile(0.05);
	const auto g = TwinGrid::make(0.01, 8.0, 4.0);
	const double amp = 0.02;
	auto s = init_state(prof, bump(-5, -4, 0.01), bump(-3, -2, amp), g);
	RunOptions opt;
	opt.output_interval = 1.0;
	const auto out = run(s, 5.0, opt);
	const auto& st = out.final_state;
	for (std::size_t j = 0; j < g.n_minus; ++j) {
		REQUIRE(prof->u_at(g.x_minus(j)) + st.v.minus[j] > prof->params.u_i);
		const double z = st.samples->z[j] + st.zeta.minus[j];
		REQUIRE(z >= -1e-3);
		REQUIRE(z <= 1 + amp + 1e-3);
	}
}
