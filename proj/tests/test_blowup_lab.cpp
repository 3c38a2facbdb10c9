#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "detlab/blowup_lab.hpp"
#include "detlab/shock_frame_sim.hpp"

using namespace detlab;
using Catch::Approx;

namespace {

const WaveProfile& majda_profile()
{
	static const WaveProfile prof = [] {
		WaveParams p;
		p.q = 0.09;
		p.flux = ScalarFlux::burgers(-50.0, 50.0);
		return integrate_profile(p, 10.0, 1e-10);
	}();
	return prof;
}

const ZndProfile& znd_profile()
{
	static const ZndProfile prof = make_znd_profile(ZndParams{});
	return prof;
}

// c^2 = Gamma (Gamma + 1) e / v^2 for the ideal gas
double sound_speed_closed_form(double gamma, const Vec& U)
{
	const double e = U[2] - 0.5 * U[1] * U[1];
	return std::sqrt(gamma * (gamma + 1.0) * e) / U[0];
}

BlowupData scalar_data(const FieldModel& m, double slope)
{
	const double theta = slope / Bump::max_slope();
	return make_blowup_data(m.system, theta, -40.0 / m.system.decay_rate, 0, 3.0, 0.1, false);
}

} // namespace

TEST_CASE("bump is normalised in its second derivative")
{
	double m2 = 0.0;
	for (int j = 0; j <= 200000; ++j)
		m2 = std::max(m2, std::abs(Bump::d2(-0.5 + j / 200000.0)));
	CHECK(m2 == Approx(1.0).epsilon(1e-8));
	CHECK(Bump::value(0.5) == 0.0);
	CHECK(Bump::value(-0.7) == 0.0);
	CHECK(Bump::value(0.1) == Approx(Bump::value(-0.1)).epsilon(1e-15));

	const double h = 1e-5;
	for (double t : {-0.41, -0.3, -0.12, 0.0, 0.2, 0.37}) {
		CHECK((Bump::value(t + h) - Bump::value(t - h)) / (2 * h) == Approx(Bump::d1(t)).margin(1e-9));
		CHECK((Bump::d1(t + h) - Bump::d1(t - h)) / (2 * h) == Approx(Bump::d2(t)).margin(1e-8));
	}
	double m1 = 0.0;
	for (int j = 0; j <= 200000; ++j)
		m1 = std::max(m1, Bump::d1(-0.5 + j / 200000.0));
	CHECK(Bump::max_slope() == Approx(m1).epsilon(1e-9));
}

TEST_CASE("distance requirement arithmetic")
{
	CHECK(distance_requirement(0.1, 10.0, 1.0, 0.1, 3.0) == Approx(30.0));
	CHECK(distance_requirement(0.1, 0.5, 1.0, 0.9, 2.0) == Approx(2.0));
	CHECK(distance_requirement(0.1, 0.5, 1.0, 1e-6, 1.0) == Approx(6 * std::log(10.0)));
}

TEST_CASE("znd profile solves the steady reactive equations")
{
	const ZndProfile& z = znd_profile();
	const ZndParams& par = z.par;
	const Vec Uplus = (Vec(3) << par.v_plus, 0.0, par.e_plus).finished();

	// jump at the shock: -sigma [U] + [F] = 0
	const Vec U0 = z.state(-1e-14);
	const Vec jump = -par.sigma * (U0 - Uplus) + detail::gas_flux(z.eos, U0) - detail::gas_flux(z.eos, Uplus);
	CHECK(jump.cwiseAbs().maxCoeff() < 1e-12);

	const double h = 1e-5;
	for (double x : {-0.01, -0.3, -1.0, -2.5, -6.0, -15.0}) {
		const Vec Ux = (z.state(x + h) - z.state(x - h)) / (2 * h);
		CHECK((Ux - z.state_x(x)).cwiseAbs().maxCoeff() < 1e-8);
		const Vec Fx = (detail::gas_flux(z.eos, z.state(x + h)) - detail::gas_flux(z.eos, z.state(x - h))) / (2 * h);
		const Vec res = -par.sigma * Ux + Fx;
		CHECK(std::abs(res[0]) < 1e-8);
		CHECK(std::abs(res[1]) < 1e-8);
		CHECK(res[2] == Approx(par.q * par.k * z.z(x)).margin(1e-8));
		CHECK(z.temperature_at(z.state(x)) > z.T_i);
	}
	CHECK((z.state(-200.0) - z.burnt()).cwiseAbs().maxCoeff() < 1e-12);
	CHECK(sound_speed(z.eos, z.burnt()[0], z.burnt()[1], z.burnt()[2]) > par.sigma);
}

TEST_CASE("znd profile rejects bad parameters")
{
	ZndParams p;
	p.sigma = 1.5; // below the CJ speed for q = 1
	CHECK_THROWS_AS(make_znd_profile(p), BlowupError);
	p = ZndParams{};
	p.sigma = 0.3; // subsonic ahead
	CHECK_THROWS_AS(make_znd_profile(p), BlowupError);
	p = ZndParams{};
	p.gamma = -1.0;
	try {
		make_znd_profile(p);
		FAIL("expected BadInput");
	} catch (const BlowupError& e) {
		CHECK(e.code() == BlowupErrc::BadInput);
	}
}

TEST_CASE("gas flux hessians match finite differences of the jacobian")
{
	const IdealGasEOS eos{0.4, 1.0};
	std::mt19937_64 rng(7);
	std::uniform_real_distribution<double> V(0.3, 2.0), U(-1.0, 1.0), Ei(0.5, 4.0);
	for (int n = 0; n < 50; ++n) {
		Vec s(3);
		s << V(rng), U(rng), 0.0;
		s[2] = Ei(rng) + 0.5 * s[1] * s[1];
		const auto H = detail::gas_hessians(eos, s);
		for (int b = 0; b < 3; ++b) {
			const double h = 1e-6;
			Vec sp = s, sm = s;
			sp[b] += h;
			sm[b] -= h;
			const Mat dA = (detail::gas_matrix(eos, sp) - detail::gas_matrix(eos, sm)) / (2 * h);
			for (int r = 0; r < 3; ++r)
				for (int a = 0; a < 3; ++a)
					CHECK(H[std::size_t(r)](a, b) == Approx(dA(r, a)).margin(1e-7));
		}
	}
}

TEST_CASE("reduced gas spectrum is minus c, zero, c")
{
	const ZndProfile& z = znd_profile();
	std::mt19937_64 rng(11);
	std::uniform_real_distribution<double> V(0.3, 2.0), U(-1.0, 1.0), Ei(0.5, 4.0);
	for (int n = 0; n < 200; ++n) {
		Vec s(3);
		s << V(rng), U(rng), 0.0;
		s[2] = Ei(rng) + 0.5 * s[1] * s[1];
		const EigenFrame f = eigen_frame_of(detail::gas_matrix(z.eos, s));
		const double c = sound_speed_closed_form(z.eos.gamma, s);
		CHECK(f.lambdas[0] == Approx(c).margin(1e-10));
		CHECK(std::abs(f.lambdas[1]) < 1e-10);
		CHECK(f.lambdas[2] == Approx(-c).margin(1e-10));
	}
	// shock frame: shifted by -sigma
	const FieldModel m = znd_reduce(z);
	const Vec Ub = z.burnt();
	const EigenFrame f = eigen_frame(m.system, -80.0, Vec::Zero(3));
	const double c = sound_speed(z.eos, Ub[0], Ub[1], Ub[2]);
	CHECK(f.lambdas[0] == Approx(c - z.par.sigma).margin(1e-10));
	CHECK(f.lambdas[1] == Approx(-z.par.sigma).margin(1e-10));
	CHECK(f.lambdas[2] == Approx(-c - z.par.sigma).margin(1e-10));
}

TEST_CASE("reduced znd quasilinear form matches the conservative flux")
{
	const FieldModel m = znd_reduce(znd_profile());
	auto u = [](double x) {
		Vec a(3);
		a << 0.02 * std::sin(3 * x), 0.03 * std::cos(2 * x), -0.05 * std::sin(x);
		return a;
	};
	auto ux = [](double x) {
		Vec a(3);
		a << 0.06 * std::cos(3 * x), -0.06 * std::sin(2 * x), -0.05 * std::cos(x);
		return a;
	};
	const double h = 1e-5;
	for (double x : {-0.05, -0.4, -1.3, -3.0, -7.0}) {
		const Vec dH = (m.flux(x + h, u(x + h)) - m.flux(x - h, u(x - h))) / (2 * h);
		const Vec q = m.system.matrix(x, u(x)) * ux(x) + m.system.source(x, u(x)) * u(x);
		CHECK((dH - q).cwiseAbs().maxCoeff() < 1e-7);
	}
	CHECK(m.system.source(-3.0, Vec::Zero(3)).cwiseAbs().maxCoeff() > 0.0);
	CHECK((m.flux(-2.0, Vec::Zero(3))).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("majda far-field model matches its conservative flux")
{
	const FieldModel m = majda_far_field_model(majda_profile());
	const double h = 1e-5;
	auto u = [](double x) { return 0.1 * std::sin(2 * x); };
	for (double x : {-0.3, -1.0, -4.0}) {
		const double dH = (m.flux(x + h, Vec::Constant(1, u(x + h)))[0] - m.flux(x - h, Vec::Constant(1, u(x - h)))[0]) / (2 * h);
		const Vec uv = Vec::Constant(1, u(x));
		const double q = m.system.matrix(x, uv)(0, 0) * 0.2 * std::cos(2 * x) + m.system.source(x, uv)(0, 0) * u(x);
		CHECK(dH == Approx(q).margin(1e-8));
	}
}

TEST_CASE("blowup data for scalar burgers")
{
	const FieldModel m = majda_far_field_model(majda_profile());
	const BlowupData d = make_blowup_data(m.system, 0.2, -30.0, 0, 3.0, 0.1, false);
	CHECK(d.W0 == Approx(0.2 * Bump::max_slope()).epsilon(1e-5));
	CHECK(d.direction[0] == 1.0);
	CHECK(d.gamma_inf == Approx(-1.0).epsilon(1e-6));
	CHECK(d.family_dominates);
	CHECK(d.u0(-30.0)[0] == Approx(0.2 * Bump::value(0.0)));
	CHECK(d.u0(-29.4)[0] == 0.0);

	CHECK_THROWS_AS(make_blowup_data(m.system, 0.2, -3.0, 0), BlowupError);
	try {
		make_blowup_data(m.system, 0.2, -3.0, 0);
	} catch (const BlowupError& e) {
		CHECK(e.code() == BlowupErrc::DistanceTooSmall);
	}
	// the requirement is a sharp predicate on d
	const double req = d.required_distance;
	CHECK(req == Approx(3.0 * std::max({1.0, d.T_forecast, std::abs(std::log(d.W0))})));
	CHECK_NOTHROW(make_blowup_data(m.system, 0.2, -(req + 0.5 + 1e-6), 0));
	CHECK_THROWS_AS(make_blowup_data(m.system, 0.2, -(req + 0.5 - 1e-3), 0), BlowupError);
	CHECK_THROWS_AS(make_blowup_data(m.system, 0.0, -100.0, 0), BlowupError);
}

TEST_CASE("off-family components of the data vanish at second order")
{
	const FieldModel m = znd_reduce(znd_profile());
	const BlowupData a = make_blowup_data(m.system, 1e-2, -60.0, 2, 3.0, 0.1, false);
	const BlowupData b = make_blowup_data(m.system, 5e-3, -60.0, 2, 3.0, 0.1, false);
	CHECK(a.family_dominates);
	CHECK(a.w_family / b.w_family == Approx(2.0).epsilon(1e-3));
	// off/on ratio proportional to theta
	const double ra = a.w_other / a.w_family, rb = b.w_other / b.w_family;
	CHECK(ra / rb == Approx(2.0).epsilon(0.05));
	CHECK(ra < 0.1);
}

TEST_CASE("non-genuinely-nonlinear family is rejected")
{
	const FieldModel m = znd_reduce(znd_profile());
	try {
		make_blowup_data(m.system, 0.1, -60.0, 1, 3.0, 0.1, false);
		FAIL("expected NotGenuinelyNonlinear");
	} catch (const BlowupError& e) {
		CHECK(e.code() == BlowupErrc::NotGenuinelyNonlinear);
	}
	CHECK_THROWS_AS(make_blowup_data(m.system, 0.1, -60.0, 3), BlowupError);
}

TEST_CASE("zero data stays zero and the reactant channel contracts")
{
	const FieldModel m = znd_reduce(znd_profile());
	const BlowupData d = make_blowup_data(m.system, 0.0, -60.0, 2, 3.0, 0.1, false);
	CHECK(d.W0 == 0.0);
	BlowupRunOptions o;
	o.T_max = 1.0;
	const BlowupRun r = simulate_gas(m, d, o);
	for (const TrajectoryPoint& p : r.trajectory) {
		CHECK(p.sup_amp == 0.0);
		CHECK(p.zhat_max == 0.0);
	}
	CHECK(detect_blowup(r, 1e3, 2.0).verdict == Verdict::NoBlowup);

	std::mt19937_64 rng(3);
	std::uniform_real_distribution<double> noise(-1e-12, 1e-12);
	const WindowOptions wo;
	WindowSim sim(m, -60.0, -2.0, wo, [](double) { return Vec::Zero(3); }, [&](double) { return noise(rng); });
	const double z0 = sim.reactant_max();
	double prev = z0;
	for (int k = 0; k < 20; ++k) {
		sim.advance_to(0.05 * (k + 1));
		CHECK(sim.reactant_max() <= prev * (1 + 1e-14));
		prev = sim.reactant_max();
	}
	CHECK(prev <= z0 * std::exp(-0.9 * 1.0));
}

TEST_CASE("window guards reject unphysical and cold states")
{
	const FieldModel m = znd_reduce(znd_profile());
	const WindowOptions wo;
	auto cold = [](double) { return (Vec(3) << 0.0, 0.0, -2.5).finished(); };
	try {
		WindowSim sim(m, -60.0, -2.0, wo, cold);
		FAIL("expected a temperature violation");
	} catch (const BlowupError& e) {
		CHECK(e.code() == BlowupErrc::TemperatureGuardViolated);
	}
	auto squashed = [](double) { return (Vec(3) << -1.0, 0.0, 0.0).finished(); };
	try {
		WindowSim sim(m, -60.0, -2.0, wo, squashed);
		FAIL("expected a nonphysical state");
	} catch (const BlowupError& e) {
		CHECK(e.code() == BlowupErrc::NonPhysicalState);
	}
	WindowOptions bad;
	bad.cfl = 1.5;
	CHECK_THROWS_AS(WindowSim(m, -60.0, -2.0, bad, [](double) { return Vec::Zero(3); }), BlowupError);
}

TEST_CASE("window finite volumes conserve mass while the support is interior")
{
	const FieldModel m = majda_far_field_model(majda_profile());
	const BlowupData d = scalar_data(m, 0.5);
	const double s = eigen_frame(m.system, d.x0, Vec::Zero(1)).lambdas[0];
	WindowSim sim(m, d.x0, s, WindowOptions{}, [&](double x) { return d.u0(x); });
	const double mass0 = sim.field().sum() * sim.h();
	sim.advance_to(1.0);
	CHECK(sim.field().sum() * sim.h() == Approx(mass0).epsilon(1e-12));
	CHECK(sim.sup_amp() <= d.theta * Bump::value(0.0) * (1 + 1e-12));
	CHECK(sim.centre() == Approx(d.x0 + s));
}

TEST_CASE("scalar blowup time matches the characteristic oracle")
{
	const FieldModel m = majda_far_field_model(majda_profile());
	const double h = WindowOptions{}.h;
	for (double slope : {0.5, 1.0, 2.0}) {
		const BlowupData d = scalar_data(m, slope);
		BlowupRunOptions o;
		o.T_max = 2.0 / slope;
		o.output_interval = 0.01 / slope;
		const BlowupRun r = simulate_gas(m, d, o);
		const BlowupReport rep = detect_blowup(r, o.grad_factor, o.amp_factor);
		CHECK(rep.verdict == Verdict::Blowup);
		CHECK(std::abs(rep.T_star - 1.0 / slope) <= 5 * h / (slope * slope));
		CHECK(std::abs(rep.T_star - rep.T_grad) <= 2 * h);
		CHECK(rep.within_forecast);
		CHECK(rep.amp_growth <= 2.0);
		CHECK(rep.grad_growth >= 1e3);
		CHECK(rep.fv_grad_growth > 1.0);
		CHECK(r.ensemble.cause != BlowupCause::None);
	}
}

TEST_CASE("blowup time scales like one over theta and ignores the distance")
{
	const FieldModel m = majda_far_field_model(majda_profile());
	const double c = m.system.decay_rate;
	auto run_at = [&](double theta, double x0) {
		const BlowupData d = make_blowup_data(m.system, theta, x0, 0, 3.0, 0.1, false);
		BlowupRunOptions o;
		o.T_max = 3.0 / d.W0;
		return detect_blowup(simulate_gas(m, d, o), o.grad_factor, o.amp_factor).T_star;
	};
	const double T1 = run_at(10.0, -40.0 / c);
	const double T2 = run_at(5.0, -40.0 / c);
	CHECK(T2 / T1 == Approx(2.0).epsilon(0.2));
	const double T3 = run_at(10.0, -80.0 / c);
	CHECK(std::abs(T3 - T1) / T1 < 0.01);
}

TEST_CASE("stable majda run is not flagged")
{
	WaveParams p;
	p.q = 0.01;
	p.flux = ScalarFlux::burgers();
	auto prof = std::make_shared<const WaveProfile>(integrate_profile(p, 10.0, 1e-10));
	const auto g = TwinGrid::make(0.01, 10.0, 4.0);
	auto v0 = [](double x) { return 1e-3 * Bump::value(x + 5.5) / Bump::value(0.0); };
	const auto s = init_state(prof, v0, nullptr, g);
	RunOptions ro;
	ro.output_interval = 0.5;
	const RunOutcome out = run(s, 10.0, ro);
	std::vector<TrajectoryPoint> traj;
	for (const Observation& o : out.history) {
		TrajectoryPoint tp;
		tp.t = o.t;
		tp.sup_amp = o.sup_v;
		tp.sup_grad = o.sup_vx;
		traj.push_back(tp);
	}
	const BlowupReport rep = detect_blowup(traj, 1e3, 2.0);
	CHECK(rep.verdict == Verdict::NoBlowup);
	CHECK(std::isinf(rep.T_star));
	CHECK(rep.grad_growth < 10.0);
}

TEST_CASE("shrinking family still reaches the excursion")
{
	const FieldModel m = majda_far_field_model(majda_profile());
	const NoDampingReport rep = no_damping_family(m, 0, {1, 2, 4}, 2.0, 3.0, BlowupRunOptions{});
	REQUIRE(rep.rows.size() == 3);
	CHECK(rep.norms_monotone);
	CHECK(rep.all_excursion);
	for (const NoDampingRow& r : rep.rows) {
		CHECK(r.hyperbola_r2 >= 0.95);
		CHECK(r.T_star * r.theta * Bump::max_slope() == Approx(1.0).epsilon(0.01));
		// amplitude times support width bounds the L2 norm
		CHECK(r.l2_max <= r.theta * Bump::value(0.0) * (1 + 1e-9));
	}
	CHECK(rep.rows[0].h2_initial / rep.rows[2].h2_initial == Approx(2.5).epsilon(0.01));
	CHECK_THROWS_AS(no_damping_family(m, 0, {-1}, 2.0, 3.0, BlowupRunOptions{}), BlowupError);
}
