#pragma once

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "blowup_lab.hpp"
#include "char_fields.hpp"
#include "config.hpp"
#include "csv.hpp"
#include "profile.hpp"
#include "shock_frame_sim.hpp"
#include "weighted_energy.hpp"

namespace detlab {

struct Check
{
	std::string name;
	bool pass = false;
	std::string detail;
};

struct ExperimentResult
{
	std::string name;
	std::vector<CsvTable> tables;
	std::vector<std::pair<std::string, double>> summary;
	std::vector<Check> checks;
	std::vector<std::pair<std::string, double>> timings; // seconds; kept out of the CSVs

	bool passed() const
	{
		for (const Check& c : checks)
			if (!c.pass)
				return false;
		return true;
	}

	double value(const std::string& key) const
	{
		for (const auto& [k, v] : summary)
			if (k == key)
				return v;
		throw std::out_of_range("no summary entry " + key);
	}

	void check(std::string what, bool ok, std::string detail = {})
	{
		checks.push_back({std::move(what), ok, std::move(detail)});
	}

	/// One CSV per table plus summary.txt in dir.
	void write(const std::string& dir) const
	{
		std::filesystem::create_directories(dir);
		for (const CsvTable& t : tables)
			t.write(dir + "/" + t.name + ".csv");
		std::ofstream f(dir + "/" + name + "_summary.txt");
		char buf[64];
		for (const auto& [k, v] : summary) {
			std::snprintf(buf, sizeof buf, "%.17g", v);
			f << k << " = " << buf << '\n';
		}
		for (const auto& [k, v] : timings) {
			std::snprintf(buf, sizeof buf, "%.3f", v);
			f << "seconds." << k << " = " << buf << '\n';
		}
		for (const Check& c : checks)
			f << "check " << c.name << ' ' << (c.pass ? "PASS" : "FAIL") << (c.detail.empty() ? "" : " " + c.detail) << '\n';
	}
};

namespace detail {

inline std::string fmt(const char* f, double a)
{
	char buf[96];
	std::snprintf(buf, sizeof buf, f, a);
	return buf;
}

inline std::string fmt(const char* f, double a, double b)
{
	char buf[128];
	std::snprintf(buf, sizeof buf, f, a, b);
	return buf;
}

class Stopwatch
{
public:
	double seconds() const { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count(); }

private:
	std::chrono::steady_clock::time_point t0_ = std::chrono::steady_clock::now();
};

inline ScalarFlux flux_of(const ExperimentConfig& c)
{
	if (c.flux_kind == "burgers")
		return ScalarFlux::burgers(c.flux_lo, c.flux_hi);
	if (c.flux_kind == "cubic")
		return ScalarFlux::cubic_convex(c.flux_lo, c.flux_hi);
	return ScalarFlux::polynomial(c.flux_coeffs, c.flux_lo, c.flux_hi);
}

inline WaveParams wave_of(const ExperimentConfig& c)
{
	WaveParams p;
	p.k = c.k;
	p.q = c.q;
	p.u0 = c.u0;
	p.u_i = c.u_i;
	p.flux = flux_of(c);
	return p;
}

inline ZndParams znd_of(const ExperimentConfig& c)
{
	ZndParams p;
	p.gamma = c.znd_gamma;
	p.c_heat = c.znd_c_heat;
	p.k = c.znd_k;
	p.q = c.znd_q;
	p.sigma = c.znd_sigma;
	p.v_plus = c.znd_v_plus;
	p.e_plus = c.znd_e_plus;
	p.T_ignition = c.znd_T_ignition;
	return p;
}

/// Mollifier bump on [a, b] with peak amp.
inline FieldFn bump_on(double a, double b, double amp)
{
	return [=](double x) { return amp * Bump::value((x - 0.5 * (a + b)) / (b - a)) / Bump::value(0.0); };
}

/// Burgers with f(0) = 0: u^2 - 2 sigma u + 2 q sigma (1 - z) = 0, larger root.
inline double burgers_profile_exact(double sigma, double q, double z)
{
	return sigma + std::sqrt(sigma * sigma - 2 * q * sigma * (1 - z));
}

inline double combined(double a, double b) { return std::sqrt(a * a + b * b); }

} // namespace detail

// ---------------------------------------------------------------------------

inline ExperimentResult run_profile(const ExperimentConfig& c)
{
	ExperimentResult r;
	r.name = "profile";
	const detail::Stopwatch sw;
	const WaveParams p = detail::wave_of(c);
	const WaveProfile prof = integrate_profile(p, c.profile_L, c.profile_tol);
	r.timings.push_back({"profile", sw.seconds()});
	const ProfileReport rep = verify_profile(prof, 1e-5);
	const bool burgers = c.flux_kind == "burgers";

	CsvTable t{"profile", {"x", "u_bar", "du_bar", "u_exact", "abs_err"}, {}};
	double worst = 0.0;
	for (std::size_t j = 0; j < prof.grid_x.size(); ++j) {
		const double x = prof.grid_x[j];
		double ex = std::nan(""), err = std::nan("");
		if (burgers) {
			ex = detail::burgers_profile_exact(prof.sigma, p.q, prof.z_at(x));
			err = std::abs(prof.u_bar[j] - ex);
			worst = std::max(worst, err);
		}
		t.add({x, prof.u_bar[j], prof.du_bar[j], ex, err});
	}
	r.tables.push_back(std::move(t));
	r.summary = {{"sigma", prof.sigma},
	             {"u_minus_inf", prof.u_minus_inf},
	             {"kappa", prof.kappa},
	             {"ode_residual", rep.ode_residual},
	             {"envelope_ratio", rep.envelope_ratio},
	             {"nodes", double(prof.grid_x.size())}};
	r.check("profile_verified", rep.ok, detail::fmt("ode residual %.3g, envelope ratio %.6f", rep.ode_residual, rep.envelope_ratio));
	if (burgers) {
		const double u_inf = detail::burgers_profile_exact(prof.sigma, p.q, 0.0);
		r.summary.push_back({"u_minus_inf_exact", u_inf});
		r.summary.push_back({"oracle_max_err", worst});
		r.check("end_state_is_quadratic_root", std::abs(prof.u_minus_inf - u_inf) <= 1e-10,
		        detail::fmt("|u_-inf - root| = %.3g", std::abs(prof.u_minus_inf - u_inf)));
		r.check("nodes_match_implicit_relation", worst <= 1e-8, detail::fmt("max node error %.3g", worst));
	}
	return r;
}

/// Fitted envelope constant along a list of q values.
inline ExperimentResult run_kappa_sweep(const ExperimentConfig& c, const std::vector<double>& qs)
{
	ExperimentResult r;
	r.name = "kappa_sweep";
	CsvTable t{"kappa_sweep", {"q", "kappa", "envelope_ratio"}, {}};
	bool monotone = true, envelopes = true;
	double prev = std::numeric_limits<double>::infinity();
	for (double q : qs) {
		ExperimentConfig cq = c;
		cq.q = q;
		const WaveProfile prof = integrate_profile(detail::wave_of(cq), c.profile_L, c.profile_tol);
		const ProfileReport rep = verify_profile(prof, 1e-5);
		t.add({q, prof.kappa, rep.envelope_ratio});
		monotone = monotone && prof.kappa < prev;
		envelopes = envelopes && rep.envelope_ok;
		prev = prof.kappa;
	}
	r.tables.push_back(std::move(t));
	r.check("envelope_holds", envelopes);
	r.check("kappa_decreasing_in_q", monotone);
	return r;
}

// ---------------------------------------------------------------------------

struct MajdaTrajectory
{
	std::vector<double> t, energy, high, low, psi_err, sup_v, sup_zeta;
};

inline MajdaTrajectory majda_trajectory(const ExperimentConfig& c, const WaveProfile& prof_in, double high_eps,
                                        const EnergyCoeffs* K, double weight_eps, double weight_C, RunStatus* status)
{
	auto prof = std::make_shared<const WaveProfile>(prof_in);
	const TwinGrid g = TwinGrid::make(c.sim_h, c.sim_L_minus, c.sim_L_plus);
	const FieldFn b = detail::bump_on(c.bump_lo, c.bump_hi, c.bump_amp);
	const PerturbationState s0 = c.bump_field == "v" ? init_state(prof, b, nullptr, g) : init_state(prof, nullptr, b, g);
	const EnergyWeights W = K ? EnergyWeights(g, weight_eps, weight_C) : EnergyWeights();
	RunOptions o;
	o.cfl = c.sim_cfl;
	o.output_interval = c.sim_output_interval;
	o.observer.names = {"energy", "high", "low"};
	o.observer.fn = [&](const PerturbationState& st) {
		const double e = K ? total_energy(st, *K, W).total : 0.0;
		const double hi = detail::combined(weighted_sobolev_norm(st.v, g, high_eps, 2, false),
		                                   weighted_sobolev_norm(st.zeta, g, high_eps, 2, false));
		const double lo = detail::combined(plain_l2_norm(st.v, g.h), plain_l2_norm(st.zeta, g.h));
		return std::vector<double>{e, hi, lo};
	};
	const RunOutcome out = run(s0, c.sim_T, o);
	if (status)
		*status = out.status;
	MajdaTrajectory m;
	for (const Observation& ob : out.history) {
		m.t.push_back(ob.t);
		m.energy.push_back(ob.extra[0]);
		m.high.push_back(ob.extra[1]);
		m.low.push_back(ob.extra[2]);
		m.psi_err.push_back(std::abs(ob.psi_dot - prof->sigma));
		m.sup_v.push_back(ob.sup_v);
		m.sup_zeta.push_back(ob.sup_zeta);
	}
	return m;
}

/// Stability run on the Majda model, plus the damping inequality along it.
inline ExperimentResult run_majda_stability(const ExperimentConfig& c)
{
	ExperimentResult r;
	r.name = c.experiment == Experiment::MajdaDamping ? "majda_damping" : "majda_stability";
	const detail::Stopwatch sw;
	const WaveProfile prof = integrate_profile(detail::wave_of(c), c.sim_L_minus + 2.0, c.profile_tol);
	EstimateConstants k = make_constants(prof, c.energy_eta, c.energy_C);
	bool feasible = true;
	try {
		select_coefficients(k, c.q);
	} catch (const EnergyError& e) {
		if (e.code() != EnergyErrc::Infeasible)
			throw;
		feasible = false;
		k.coeffs = explicit_coefficients(k.omega, k.C_tilde);
	}
	RunStatus status = RunStatus::Completed;
	const MajdaTrajectory m = majda_trajectory(c, prof, k.epsilon, &k.coeffs, k.epsilon, k.C, &status);
	r.timings.push_back({"run", sw.seconds()});

	CsvTable t{"trajectory", {"t", "energy", "h2_eps_norm", "l2_norm", "psi_dot_err", "sup_v", "sup_zeta"}, {}};
	for (std::size_t i = 0; i < m.t.size(); ++i)
		t.add({m.t[i], m.energy[i], m.high[i], m.low[i], m.psi_err[i], m.sup_v[i], m.sup_zeta[i]});
	r.tables.push_back(std::move(t));

	const double t_lo = c.energy_transient * c.sim_T;
	const DecayFit fe = fit_decay_rate(m.t, m.energy, t_lo, c.sim_T);
	// psi' relaxes to sigma exactly until the bump reaches the shock; fit where it is nonzero
	std::vector<double> tp, pp;
	for (std::size_t i = 0; i < m.t.size(); ++i)
		if (m.t[i] >= t_lo && m.psi_err[i] > 0.0) {
			tp.push_back(m.t[i]);
			pp.push_back(m.psi_err[i]);
		}
	const DecayFit fp = tp.size() >= 2 ? fit_decay_rate(tp, pp, t_lo, c.sim_T) : DecayFit{0.0, 0.0, 0};
	const double sup0 = std::max(m.sup_v.front(), m.sup_zeta.front());
	double supmax = 0.0;
	for (std::size_t i = 0; i < m.t.size(); ++i)
		supmax = std::max({supmax, m.sup_v[i], m.sup_zeta[i]});
	const double norm_rate = 0.5 * fe.theta; // energy is quadratic in the perturbation

	// damping inequality with (C, theta) read off the decay fit of the high norm
	const DecayFit fh = fit_decay_rate(m.t, m.high, t_lo, c.sim_T);
	std::vector<double> th, lh;
	for (std::size_t i = 0; i < m.t.size(); ++i)
		if (m.t[i] >= t_lo) {
			th.push_back(m.t[i]);
			lh.push_back(std::log(m.high[i]));
		}
	const LinearFit lf = linear_fit(th, lh);
	const double C_fit = std::max(1.0, std::exp(lf.intercept) / m.high.front());
	const double residual = damping_residual(m.t, m.high, m.low, C_fit, fh.theta);
	r.tables.push_back(CsvTable{"damping", {"C", "theta", "residual"}, {{C_fit, fh.theta, residual}}});

	r.summary = {{"sigma", prof.sigma},
	             {"mu", k.mu},
	             {"epsilon", k.epsilon},
	             {"omega", k.omega},
	             {"C_tilde", k.C_tilde},
	             {"kappa", k.kappa_q},
	             {"coefficients_feasible", feasible ? 1.0 : 0.0},
	             {"energy_decay_rate", fe.theta},
	             {"energy_decay_r2", fe.r2},
	             {"norm_decay_rate", norm_rate},
	             {"psi_decay_rate", fp.theta},
	             {"psi_decay_r2", fp.r2},
	             {"sup_growth", supmax / sup0},
	             {"damping_C", C_fit},
	             {"damping_theta", fh.theta},
	             {"damping_residual", residual},
	             {"completed", status == RunStatus::Completed ? 1.0 : 0.0}};
	if (c.experiment == Experiment::MajdaDamping) {
		r.check("damping_residual_nonpositive", residual <= 0.0,
		        detail::fmt("residual %.3g", residual) + detail::fmt(" at C = %.4g, theta = %.4g", C_fit, fh.theta));
	} else {
		r.check("run_completed", status == RunStatus::Completed, to_string(status));
		r.check("energy_decays", fe.theta > 0.0 && fe.r2 >= 0.98, detail::fmt("rate %.4f, r2 %.5f", fe.theta, fe.r2));
		r.check("shock_speed_decays_comparably", fp.theta > 0.0 && fp.theta >= 0.5 * norm_rate && fp.theta <= 2.0 * norm_rate,
		        detail::fmt("psi rate %.4f vs norm rate %.4f", fp.theta, norm_rate));
		r.check("sup_norm_bounded", supmax <= 2.0 * sup0, detail::fmt("growth %.4f", supmax / sup0));
	}
	return r;
}

/// Reactant bump on the right of a wave with sigma < 0, carried away from the shock.
inline ExperimentResult run_negative_speed(const ExperimentConfig& c)
{
	ExperimentResult r;
	r.name = "negative_speed";
	const WaveProfile prof = integrate_profile(detail::wave_of(c), c.sim_L_minus + 2.0, c.profile_tol);
	if (!(prof.sigma < 0.0))
		throw ConfigError(ConfigErrc::RangeError, "negative-speed needs a flux with sigma < 0");
	const detail::Stopwatch sw;
	// ||e^{alpha|x|} f||: the squared weight is e^{2 alpha |x|}
	const double a = c.energy_alpha;
	auto prof_ptr = std::make_shared<const WaveProfile>(prof);
	const TwinGrid g = TwinGrid::make(c.sim_h, c.sim_L_minus, c.sim_L_plus);
	const FieldFn b = detail::bump_on(c.bump_lo, c.bump_hi, c.bump_amp);
	const PerturbationState s0 = c.bump_field == "v" ? init_state(prof_ptr, b, nullptr, g) : init_state(prof_ptr, nullptr, b, g);
	RunOptions o;
	o.cfl = c.sim_cfl;
	o.output_interval = c.sim_output_interval;
	o.observer.fn = [&](const PerturbationState& st) {
		auto w = [&](int k) { return detail::combined(weighted_sobolev_norm(st.v, g, 2 * a, k, false),
		                                              weighted_sobolev_norm(st.zeta, g, 2 * a, k, false)); };
		return std::vector<double>{w(0), w(2), detail::combined(plain_l2_norm(st.v, g.h), plain_l2_norm(st.zeta, g.h))};
	};
	const RunOutcome out = run(s0, c.sim_T, o);
	r.timings.push_back({"run", sw.seconds()});
	std::vector<double> t, wl2, wh2, l2;
	CsvTable tab{"trajectory", {"t", "weighted_l2", "weighted_h2", "l2_norm", "sup_v", "sup_zeta"}, {}};
	for (const Observation& ob : out.history) {
		t.push_back(ob.t);
		wl2.push_back(ob.extra[0]);
		wh2.push_back(ob.extra[1]);
		l2.push_back(ob.extra[2]);
		tab.add({ob.t, ob.extra[0], ob.extra[1], ob.extra[2], ob.sup_v, ob.sup_zeta});
	}
	r.tables.push_back(std::move(tab));
	const DecayFit f = fit_decay_rate(t, wl2, 0.0, std::min(c.energy_rate_window, c.sim_T));
	const double rate = -f.theta, expected = a * std::abs(prof.sigma);

	// damping inequality, which must fail for every admissible constant pair
	CsvTable d{"damping_control", {"C", "theta", "residual"}, {}};
	bool all_positive = true;
	for (double C : {1.0, 10.0, 100.0, 1000.0})
		for (double th : {0.01, 0.1, 1.0, 10.0}) {
			const double res = damping_residual(t, wh2, l2, C, th);
			d.add({C, th, res});
			all_positive = all_positive && res > 0.0;
		}
	r.tables.push_back(std::move(d));
	r.summary = {{"sigma", prof.sigma}, {"alpha", a}, {"growth_rate", rate}, {"expected_rate", expected},
	             {"growth_r2", f.r2}};
	r.check("growth_rate_matches", std::abs(rate / expected - 1.0) <= 0.05,
	        detail::fmt("measured %.5f vs alpha|sigma| = %.5f", rate, expected));
	r.check("damping_fails_everywhere", all_positive);
	return r;
}

// ---------------------------------------------------------------------------

/// Eigen frames and interaction coefficients of the reduced gas system at random states.
inline ExperimentResult run_char_diag(const ExperimentConfig& c)
{
	ExperimentResult r;
	r.name = "char_diag";
	const ZndProfile prof = make_znd_profile(detail::znd_of(c));
	const FieldModel m = znd_reduce(prof);
	std::mt19937_64 rng(std::uint64_t(c.seed));
	CsvTable t{"eigen_states", {"x", "du_v", "du_u", "du_E", "biorthogonality", "gamma_plus_c", "spectrum_err"}, {}};
	double worst_b = 0.0, worst_g = 0.0, worst_s = 0.0;
	int accepted = 0, rejected = 0;
	const double d = m.system.delta;
	while (accepted < c.diag_states) {
		const double x = uniform(rng, -10.0, -0.05);
		Vec u(3);
		for (int j = 0; j < 3; ++j)
			u[j] = uniform(rng, -d, d);
		try {
			m.guard(x, u);
		} catch (const BlowupError&) {
			++rejected;
			continue;
		}
		++accepted;
		const EigenFrame f = eigen_frame(m.system, x, u);
		const CouplingCoeffs cc = coupling_coeffs(m.system, x, u, f);
		double g = 0.0;
		for (int i = 0; i < 3; ++i)
			g = std::max(g, std::abs(cc.gamma(i, i, i) + cc.c(i, i, i)));
		const Vec U = prof.state(x) + u;
		const PressurePartials pp = eos_pressure_partials(prof.eos, U[0], U[1], U[2]);
		const double cs = std::sqrt(pp.p * pp.p_E - pp.p_v), s = prof.par.sigma;
		const double se = std::max({std::abs(f.lambdas[0] - (cs - s)), std::abs(f.lambdas[1] + s), std::abs(f.lambdas[2] - (-cs - s))});
		const double be = f.biorthogonality_error();
		worst_b = std::max(worst_b, be);
		worst_g = std::max(worst_g, g);
		worst_s = std::max(worst_s, se);
		t.add({x, u[0], u[1], u[2], be, g, se});
	}
	r.tables.push_back(std::move(t));
	r.summary = {{"states", double(accepted)}, {"rejected", double(rejected)}, {"max_biorthogonality", worst_b},
	             {"max_gamma_plus_c", worst_g}, {"max_spectrum_err", worst_s}};
	r.check("biorthogonality", worst_b <= 1e-10, detail::fmt("max %.3g", worst_b));
	r.check("gamma_iii_equals_minus_c_iii", worst_g <= 1e-8, detail::fmt("max %.3g", worst_g));
	r.check("reduced_spectrum", worst_s <= 1e-10, detail::fmt("max %.3g", worst_s));
	return r;
}

// ---------------------------------------------------------------------------

inline BlowupRunOptions blowup_options(const ExperimentConfig& c)
{
	BlowupRunOptions o;
	o.window.h = c.blowup_h;
	o.macro_dt = c.blowup_macro_dt;
	o.seeds = c.blowup_seeds;
	o.grad_factor = c.blowup_grad_factor;
	o.amp_factor = c.blowup_amp_factor;
	return o;
}

struct ZndRunRecord
{
	double theta = 0.0;
	BlowupData data;
	BlowupReport report;
	std::vector<TrajectoryPoint> trajectory;
	double zhat_max = 0.0;
	double seconds = 0.0;
};

inline ZndRunRecord znd_single_run(const FieldModel& m, const ExperimentConfig& c, double theta)
{
	const detail::Stopwatch sw;
	ZndRunRecord rec;
	rec.theta = theta;
	double x0 = c.blowup_x0;
	if (x0 == 0.0) {
		const BlowupData probe = make_blowup_data(m.system, theta, -1.0, c.blowup_family, c.blowup_margin, 0.1, false);
		x0 = -(std::ceil(probe.required_distance) + 0.5);
	}
	rec.data = make_blowup_data(m.system, theta, x0, c.blowup_family, c.blowup_margin, 0.1, true);
	BlowupRunOptions o = blowup_options(c);
	o.T_max = rec.data.T_forecast;
	o.output_interval = rec.data.T_forecast / 400.0;
	const BlowupRun run = simulate_gas(m, rec.data, o);
	rec.report = detect_blowup(run, o.grad_factor, o.amp_factor);
	rec.trajectory = run.trajectory;
	rec.zhat_max = run.zhat_max;
	rec.seconds = sw.seconds();
	return rec;
}

/// Blowup runs of the reduced detonation model, one per theta; independent
/// runs go to worker threads and are merged in theta order.
inline ExperimentResult run_znd_blowup(const ExperimentConfig& c, int workers = 1)
{
	ExperimentResult r;
	r.name = "znd_blowup";
	const ZndProfile prof = make_znd_profile(detail::znd_of(c));
	const FieldModel m = znd_reduce(prof);
	std::vector<ZndRunRecord> recs(c.blowup_theta.size());
	if (workers > 1 && recs.size() > 1) {
		std::vector<std::future<ZndRunRecord>> fut;
		for (double th : c.blowup_theta)
			fut.push_back(std::async(std::launch::async, [&m, &c, th] { return znd_single_run(m, c, th); }));
		for (std::size_t i = 0; i < fut.size(); ++i)
			recs[i] = fut[i].get();
	} else {
		for (std::size_t i = 0; i < recs.size(); ++i)
			recs[i] = znd_single_run(m, c, c.blowup_theta[i]);
	}

	CsvTable s{"runs",
	           {"theta", "x0", "W0", "gamma_inf", "forecast", "T_star", "T_grad", "amp_growth", "grad_growth",
	            "fv_grad_growth", "zhat_max", "blowup"},
	           {}};
	for (std::size_t i = 0; i < recs.size(); ++i) {
		const ZndRunRecord& q = recs[i];
		CsvTable t{"trajectory_" + std::to_string(i),
		           {"t", "sup_amp", "sup_grad", "max_w", "min_rho", "zhat_max", "l2", "forecast"},
		           {}};
		for (const TrajectoryPoint& p : q.trajectory)
			t.add({p.t, p.sup_amp, p.sup_grad, p.max_w, p.min_rho, p.zhat_max, p.l2, q.data.T_forecast});
		r.tables.push_back(std::move(t));
		const BlowupReport& b = q.report;
		s.add({q.theta, q.data.x0, q.data.W0, q.data.gamma_inf, q.data.T_forecast, b.T_star, b.T_grad, b.amp_growth,
		       b.grad_growth, b.fv_grad_growth, q.zhat_max, b.verdict == Verdict::Blowup ? 1.0 : 0.0});
		const std::string tag = detail::fmt("theta=%g", q.theta);
		r.check(tag + ":verdict_blowup", b.verdict == Verdict::Blowup,
		        detail::fmt("amp growth %.4f, grad growth %.4g", b.amp_growth, b.grad_growth));
		r.check(tag + ":within_forecast", b.within_forecast, detail::fmt("T_star %.5g vs bound %.5g", b.T_star, b.forecast));
		r.check(tag + ":zhat_zero", q.zhat_max <= 1e-13, detail::fmt("max %.3g", q.zhat_max));
		r.check(tag + ":amplitude_bounded", b.amp_growth <= c.blowup_amp_factor);
		r.check(tag + ":gradient_grows", b.grad_growth >= c.blowup_grad_factor);
		r.check(tag + ":runtime_under_5min", q.seconds < 300.0, detail::fmt("%.1f s", q.seconds));
		r.timings.push_back({tag, q.seconds});
	}
	for (std::size_t i = 0; i + 1 < recs.size(); ++i) {
		const double ratio = recs[i + 1].report.T_star / recs[i].report.T_star;
		const double expect = recs[i].theta / recs[i + 1].theta;
		r.summary.push_back({detail::fmt("T_ratio_%g", recs[i + 1].theta), ratio});
		r.check(detail::fmt("T_star ratio theta=%g over theta=%g", recs[i + 1].theta, recs[i].theta),
		        std::abs(ratio / expect - 1.0) <= 0.2, detail::fmt("ratio %.4f vs %.4f", ratio, expect));
	}
	r.tables.insert(r.tables.begin(), std::move(s));
	r.summary.insert(r.summary.begin(), {{"T_ignition", prof.T_i}, {"sigma", prof.par.sigma}});
	return r;
}

// ---------------------------------------------------------------------------

/// Burgers far-field blowup against the exact time 1/m.
inline ExperimentResult run_scalar_blowup(const ExperimentConfig& c, const std::vector<double>& slopes)
{
	ExperimentResult r;
	r.name = "scalar_blowup";
	ExperimentConfig cb = c;
	cb.flux_kind = "burgers";
	const WaveProfile prof = integrate_profile(detail::wave_of(cb), c.profile_L, c.profile_tol);
	const FieldModel m = majda_far_field_model(prof);
	const double h = c.blowup_h;
	CsvTable t{"scalar_blowup", {"m", "W0", "T_star", "T_grad", "T_exact", "tolerance", "amp_growth", "grad_growth"}, {}};
	for (double s : slopes) {
		const BlowupData d = make_blowup_data(m.system, s / Bump::max_slope(), -40.0 / m.system.decay_rate, 0,
		                                      c.blowup_margin, 0.1, false);
		BlowupRunOptions o = blowup_options(c);
		o.T_max = 2.0 / s;
		o.output_interval = 0.01 / s;
		const BlowupRun run = simulate_gas(m, d, o);
		const BlowupReport b = detect_blowup(run, o.grad_factor, o.amp_factor);
		const double tol = 5 * h / (s * s);
		t.add({s, d.W0, b.T_star, b.T_grad, 1.0 / s, tol, b.amp_growth, b.grad_growth});
		r.check(detail::fmt("m=%g:T_star", s), std::abs(b.T_star - 1.0 / s) <= tol,
		        detail::fmt("T_star %.8f vs 1/m = %.8f", b.T_star, 1.0 / s));
		r.check(detail::fmt("m=%g:detectors_agree", s), std::abs(b.T_star - b.T_grad) <= 2 * h,
		        detail::fmt("|T_rho - T_grad| = %.3g", std::abs(b.T_star - b.T_grad)));
	}
	r.tables.push_back(std::move(t));
	return r;
}

/// Shrinking blowup data on the scalar far-field model.
inline ExperimentResult run_no_damping(const ExperimentConfig& c)
{
	ExperimentResult r;
	r.name = "no_damping";
	ExperimentConfig cb = c;
	const WaveProfile prof = integrate_profile(detail::wave_of(cb), c.profile_L, c.profile_tol);
	const FieldModel m = majda_far_field_model(prof);
	std::vector<int> ns;
	for (double n : c.nodamp_n)
		ns.push_back(int(n));
	const NoDampingReport rep = no_damping_family(m, 0, ns, c.nodamp_amplitude, c.blowup_margin, blowup_options(c));
	CsvTable t{"no_damping", {"n", "theta", "x0", "h2_initial", "l2_max", "T_star", "grad_growth", "excursion", "hyperbola_r2"}, {}};
	bool fits = true;
	for (const NoDampingRow& w : rep.rows) {
		t.add({double(w.n), w.theta, w.x0, w.h2_initial, w.l2_max, w.T_star, w.grad_growth, w.excursion ? 1.0 : 0.0,
		       w.hyperbola_r2});
		fits = fits && w.hyperbola_r2 >= 0.95;
	}
	r.tables.push_back(std::move(t));
	r.check("initial_norms_decrease", rep.norms_monotone);
	r.check("every_member_blows_up", rep.all_excursion);
	r.check("gradient_hyperbola_fit", fits);
	return r;
}

inline ExperimentResult run_experiment(const ExperimentConfig& c, int workers = 1)
{
	switch (c.experiment) {
	case Experiment::Profile: return run_profile(c);
	case Experiment::MajdaStability:
	case Experiment::MajdaDamping: return run_majda_stability(c);
	case Experiment::NegativeSpeed: return run_negative_speed(c);
	case Experiment::ZndBlowup: return run_znd_blowup(c, workers);
	case Experiment::NoDamping: return run_no_damping(c);
	}
	throw std::logic_error("unknown experiment");
}

} // namespace detlab
