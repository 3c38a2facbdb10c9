#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "common.hpp"
#include "profile.hpp"

namespace detlab {

enum class SimErrc { InvalidGrid, SupportTouchesShock, AmplitudeTooLarge, DegenerateJump, CFLViolation };
using SimError = Failure<SimErrc>;

/// Cell-centred nodes on [-L_minus, 0) and (0, L_plus]; no node sits on the shock.
/// Both sides are stored in ascending x.
struct TwinGrid
{
	double h = 0.01;
	double L_minus = 1.0;
	double L_plus = 1.0;
	std::size_t n_minus = 0;
	std::size_t n_plus = 0;

	static TwinGrid make(double h, double L_minus, double L_plus)
	{
		if (!(h > 0.0) || !(L_minus >= 4 * h) || !(L_plus >= 4 * h))
			throw SimError(SimErrc::InvalidGrid, "TwinGrid: need h > 0 and at least four nodes per side");
		TwinGrid g;
		g.h = h;
		g.n_minus = std::size_t(std::llround(L_minus / h));
		g.n_plus = std::size_t(std::llround(L_plus / h));
		g.L_minus = double(g.n_minus) * h;
		g.L_plus = double(g.n_plus) * h;
		return g;
	}

	double x_minus(std::size_t j) const { return -(double(n_minus - j) - 0.5) * h; }
	double x_plus(std::size_t j) const { return (double(j) + 0.5) * h; }
};

struct TwinField
{
	std::vector<double> minus;
	std::vector<double> plus;
};

/// Profile data frozen on the left nodes.
struct ProfileSamples
{
	std::vector<double> u, du, f_u, z, dz;
};

inline ProfileSamples sample_profile(const WaveProfile& prof, const TwinGrid& g)
{
	ProfileSamples s;
	const std::size_t n = g.n_minus;
	s.u.resize(n);
	s.du.resize(n);
	s.f_u.resize(n);
	s.z.resize(n);
	s.dz.resize(n);
	for (std::size_t j = 0; j < n; ++j) {
		const double x = g.x_minus(j);
		s.u[j] = prof.u_at(x);
		s.du[j] = prof.slope(x, s.u[j]);
		s.f_u[j] = flux_eval(prof.params.flux, s.u[j], 0);
		s.z[j] = prof.z_at(x);
		s.dz[j] = prof.dz_at(x);
	}
	return s;
}

struct PerturbationState
{
	TwinGrid grid;
	TwinField v;
	TwinField zeta;
	double psi = 0.0;
	double psi_dot = 0.0;
	double t = 0.0;
	std::shared_ptr<const WaveProfile> profile;
	std::shared_ptr<const ProfileSamples> samples;
};

/// Linear one-sided extrapolation of the two nodes nearest the shock.
inline double trace_minus(const std::vector<double>& a)
{
	const std::size_t n = a.size();
	return 1.5 * a[n - 1] - 0.5 * a[n - 2];
}

inline double trace_plus(const std::vector<double>& a) { return 1.5 * a[0] - 0.5 * a[1]; }

namespace detail {

/// psi' written as sigma plus a correction built from flux increments, so zero
/// traces give sigma exactly and small traces lose no digits.
inline double rh_speed_from_traces(const WaveParams& p, double sigma, double vm, double vp)
{
	const double den = p.u0 + vm - vp;
	if (!(std::abs(den) >= 0.5 * p.u0))
		throw SimError(SimErrc::DegenerateJump, "rh_speed: jump u(0-) - u(0+) below u0/2");
	const double num = flux_increment(p.flux, p.u0, vm) - flux_increment(p.flux, 0.0, vp) - sigma * (vm - vp);
	return sigma + num / den;
}

} // namespace detail

inline double rh_speed(const PerturbationState& s)
{
	return detail::rh_speed_from_traces(s.profile->params, s.profile->sigma, trace_minus(s.v.minus), trace_plus(s.v.plus));
}

/// Lipschitz bound C~ with |psi' - sigma|^2 <= C~ (v(0-)^2 + v(0+)^2) for traces in [-eta, eta].
inline double rh_lipschitz_bound(const WaveProfile& prof, double eta)
{
	const WaveParams& p = prof.params;
	const int m = 40;
	double fmax_l = 0.0, fmax_r = 0.0, psi_max = 0.0;
	for (int a = 0; a <= m; ++a) {
		const double va = -eta + 2 * eta * a / m;
		fmax_l = std::max(fmax_l, std::abs(flux_eval(p.flux, p.u0 + va, 1)));
		fmax_r = std::max(fmax_r, std::abs(flux_eval(p.flux, va, 1)));
		for (int b = 0; b <= m; ++b) {
			const double vb = -eta + 2 * eta * b / m;
			psi_max = std::max(psi_max, std::abs(detail::rh_speed_from_traces(p, prof.sigma, va, vb)));
		}
	}
	const double L = (fmax_l + fmax_r + 2 * psi_max) / (p.u0 - 2 * eta);
	return 2 * L * L;
}

using FieldFn = std::function<double(double)>;

struct InitOptions
{
	double clearance = -1.0; ///< nodes with |x| below this must carry zero data; default 2h
	double eta = -1.0;       ///< sup-norm admissibility bound; default u0/4
};

inline PerturbationState init_state(std::shared_ptr<const WaveProfile> profile, const FieldFn& v0, const FieldFn& zeta0,
									const TwinGrid& grid, InitOptions opt = {})
{
	PerturbationState s;
	s.grid = grid;
	s.profile = profile;
	s.samples = std::make_shared<ProfileSamples>(sample_profile(*profile, grid));
	const double clearance = opt.clearance > 0.0 ? opt.clearance : 2.0 * grid.h;
	const double eta = opt.eta > 0.0 ? opt.eta : 0.25 * profile->params.u0;
	auto fill = [&](const FieldFn& fn, TwinField& out) {
		out.minus.resize(grid.n_minus);
		out.plus.resize(grid.n_plus);
		for (std::size_t j = 0; j < grid.n_minus; ++j)
			out.minus[j] = fn ? fn(grid.x_minus(j)) : 0.0;
		for (std::size_t j = 0; j < grid.n_plus; ++j)
			out.plus[j] = fn ? fn(grid.x_plus(j)) : 0.0;
	};
	fill(v0, s.v);
	fill(zeta0, s.zeta);
	double sup = 0.0;
	auto scan = [&](const TwinField& f) {
		for (std::size_t j = 0; j < grid.n_minus; ++j) {
			if (std::abs(grid.x_minus(j)) < clearance && f.minus[j] != 0.0)
				throw SimError(SimErrc::SupportTouchesShock, "init_state: data does not vanish near the shock");
			sup = std::max(sup, std::abs(f.minus[j]));
		}
		for (std::size_t j = 0; j < grid.n_plus; ++j) {
			if (std::abs(grid.x_plus(j)) < clearance && f.plus[j] != 0.0)
				throw SimError(SimErrc::SupportTouchesShock, "init_state: data does not vanish near the shock");
			sup = std::max(sup, std::abs(f.plus[j]));
		}
	};
	scan(s.v);
	scan(s.zeta);
	if (sup > eta)
		throw SimError(SimErrc::AmplitudeTooLarge, "init_state: sup norm exceeds the admissibility bound");
	s.psi_dot = rh_speed(s);
	return s;
}

inline PerturbationState init_state(const WaveProfile& profile, const FieldFn& v0, const FieldFn& zeta0, const TwinGrid& grid,
									InitOptions opt = {})
{
	return init_state(std::make_shared<const WaveProfile>(profile), v0, zeta0, grid, opt);
}

/// max(|psi' - f'(u_bar + v)|, |psi'|) over both half-lines.
inline double max_char_speed(const PerturbationState& s, double psi_dot)
{
	const ScalarFlux& f = s.profile->params.flux;
	double m = std::abs(psi_dot);
	for (std::size_t j = 0; j < s.v.minus.size(); ++j)
		m = std::max(m, std::abs(psi_dot - flux_eval(f, s.samples->u[j] + s.v.minus[j], 1)));
	for (double vp : s.v.plus)
		m = std::max(m, std::abs(psi_dot - flux_eval(f, vp, 1)));
	return m;
}

namespace detail {

struct SimRates
{
	TwinField dv, dz;
	double psi_dot = 0.0;
};

/// Upwind face fluxes. At an outer boundary (outer_low / outer_high) an incoming
/// characteristic carries the unperturbed state, whose flux is 0; outgoing ones
/// extrapolate. The shock faces always extrapolate.
inline void upwind_faces(const std::vector<double>& F, const std::vector<double>& a, std::vector<double>& faces, bool outer_low,
						 bool outer_high)
{
	const std::size_t n = F.size();
	faces.resize(n + 1);
	faces[0] = (outer_low && a[0] >= 0.0) ? 0.0 : F[0];
	faces[n] = (outer_high && a[n - 1] < 0.0) ? 0.0 : F[n - 1];
	for (std::size_t k = 1; k < n; ++k)
		faces[k] = (a[k - 1] + a[k] >= 0.0) ? F[k - 1] : F[k];
}

inline void sim_rates(const PerturbationState& s, SimRates& r)
{
	const WaveParams& p = s.profile->params;
	const ProfileSamples& ps = *s.samples;
	const ScalarFlux& f = p.flux;
	const double sigma = s.profile->sigma;
	const double h = s.grid.h;
	const double psi_dot = rh_speed(s);
	const double dpsi = psi_dot - sigma;
	r.psi_dot = psi_dot;

	std::vector<double> F, a, faces;
	{
		const auto& v = s.v.minus;
		const auto& z = s.zeta.minus;
		const std::size_t n = v.size();
		F.resize(n);
		a.resize(n);
		for (std::size_t j = 0; j < n; ++j) {
			const double u = ps.u[j] + v[j];
			F[j] = flux_increment(f, ps.u[j], v[j]) - psi_dot * v[j];
			a[j] = flux_eval(f, u, 1) - psi_dot;
		}
		upwind_faces(F, a, faces, true, false);
		r.dv.minus.resize(n);
		r.dz.minus.resize(n);
		const double ghost_right = trace_plus(s.zeta.plus);
		for (std::size_t j = 0; j < n; ++j) {
			const double phi = (ps.u[j] + v[j] > p.u_i) ? 1.0 : 0.0;
			const double R = p.k * (phi * (ps.z[j] + z[j]) - ps.z[j]);
			r.dv.minus[j] = -(faces[j + 1] - faces[j]) / h + dpsi * ps.du[j] + p.q * R;
			double dzx;
			if (psi_dot >= 0.0)
				dzx = ((j + 1 < n ? z[j + 1] : ghost_right) - z[j]) / h;
			else
				dzx = (z[j] - (j > 0 ? z[j - 1] : z[0])) / h;
			r.dz.minus[j] = psi_dot * dzx + dpsi * ps.dz[j] - R;
		}
	}
	{
		const auto& v = s.v.plus;
		const auto& z = s.zeta.plus;
		const std::size_t n = v.size();
		F.resize(n);
		a.resize(n);
		for (std::size_t j = 0; j < n; ++j) {
			F[j] = flux_increment(f, 0.0, v[j]) - psi_dot * v[j];
			a[j] = flux_eval(f, v[j], 1) - psi_dot;
		}
		upwind_faces(F, a, faces, false, true);
		r.dv.plus.resize(n);
		r.dz.plus.resize(n);
		const double ghost_left = trace_minus(s.zeta.minus);
		for (std::size_t j = 0; j < n; ++j) {
			const double phi = (v[j] > p.u_i) ? 1.0 : 0.0;
			const double R = p.k * phi * (1.0 + z[j]);
			r.dv.plus[j] = -(faces[j + 1] - faces[j]) / h + p.q * R;
			double dzx;
			if (psi_dot >= 0.0)
				dzx = ((j + 1 < n ? z[j + 1] : z[n - 1]) - z[j]) / h;
			else
				dzx = (z[j] - (j > 0 ? z[j - 1] : ghost_left)) / h;
			r.dz.plus[j] = psi_dot * dzx - R;
		}
	}
}

inline void axpy(std::vector<double>& y, double a, const std::vector<double>& x)
{
	for (std::size_t j = 0; j < y.size(); ++j)
		y[j] += a * x[j];
}

} // namespace detail

/// One Heun step of the coupled (v, zeta, psi) system.
inline PerturbationState step(const PerturbationState& s, double dt, double max_cfl = 0.4)
{
	const double speed = max_char_speed(s, rh_speed(s));
	if (!(dt > 0.0) || dt * speed / s.grid.h > max_cfl * (1 + 1e-12))
		throw SimError(SimErrc::CFLViolation, "step: Courant number above the bound");
	detail::SimRates k1, k2;
	detail::sim_rates(s, k1);
	PerturbationState mid = s;
	detail::axpy(mid.v.minus, dt, k1.dv.minus);
	detail::axpy(mid.v.plus, dt, k1.dv.plus);
	detail::axpy(mid.zeta.minus, dt, k1.dz.minus);
	detail::axpy(mid.zeta.plus, dt, k1.dz.plus);
	detail::sim_rates(mid, k2);
	PerturbationState out = s;
	const double half = 0.5 * dt;
	detail::axpy(out.v.minus, half, k1.dv.minus);
	detail::axpy(out.v.minus, half, k2.dv.minus);
	detail::axpy(out.v.plus, half, k1.dv.plus);
	detail::axpy(out.v.plus, half, k2.dv.plus);
	detail::axpy(out.zeta.minus, half, k1.dz.minus);
	detail::axpy(out.zeta.minus, half, k2.dz.minus);
	detail::axpy(out.zeta.plus, half, k1.dz.plus);
	detail::axpy(out.zeta.plus, half, k2.dz.plus);
	out.psi = s.psi + half * (k1.psi_dot + k2.psi_dot);
	out.t = s.t + dt;
	out.psi_dot = rh_speed(out);
	return out;
}

inline double sup_abs(const TwinField& f)
{
	double m = 0.0;
	for (double x : f.minus)
		m = std::max(m, std::abs(x));
	for (double x : f.plus)
		m = std::max(m, std::abs(x));
	return m;
}

/// Largest one-sided difference quotient, never across the shock.
inline double sup_gradient(const TwinField& f, double h)
{
	double m = 0.0;
	for (std::size_t j = 1; j < f.minus.size(); ++j)
		m = std::max(m, std::abs(f.minus[j] - f.minus[j - 1]) / h);
	for (std::size_t j = 1; j < f.plus.size(); ++j)
		m = std::max(m, std::abs(f.plus[j] - f.plus[j - 1]) / h);
	return m;
}

enum class RunStatus { Completed, AmplitudeExcursion, GradientBlowup };

inline const char* to_string(RunStatus s)
{
	switch (s) {
	case RunStatus::Completed: return "Completed";
	case RunStatus::AmplitudeExcursion: return "AmplitudeExcursion";
	case RunStatus::GradientBlowup: return "GradientBlowup";
	}
	return "?";
}

struct Observation
{
	double t, psi, psi_dot, sup_v, sup_vx, sup_zeta;
	std::vector<double> extra;
};

/// Extra observables appended to each record (energy columns, traces).
struct Observer
{
	std::vector<std::string> names;
	std::function<std::vector<double>(const PerturbationState&)> fn;
};

struct RunOptions
{
	double cfl = 0.4;
	double output_interval = 0.1;
	double rho = -1.0;                ///< amplitude radius; default u0/8
	double grad_threshold = 1e4;
	Observer observer;
};

struct RunOutcome
{
	RunStatus status = RunStatus::Completed;
	double T_end = 0.0;
	std::vector<Observation> history;
	std::vector<std::string> extra_names;
	PerturbationState final_state;
};

inline Observation observe(const PerturbationState& s, const Observer& obs)
{
	Observation o{s.t, s.psi, s.psi_dot, sup_abs(s.v), sup_gradient(s.v, s.grid.h), sup_abs(s.zeta), {}};
	if (obs.fn)
		o.extra = obs.fn(s);
	return o;
}

inline RunOutcome run(PerturbationState s, double T_max, const RunOptions& opt = {})
{
	RunOutcome out;
	out.extra_names = opt.observer.names;
	const double rho = opt.rho > 0.0 ? opt.rho : s.profile->params.u0 / 8.0;
	const double dt_out = opt.output_interval;
	out.history.push_back(observe(s, opt.observer));
	long k = 1;
	while (s.t < T_max) {
		const double next = std::min(T_max, double(k) * dt_out);
		double dt = opt.cfl * s.grid.h / std::max(max_char_speed(s, s.psi_dot), 1e-12);
		bool hit = false;
		if (s.t + dt >= next) {
			dt = next - s.t;
			hit = true;
		}
		if (dt <= 0.0) {
			++k;
			continue;
		}
		s = step(s, dt, opt.cfl);
		if (hit) {
			s.t = next;
			++k;
		}
		const double sv = sup_abs(s.v), sz = sup_abs(s.zeta);
		const double sg = sup_gradient(s.v, s.grid.h);
		RunStatus st = RunStatus::Completed;
		if (sg >= opt.grad_threshold)
			st = RunStatus::GradientBlowup;
		else if (sv >= rho || sz >= rho)
			st = RunStatus::AmplitudeExcursion;
		if (hit || st != RunStatus::Completed)
			out.history.push_back(observe(s, opt.observer));
		if (st != RunStatus::Completed) {
			out.status = st;
			break;
		}
	}
	out.T_end = s.t;
	out.final_state = std::move(s);
	return out;
}

struct BoundaryReport
{
	double zeta_trace_mismatch = 0.0;
	double psi_ratio = 0.0;
	double zeta_x_lhs = 0.0, zeta_x_rhs = 0.0;
	double zeta_xx_lhs = 0.0, zeta_xx_rhs = 0.0;
	bool zeta_x_ok = true;
	bool zeta_xx_ok = true;
};

/// Trace diagnostics at the shock: zeta continuity, the psi' Lipschitz ratio and the
/// one-sided derivative bounds with constant C_tilde.
inline BoundaryReport boundary_diagnostics(const PerturbationState& s, double C_tilde)
{
	BoundaryReport r;
	const auto& zm = s.zeta.minus;
	const auto& zp = s.zeta.plus;
	const auto& vm = s.v.minus;
	const auto& vp = s.v.plus;
	const double h = s.grid.h;
	const std::size_t n = zm.size();
	const double zl = trace_minus(zm), zr = trace_plus(zp);
	r.zeta_trace_mismatch = std::abs(zl - zr);
	const double a = trace_minus(vm), b = trace_plus(vp);
	const double dpsi = s.psi_dot - s.profile->sigma;
	r.psi_ratio = dpsi * dpsi / (a * a + b * b + std::numeric_limits<double>::epsilon());
	const double zx_l = (3 * zm[n - 1] - 4 * zm[n - 2] + zm[n - 3]) / (2 * h);
	const double zx_r = (-3 * zp[0] + 4 * zp[1] - zp[2]) / (2 * h);
	const double zxx_l = (2 * zm[n - 1] - 5 * zm[n - 2] + 4 * zm[n - 3] - zm[n - 4]) / (h * h);
	const double zxx_r = (2 * zp[0] - 5 * zp[1] + 4 * zp[2] - zp[3]) / (h * h);
	const double vx_l = (3 * vm[n - 1] - 4 * vm[n - 2] + vm[n - 3]) / (2 * h);
	const double vx_r = (-3 * vp[0] + 4 * vp[1] - vp[2]) / (2 * h);
	const double k = s.profile->params.k;
	r.zeta_x_lhs = zx_l * zx_l;
	r.zeta_x_rhs = C_tilde * (zx_r * zx_r + k * zl * zl + a * a + b * b);
	r.zeta_x_ok = r.zeta_x_lhs <= r.zeta_x_rhs;
	r.zeta_xx_lhs = zxx_l * zxx_l;
	r.zeta_xx_rhs = C_tilde * (zxx_r * zxx_r + zx_r * zx_r + a * a + b * b + zr * zr + vx_l * vx_l + vx_r * vx_r);
	r.zeta_xx_ok = r.zeta_xx_lhs <= r.zeta_xx_rhs;
	return r;
}

} // namespace detlab
