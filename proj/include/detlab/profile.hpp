#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "common.hpp"
#include "flux_models.hpp"

namespace detlab {

enum class ProfileErrc { InvalidParams, NonPositiveSpeed, Inadmissible, StiffnessFailure };
enum class Inadmissibility { NoRoot = 1, DegenerateCharacteristic = 2, WrongEndState = 3 };
using ProfileError = Failure<ProfileErrc>;

struct WaveParams
{
	double k = 1.0;
	double q = 0.09;
	double u0 = 1.0;
	double u_i = 0.5;
	ScalarFlux flux = ScalarFlux::burgers();
};

inline void validate(const WaveParams& p)
{
	if (!(p.k > 0.0) || !(p.u0 > 0.0) || !(p.u_i > 0.0 && p.u_i < p.u0))
		throw ProfileError(ProfileErrc::InvalidParams, "wave params: need k > 0, u0 > 0, 0 < u_i < u0");
}

/// sigma = (f(u0) - f(0)) / u0. The shock-speed routine of the simulator uses the
/// identical expression so the unperturbed wave is a bitwise fixed point.
inline double compute_speed(const WaveParams& p)
{
	if (!(p.u0 > 0.0))
		throw ProfileError(ProfileErrc::InvalidParams, "compute_speed: u0 must be positive");
	return (flux_eval(p.flux, p.u0 + 0.0, 0) - flux_eval(p.flux, 0.0, 0)) / (p.u0 + 0.0 - 0.0);
}

inline double reactant_profile(const WaveParams& p, double sigma, double x)
{
	if (!(sigma > 0.0))
		throw ProfileError(ProfileErrc::NonPositiveSpeed, "reactant_profile: sigma must be positive");
	return x < 0.0 ? std::exp(p.k * x / sigma) : 1.0;
}

/// Largest root of f(u) = sigma u - q sigma in (u_i, u0) plus the characteristic checks.
/// For q = 0 the end state is u0 itself.
inline double check_existence(const WaveParams& p)
{
	validate(p);
	const double sigma = compute_speed(p);
	const ScalarFlux& f = p.flux;
	double u_inf = p.u0;
	if (p.q != 0.0) {
		auto g = [&](double u) { return flux_eval(f, u, 0) - sigma * u + p.q * sigma; };
		const int scan = 4096;
		const double du = (p.u0 - p.u_i) / scan;
		double hi = p.u0, ghi = g(hi);
		bool found = false;
		double lo = hi;
		for (int s = 1; s <= scan; ++s) {
			lo = (s == scan) ? p.u_i : p.u0 - s * du;
			const double glo = g(lo);
			if (glo == 0.0 && lo > p.u_i) {
				hi = lo;
				found = true;
				break;
			}
			if ((glo < 0.0) != (ghi < 0.0) && ghi != 0.0) {
				found = true;
				break;
			}
			hi = lo;
			ghi = glo;
		}
		if (!found)
			throw ProfileError(ProfileErrc::Inadmissible, "check_existence: no root of f(u) = sigma u - q sigma in (u_i, u0)",
							   int(Inadmissibility::NoRoot));
		if (g(hi) != 0.0) {
			const bool lo_neg = g(lo) < 0.0;
			while (hi - lo > 1e-12) {
				const double mid = 0.5 * (lo + hi);
				const double gm = g(mid);
				if (gm == 0.0) {
					lo = hi = mid;
					break;
				}
				if ((gm < 0.0) == lo_neg)
					lo = mid;
				else
					hi = mid;
			}
			u_inf = 0.5 * (lo + hi);
		} else {
			u_inf = hi;
		}
		if (!(u_inf > p.u_i && u_inf < p.u0))
			throw ProfileError(ProfileErrc::Inadmissible, "check_existence: root not inside (u_i, u0)",
							   int(Inadmissibility::NoRoot));
	}
	const double a = std::min(u_inf, p.u0), b = std::max(u_inf, p.u0);
	double inf_fp = std::numeric_limits<double>::infinity();
	const int samples = 1000;
	for (int s = 0; s <= samples; ++s)
		inf_fp = std::min(inf_fp, flux_eval(f, a + (b - a) * s / samples, 1));
	if (!(inf_fp > sigma))
		throw ProfileError(ProfileErrc::Inadmissible, "check_existence: inf f' on [u_-inf, u0] does not exceed sigma",
						   int(Inadmissibility::DegenerateCharacteristic));
	if (!(sigma > flux_eval(f, 0.0, 1)))
		throw ProfileError(ProfileErrc::Inadmissible, "check_existence: sigma <= f'(0)",
						   int(Inadmissibility::WrongEndState));
	return u_inf;
}

/// Sampled traveling wave on x <= 0. The last sample is the trace at 0-.
struct WaveProfile
{
	WaveParams params;
	double sigma = 0.0;
	double u_minus_inf = 0.0;
	double kappa = 0.0;
	std::vector<double> grid_x;
	std::vector<double> u_bar;
	std::vector<double> du_bar;

	/// z on the left; zero when sigma <= 0 (burnt state, the exponential is unbounded).
	double z_at(double x) const
	{
		if (x >= 0.0)
			return 1.0;
		return sigma > 0.0 ? std::exp(params.k * x / sigma) : 0.0;
	}

	double dz_at(double x) const
	{
		if (x >= 0.0 || !(sigma > 0.0))
			return 0.0;
		return params.k / sigma * std::exp(params.k * x / sigma);
	}

	/// Right-hand side of the profile ODE at (x, u).
	double slope(double x, double u) const
	{
		if (params.q == 0.0)
			return 0.0;
		return params.k * params.q * z_at(x) / (flux_eval(params.flux, u, 1) - sigma);
	}

	/// u_bar(x) by cubic Hermite interpolation between samples; exponential tail
	/// beyond the integrated extent; right state 0 for x >= 0.
	double u_at(double x) const
	{
		if (x >= 0.0)
			return x == 0.0 ? params.u0 : 0.0;
		if (grid_x.empty())
			return params.u0;
		if (x <= grid_x.front()) {
			const double d = u_bar.front() - u_minus_inf;
			return sigma > 0.0 ? u_minus_inf + d * std::exp(params.k * (x - grid_x.front()) / sigma) : u_bar.front();
		}
		auto it = std::upper_bound(grid_x.begin(), grid_x.end(), x);
		const std::size_t j = std::size_t(it - grid_x.begin()) - 1;
		if (j + 1 >= grid_x.size())
			return u_bar.back();
		const double x0 = grid_x[j], x1 = grid_x[j + 1], hh = x1 - x0;
		const double s = (x - x0) / hh;
		const double h00 = (1 + 2 * s) * (1 - s) * (1 - s), h10 = s * (1 - s) * (1 - s);
		const double h01 = s * s * (3 - 2 * s), h11 = s * s * (s - 1);
		return h00 * u_bar[j] + h10 * hh * du_bar[j] + h01 * u_bar[j + 1] + h11 * hh * du_bar[j + 1];
	}

	double du_at(double x) const { return x < 0.0 ? slope(x, u_at(x)) : 0.0; }

	/// (u', u'', u''') from the ODE by the chain rule, given u at x.
	std::array<double, 3> derivatives(double x, double u) const
	{
		if (params.q == 0.0 || x >= 0.0)
			return {0.0, 0.0, 0.0};
		const double fp = flux_eval(params.flux, u, 1) - sigma;
		const double f2 = flux_eval(params.flux, u, 2);
		const double f3 = flux_eval(params.flux, u, 3);
		const double d1 = params.k * params.q * z_at(x) / fp;
		const double g = params.k / sigma - f2 * d1 / fp;
		const double d2 = g * d1;
		const double dg = -(f3 * d1 * d1 + f2 * d2) / fp + (f2 * d1) * (f2 * d1) / (fp * fp);
		const double d3 = dg * d1 + g * d2;
		return {d1, d2, d3};
	}
};

namespace detail {

/// One Runge-Kutta-Fehlberg 4(5) step; returns the fourth-order solution and
/// the embedded error estimate.
template <class Rhs>
std::pair<double, double> rkf45_step(const Rhs& rhs, double x, double y, double h)
{
	const double k1 = h * rhs(x, y);
	const double k2 = h * rhs(x + h / 4, y + k1 / 4);
	const double k3 = h * rhs(x + 3 * h / 8, y + 3 * k1 / 32 + 9 * k2 / 32);
	const double k4 = h * rhs(x + 12 * h / 13, y + 1932 * k1 / 2197 - 7200 * k2 / 2197 + 7296 * k3 / 2197);
	const double k5 = h * rhs(x + h, y + 439 * k1 / 216 - 8 * k2 + 3680 * k3 / 513 - 845 * k4 / 4104);
	const double k6 = h * rhs(x + h / 2, y - 8 * k1 / 27 + 2 * k2 - 3544 * k3 / 2565 + 1859 * k4 / 4104 - 11 * k5 / 40);
	const double y4 = y + 25 * k1 / 216 + 1408 * k3 / 2565 + 2197 * k4 / 4104 - k5 / 5;
	const double y5 = y + 16 * k1 / 135 + 6656 * k3 / 12825 + 28561 * k4 / 56430 - 9 * k5 / 50 + 2 * k6 / 55;
	return {y4, std::abs(y5 - y4)};
}

} // namespace detail

/// Adaptive integration of u' = k q exp(kx/sigma) / (f'(u) - sigma) from x = 0 back to x = -L.
inline WaveProfile integrate_profile(const WaveParams& params, double L, double target_error)
{
	if (!(L > 0.0) || !(target_error > 0.0))
		throw ProfileError(ProfileErrc::InvalidParams, "integrate_profile: need L > 0 and target_error > 0");
	WaveProfile prof;
	prof.params = params;
	prof.u_minus_inf = check_existence(params);
	prof.sigma = compute_speed(params);
	const double sigma = prof.sigma;

	if (params.q == 0.0) {
		const int n = 201;
		for (int j = 0; j < n; ++j) {
			prof.grid_x.push_back(-L + L * j / (n - 1));
			prof.u_bar.push_back(params.u0);
			prof.du_bar.push_back(0.0);
		}
		prof.grid_x.back() = 0.0;
		prof.kappa = 0.0;
		return prof;
	}
	if (!(sigma > 0.0))
		throw ProfileError(ProfileErrc::NonPositiveSpeed, "integrate_profile: q != 0 requires sigma > 0");

	const double floor = 1e-8;
	auto rhs = [&](double x, double u) {
		const double gap = flux_eval(params.flux, u, 1) - sigma;
		if (!(gap >= floor))
			throw ProfileError(ProfileErrc::StiffnessFailure, "integrate_profile: f'(u) - sigma below safety floor");
		return params.k * params.q * std::exp(params.k * x / sigma) / gap;
	};

	std::vector<double> xs{0.0}, us{params.u0}, ds{rhs(0.0, params.u0)};
	const double hmax = 0.01 * sigma / params.k;
	double x = 0.0, u = params.u0, h = -std::min(hmax, 1e-3);
	while (x > -L) {
		if (x + h < -L)
			h = -L - x;
		const auto [y4, err] = detail::rkf45_step(rhs, x, u, h);
		if (err <= target_error || std::abs(h) < 1e-14) {
			x += h;
			u = y4;
			xs.push_back(x);
			us.push_back(u);
			ds.push_back(rhs(x, u));
		}
		const double fac = err > 0.0 ? 0.9 * std::pow(target_error / err, 0.2) : 5.0;
		h *= std::clamp(fac, 0.2, 5.0);
		h = -std::min(std::abs(h), hmax);
	}
	prof.grid_x.assign(xs.rbegin(), xs.rend());
	prof.u_bar.assign(us.rbegin(), us.rend());
	prof.du_bar.assign(ds.rbegin(), ds.rend());

	double kappa = 0.0;
	for (std::size_t j = 0; j < prof.grid_x.size(); ++j) {
		const double xj = prof.grid_x[j];
		if (xj >= 0.0)
			continue;
		const auto d = prof.derivatives(xj, prof.u_bar[j]);
		kappa = std::max(kappa, (std::abs(d[0]) + std::abs(d[1]) + std::abs(d[2])) * std::exp(-params.k * xj / sigma));
	}
	prof.kappa = kappa;
	return prof;
}

struct ProfileReport
{
	double ode_residual = 0.0;
	double kappa = 0.0;
	double envelope_ratio = 0.0; ///< max of (|u'|+|u''|+|u'''|) e^{-kx/sigma} / kappa, midpoints included
	bool envelope_ok = true;
	double rh_residual = 0.0;
	bool ok = true;
};

inline ProfileReport verify_profile(const WaveProfile& prof, double tol)
{
	ProfileReport rep;
	const auto& x = prof.grid_x;
	const auto& u = prof.u_bar;
	const WaveParams& p = prof.params;
	for (std::size_t j = 1; j + 1 < x.size(); ++j) {
		const double h0 = x[j] - x[j - 1], h1 = x[j + 1] - x[j];
		const double fd = (-h1 / (h0 * (h0 + h1))) * u[j - 1] + ((h1 - h0) / (h0 * h1)) * u[j] +
						  (h0 / (h1 * (h0 + h1))) * u[j + 1];
		rep.ode_residual = std::max(rep.ode_residual, std::abs(fd - prof.slope(x[j], u[j])));
	}
	rep.kappa = prof.kappa;
	if (p.q != 0.0 && prof.kappa > 0.0) {
		auto ratio = [&](double xx, double uu) {
			const auto d = prof.derivatives(xx, uu);
			return (std::abs(d[0]) + std::abs(d[1]) + std::abs(d[2])) * std::exp(-p.k * xx / prof.sigma) / prof.kappa;
		};
		for (std::size_t j = 0; j + 1 < x.size(); ++j) {
			rep.envelope_ratio = std::max(rep.envelope_ratio, ratio(x[j], u[j]));
			const double xm = 0.5 * (x[j] + x[j + 1]);
			rep.envelope_ratio = std::max(rep.envelope_ratio, ratio(xm, prof.u_at(xm)));
		}
		rep.envelope_ok = rep.envelope_ratio <= 1.0 + 1e-3;
	}
	rep.rh_residual = std::abs(flux_eval(p.flux, p.u0, 0) - flux_eval(p.flux, 0.0, 0) - prof.sigma * p.u0);
	rep.ok = rep.ode_residual <= tol && rep.envelope_ok && rep.rh_residual <= tol;
	return rep;
}

} // namespace detlab
