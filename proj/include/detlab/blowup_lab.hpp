#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "char_fields.hpp"
#include "common.hpp"
#include "flux_models.hpp"
#include "profile.hpp"

namespace detlab {

enum class BlowupErrc { DistanceTooSmall, NotGenuinelyNonlinear, TemperatureGuardViolated, NonPhysicalState, BadInput };
using BlowupError = Failure<BlowupErrc>;

/// Mollifier e^{-1/(1-4t^2)} on (-1/2, 1/2), scaled so that max |phi''| = 1.
struct Bump
{
	static double raw(double t, int order)
	{
		const double g = 1.0 - 4 * t * t;
		if (!(g > 0.0))
			return 0.0;
		const double p = std::exp(-1.0 / g);
		const double a = -8 * t / (g * g); // (log p)'
		switch (order) {
		case 0: return p;
		case 1: return p * a;
		default: return p * (a * a - 8 / (g * g) - 128 * t * t / (g * g * g));
		}
	}

	/// max |raw''|, located by a scan and golden-section polish.
	static double scale()
	{
		static const double s = [] {
			const int n = 20000;
			int best = 0;
			double bv = 0.0;
			for (int j = 1; j < n; ++j) {
				const double v = std::abs(raw(-0.5 + double(j) / n, 2));
				if (v > bv) {
					bv = v;
					best = j;
				}
			}
			double a = -0.5 + double(best - 1) / n, b = -0.5 + double(best + 1) / n;
			const double r = 0.5 * (std::sqrt(5.0) - 1.0);
			for (int it = 0; it < 80; ++it) {
				const double c = b - r * (b - a), d = a + r * (b - a);
				if (std::abs(raw(c, 2)) > std::abs(raw(d, 2)))
					b = d;
				else
					a = c;
			}
			return std::max(bv, std::abs(raw(0.5 * (a + b), 2)));
		}();
		return s;
	}

	static double value(double t) { return raw(t, 0) / scale(); }
	static double d1(double t) { return raw(t, 1) / scale(); }
	static double d2(double t) { return raw(t, 2) / scale(); }

	/// max phi' (attained on the left half; the bump is even).
	static double max_slope()
	{
		static const double m = [] {
			double a = -0.5, b = 0.0;
			const double r = 0.5 * (std::sqrt(5.0) - 1.0);
			for (int it = 0; it < 100; ++it) {
				const double c = b - r * (b - a), d = a + r * (b - a);
				if (d1(c) > d1(d))
					b = d;
				else
					a = c;
			}
			return d1(0.5 * (a + b));
		}();
		return m;
	}
};

// ---------------------------------------------------------------------------
// ZND detonation profile (ideal gas, one-step reaction) in the shock frame.

struct ZndParams
{
	double gamma = 0.4;
	double c_heat = 1.0;
	double k = 1.0;
	double q = 1.0;
	double sigma = 2.0; // Lagrangian mass flux through the shock
	double v_plus = 1.0;
	double e_plus = 1.0;
	double T_ignition = -1.0; // negative: half the minimum burnt-side temperature
};

/// Closed-form profile: Rayleigh line and energy balance give a quadratic in
/// Delta = v_+ - v for each reaction progress 1 - z, with z = e^{kx/sigma} on x < 0.
struct ZndProfile
{
	ZndParams par;
	IdealGasEOS eos;
	double p_plus = 0.0;
	double qa = 0.0, qb = 0.0; // Delta^2 and Delta coefficients
	double T_i = 0.0;

	double z(double x) const { return x < 0.0 ? std::exp(par.k * x / par.sigma) : 1.0; }

	double delta_of(double x, double* d_delta = nullptr) const
	{
		if (x >= 0.0)
			throw BlowupError(BlowupErrc::BadInput, "znd profile: only the burnt side x < 0 is modelled");
		const double zz = std::exp(par.k * x / par.sigma);
		const double lam = -std::expm1(par.k * x / par.sigma);
		const double root = std::sqrt(qb * qb - 4 * qa * par.gamma * par.q * lam);
		const double D = (-qb + root) / (2 * qa);
		if (d_delta)
			*d_delta = -par.gamma * par.q / root * (-(par.k / par.sigma) * zz);
		return D;
	}

	/// (v, u, E) at x < 0
	Vec state(double x) const
	{
		const double D = delta_of(x);
		const double lam = -std::expm1(par.k * x / par.sigma);
		Vec U(3);
		U << par.v_plus - D, par.sigma * D, par.e_plus + (p_plus + par.sigma * par.sigma * D) * D + par.q * lam;
		return U;
	}

	Vec state_x(double x) const
	{
		double dD = 0.0;
		const double D = delta_of(x, &dD);
		const double dlam = -(par.k / par.sigma) * std::exp(par.k * x / par.sigma);
		Vec dU(3);
		dU << -dD, par.sigma * dD, (p_plus + 2 * par.sigma * par.sigma * D) * dD + par.q * dlam;
		return dU;
	}

	Vec burnt() const
	{
		const double D = (-qb + std::sqrt(qb * qb - 4 * qa * par.gamma * par.q)) / (2 * qa);
		Vec U(3);
		U << par.v_plus - D, par.sigma * D, par.e_plus + (p_plus + par.sigma * par.sigma * D) * D + par.q;
		return U;
	}

	double temperature_at(const Vec& U) const { return temperature(eos, U[0], U[1], U[2]); }
};

inline ZndProfile make_znd_profile(const ZndParams& par)
{
	if (!(par.gamma > 0.0) || !(par.c_heat > 0.0) || !(par.k > 0.0) || !(par.q >= 0.0) || !(par.sigma > 0.0) ||
	    !(par.v_plus > 0.0) || !(par.e_plus > 0.0))
		throw BlowupError(BlowupErrc::BadInput, "znd profile: parameters out of range");
	ZndProfile z;
	z.par = par;
	z.eos = IdealGasEOS{par.gamma, par.c_heat};
	z.p_plus = par.gamma * par.e_plus / par.v_plus;
	z.qa = par.sigma * par.sigma * (1.0 + 0.5 * par.gamma);
	z.qb = (1.0 + par.gamma) * z.p_plus - par.sigma * par.sigma * par.v_plus;
	if (!(z.qb < 0.0))
		throw BlowupError(BlowupErrc::BadInput, "znd profile: sigma is not supersonic ahead of the shock");
	if (!(z.qb * z.qb - 4 * z.qa * par.gamma * par.q > 0.0))
		throw BlowupError(BlowupErrc::BadInput, "znd profile: sigma is at or below the Chapman-Jouguet speed");
	const Vec Ub = z.burnt();
	if (!(Ub[0] > 0.0))
		throw BlowupError(BlowupErrc::BadInput, "znd profile: burnt specific volume is not positive");
	if (!(sound_speed(z.eos, Ub[0], Ub[1], Ub[2]) > par.sigma))
		throw BlowupError(BlowupErrc::BadInput, "znd profile: burnt state is not subsonic behind the shock");
	double Tmin = std::numeric_limits<double>::infinity();
	for (int j = 0; j <= 4000; ++j) {
		const double x = -1e-9 - 40.0 * par.sigma / par.k * double(j) / 4000;
		Tmin = std::min(Tmin, z.temperature_at(z.state(x)));
	}
	Tmin = std::min(Tmin, z.temperature_at(Ub));
	z.T_i = par.T_ignition > 0.0 ? par.T_ignition : 0.5 * Tmin;
	if (!(Tmin > z.T_i))
		throw BlowupError(BlowupErrc::BadInput, "znd profile: burnt side is not above the ignition temperature");
	return z;
}

namespace detail {

/// Second derivatives of the gas flux (-u, p, p u): H[r](a, b) = d^2 F_r / dU_a dU_b.
inline std::array<Mat, 3> gas_hessians(const IdealGasEOS& eos, const Vec& U)
{
	const double v = U[0], u = U[1], E = U[2], g = eos.gamma;
	const double e = E - 0.5 * u * u;
	const PressurePartials pp = eos_pressure_partials(eos, v, u, E);
	Mat P(3, 3);
	P << 2 * g * e / (v * v * v), g * u / (v * v), -g / (v * v),
	     g * u / (v * v), -g / v, 0.0,
	     -g / (v * v), 0.0, 0.0;
	const double dp[3] = {pp.p_v, pp.p_u, pp.p_E};
	Mat Q = u * P;
	for (int a = 0; a < 3; ++a) {
		Q(1, a) += dp[a];
		Q(a, 1) += dp[a];
	}
	return {Mat::Zero(3, 3), P, Q};
}

inline Mat gas_matrix(const IdealGasEOS& eos, const Vec& U)
{
	const auto J = gas_jacobian(eos, U[0], U[1], U[2]);
	Mat m(3, 3);
	for (int i = 0; i < 3; ++i)
		for (int j = 0; j < 3; ++j)
			m(i, j) = J[i][j];
	return m;
}

inline Vec gas_flux(const IdealGasEOS& eos, const Vec& U)
{
	const double p = eos_pressure_partials(eos, U[0], U[1], U[2]).p;
	Vec F(3);
	F << -U[1], p, p * U[1];
	return F;
}

} // namespace detail

/// Perturbation problem in the shock frame: u_t + H(x,u)_x = 0 in conservative
/// form, with its quasilinear form A(x,u) u_x + G(x,u) u.
struct FieldModel
{
	HypSystem system;
	std::function<Vec(double, const Vec&)> flux;
	std::function<void(double, const Vec&)> guard; // throws on an inadmissible state
	bool has_reactant = false;
	double reactant_speed = 0.0; // shock-frame speed of the z-hat channel
	double reactant_rate = 0.0;
};

/// ZND with z-hat = 0 reduced to gas dynamics about the profile.
inline FieldModel znd_reduce(const ZndProfile& prof)
{
	FieldModel m;
	const double sigma = prof.par.sigma;
	const IdealGasEOS eos = prof.eos;
	m.system.n = 3;
	m.system.decay_rate = prof.par.k / sigma;
	m.system.delta = 0.1 * prof.burnt().minCoeff();
	m.system.matrix_fn = [prof, eos, sigma](double x, const Vec& u) {
		return Mat(detail::gas_matrix(eos, prof.state(x) + u) - sigma * Mat::Identity(3, 3));
	};
	m.system.source_fn = [prof, eos](double x, const Vec& u) {
		// G(x,u) u = (A(Ubar+u) - A(Ubar)) Ubar_x, integrated along the segment by
		// four-point Gauss-Legendre
		static const double node[4] = {0.0694318442029737, 0.3300094782075719, 0.6699905217924281, 0.9305681557970263};
		static const double wt[4] = {0.1739274225687269, 0.3260725774312731, 0.3260725774312731, 0.1739274225687269};
		const Vec Ub = prof.state(x), Ux = prof.state_x(x);
		Mat G = Mat::Zero(3, 3);
		for (int s = 0; s < 4; ++s) {
			const auto H = detail::gas_hessians(eos, Ub + node[s] * u);
			for (int r = 0; r < 3; ++r)
				G.row(r) += wt[s] * (H[r] * Ux).transpose();
		}
		return G;
	};
	m.flux = [prof, eos, sigma](double x, const Vec& u) {
		const Vec Ub = prof.state(x);
		return Vec(detail::gas_flux(eos, Ub + u) - detail::gas_flux(eos, Ub) - sigma * u);
	};
	m.guard = [prof, eos](double x, const Vec& u) {
		const Vec U = prof.state(x) + u;
		const double e = U[2] - 0.5 * U[1] * U[1];
		if (!(U[0] > 0.0) || !(e > 0.0))
			throw BlowupError(BlowupErrc::NonPhysicalState, "znd: specific volume or internal energy left the physical range");
		if (!(temperature(eos, U[0], U[1], U[2]) > prof.T_i))
			throw BlowupError(BlowupErrc::TemperatureGuardViolated, "znd: temperature fell to the ignition threshold");
	};
	m.has_reactant = true;
	m.reactant_speed = -sigma;
	m.reactant_rate = prof.par.k;
	return m;
}

/// Scalar perturbation about a Majda profile on the left half-line. With the
/// reactant unperturbed and burning, the reaction terms cancel and the
/// perturbation obeys a pure conservation law.
inline FieldModel majda_far_field_model(const WaveProfile& prof)
{
	FieldModel m;
	const double sigma = prof.sigma;
	const ScalarFlux f = prof.params.flux;
	m.system.n = 1;
	m.system.decay_rate = prof.params.k / sigma;
	m.system.delta = 0.5;
	m.system.matrix_fn = [prof, f, sigma](double x, const Vec& u) {
		return Mat::Constant(1, 1, flux_eval(f, prof.u_at(x) + u[0], 1) - sigma);
	};
	m.system.source_fn = [prof, f](double x, const Vec& u) {
		const double ub = prof.u_at(x);
		const double slope = u[0] == 0.0 ? flux_eval(f, ub, 2) : (flux_eval(f, ub + u[0], 1) - flux_eval(f, ub, 1)) / u[0];
		return Mat::Constant(1, 1, slope * prof.du_at(x));
	};
	m.flux = [prof, f, sigma](double x, const Vec& u) {
		return Vec::Constant(1, flux_increment(f, prof.u_at(x), u[0]) - sigma * u[0]);
	};
	return m;
}

// ---------------------------------------------------------------------------
// Blowup data

inline double distance_requirement(double theta, double T, double s0, double W0, double margin)
{
	(void)theta; // enters only through W0
	return margin * std::max({1.0, T, std::abs(std::log(s0)), std::abs(std::log(W0))});
}

struct BlowupData
{
	double theta = 0.0;
	double x0 = 0.0;
	int family = 0;
	Vec direction;
	double s0 = 1.0;
	double W0 = 0.0;
	double w_family = 0.0; // sup |eta_i f'| over the support, chosen family
	double w_other = 0.0;  // same, all other families
	double gamma_inf = 0.0;
	double t0 = 0.0;
	double T_forecast = std::numeric_limits<double>::infinity();
	double distance = 0.0;
	double required_distance = 0.0;
	double envelope = 0.0; // sup |B(x,0)| over the initial support
	bool family_dominates = false;

	Vec u0(double x) const { return theta * Bump::value(x - x0) * direction; }
	Vec u0_x(double x) const { return theta * Bump::d1(x - x0) * direction; }
};

/// Scaled bump along the far-field eigenvector of the chosen family, centred at x0 < 0.
inline BlowupData make_blowup_data(const HypSystem& sys, double theta, double x0, int family, double margin = 3.0,
                                   double c_tilde = 0.1, bool enforce_distance = true)
{
	if (!(theta >= 0.0) || !(x0 < -0.5) || family < 0 || family >= sys.n)
		throw BlowupError(BlowupErrc::BadInput, "make_blowup_data: need theta >= 0, x0 < -1/2 and a valid family");
	BlowupData d;
	d.theta = theta;
	d.x0 = x0;
	d.family = family;
	const Vec zero = Vec::Zero(sys.n);
	const EigenFrame far = eigen_frame(sys, sys.x_probe(), zero);
	d.direction = far.xi.col(family);
	d.gamma_inf = gamma_inf(sys, family);
	if (std::abs(d.gamma_inf) < 1e-10)
		throw BlowupError(BlowupErrc::NotGenuinelyNonlinear, "make_blowup_data: gamma_iii vanishes at infinity");

	double& w_family = d.w_family;
	double& w_other = d.w_other;
	for (int j = 0; j <= 400; ++j) {
		const double x = x0 - 0.5 + j / 400.0;
		const EigenFrame f = eigen_frame(sys, x, d.u0(x));
		const Vec w = f.eta * d.u0_x(x);
		for (int i = 0; i < sys.n; ++i) {
			double& slot = i == family ? w_family : w_other;
			slot = std::max(slot, std::abs(w[i]));
		}
		d.envelope = std::max(d.envelope, (sys.matrix(x, zero) - sys.matrix(sys.x_probe(), zero)).cwiseAbs().maxCoeff());
	}
	d.W0 = std::max(w_family, w_other);
	d.family_dominates = w_family >= w_other;
	d.distance = -x0 - 0.5;
	if (d.W0 > 0.0) {
		const double gap = spectral_gap(sys, x0 - 0.5, x0 + 0.5);
		d.t0 = std::isfinite(gap) ? d.s0 / gap : 0.0;
		d.T_forecast = riccati_forecast(std::abs(d.gamma_inf), d.W0, d.t0).T_star_upper;
		d.required_distance = distance_requirement(theta, d.T_forecast, d.s0, d.W0, margin);
	}
	if (enforce_distance) {
		if (!(d.W0 > 0.0))
			throw BlowupError(BlowupErrc::DistanceTooSmall, "make_blowup_data: zero data has no finite distance requirement");
		if (d.distance < d.required_distance)
			throw BlowupError(BlowupErrc::DistanceTooSmall, "make_blowup_data: support is too close to the shock");
		if (d.envelope > std::min({1.0, d.s0, c_tilde * d.W0}))
			throw BlowupError(BlowupErrc::DistanceTooSmall, "make_blowup_data: profile coupling is not yet negligible");
	}
	return d;
}

// ---------------------------------------------------------------------------
// Moving-window finite volumes

struct WindowOptions
{
	double h = 0.005;
	double half_width = 1.25;
	double cfl = 0.8;
};

/// Perturbation on a window of cells that translates at a fixed frame speed.
/// Local Lax-Friedrichs with per-family dissipation in the frozen far-field
/// eigenbasis: family i is damped by |lambda_i - s|, which is small for the
/// family the frame follows.
class WindowSim
{
public:
	WindowSim(const FieldModel& model, double centre0, double frame_speed, const WindowOptions& opt,
	          const std::function<Vec(double)>& u0, const std::function<double(double)>& zhat0 = {})
		: model_(model), opt_(opt), c0_(centre0), s_(frame_speed)
	{
		if (!(opt.h > 0.0) || !(opt.half_width > 2 * opt.h) || !(opt.cfl > 0.0 && opt.cfl <= 1.0))
			throw BlowupError(BlowupErrc::BadInput, "window: need h > 0, a window wider than two cells and cfl in (0,1]");
		n_ = model.system.n;
		m_ = int(std::lround(2 * opt.half_width / opt.h));
		frame_ = eigen_frame(model.system, centre0, Vec::Zero(n_));
		U_ = Mat::Zero(n_, m_);
		Z_.assign(std::size_t(m_), 0.0);
		for (int j = 0; j < m_; ++j) {
			U_.col(j) = u0(x_of(j));
			if (zhat0)
				Z_[std::size_t(j)] = zhat0(x_of(j));
		}
		check_guard();
	}

	double t() const { return t_; }
	double centre() const { return c0_ + s_ * t_; }
	double frame_speed() const { return s_; }
	double h() const { return opt_.h; }
	int cells() const { return m_; }
	double y_of(int j) const { return (j + 0.5) * opt_.h - opt_.half_width; }
	double x_of(int j) const { return centre() + y_of(j); }
	const Mat& field() const { return U_; }
	const std::vector<double>& reactant() const { return Z_; }

	/// Courant-limited step for the current state.
	double max_dt() const
	{
		double amax = 0.0;
		for (int j = 0; j < m_; ++j)
			amax = std::max(amax, cell_speeds(j, t_, U_.col(j)).cwiseAbs().maxCoeff());
		if (model_.has_reactant)
			amax = std::max(amax, std::abs(model_.reactant_speed - s_));
		return amax > 0.0 ? opt_.cfl * opt_.h / amax : std::numeric_limits<double>::infinity();
	}

	void step(double dt)
	{
		const Mat k1 = rates(U_, t_);
		const Mat U1 = U_ + dt * k1;
		const Mat k2 = rates(U1, t_ + dt);
		U_ += 0.5 * dt * (k1 + k2);
		if (model_.has_reactant) {
			const std::vector<double> z1 = reactant_rates(Z_);
			std::vector<double> Zp(Z_.size());
			for (std::size_t j = 0; j < Z_.size(); ++j)
				Zp[j] = Z_[j] + dt * z1[j];
			const std::vector<double> z2 = reactant_rates(Zp);
			for (std::size_t j = 0; j < Z_.size(); ++j)
				Z_[j] += 0.5 * dt * (z1[j] + z2[j]);
		}
		t_ += dt;
		check_guard();
	}

	/// Steps to t_target, trimming the last step; max_step caps each step.
	void advance_to(double t_target, double max_step = std::numeric_limits<double>::infinity())
	{
		while (t_ < t_target) {
			double dt = std::min(max_dt(), max_step);
			if (t_ + dt >= t_target) {
				dt = t_target - t_;
				step(dt);
				t_ = t_target;
			} else {
				step(dt);
			}
		}
	}

	double sup_amp() const { return m_ ? U_.cwiseAbs().maxCoeff() : 0.0; }

	/// max over faces of |u_{j+1} - u_j| / h, zero state outside the window
	double sup_grad() const
	{
		double g = 0.0;
		for (int j = 0; j <= m_; ++j) {
			const Vec a = j > 0 ? Vec(U_.col(j - 1)) : Vec::Zero(n_);
			const Vec b = j < m_ ? Vec(U_.col(j)) : Vec::Zero(n_);
			g = std::max(g, (b - a).cwiseAbs().maxCoeff() / opt_.h);
		}
		return g;
	}

	double l2_norm() const { return std::sqrt(opt_.h * U_.squaredNorm()); }

	/// Discrete H^2 norm with centred differences (zero state outside).
	double h2_norm() const
	{
		double acc = 0.0;
		const double h = opt_.h;
		auto col = [&](int j) { return (j >= 0 && j < m_) ? Vec(U_.col(j)) : Vec::Zero(n_); };
		for (int j = 0; j < m_; ++j) {
			const Vec d1 = (col(j + 1) - col(j - 1)) / (2 * h);
			const Vec d2 = (col(j + 1) - 2 * col(j) + col(j - 1)) / (h * h);
			acc += col(j).squaredNorm() + d1.squaredNorm() + d2.squaredNorm();
		}
		return std::sqrt(h * acc);
	}

	double reactant_max() const
	{
		double z = 0.0;
		for (double v : Z_)
			z = std::max(z, std::abs(v));
		return z;
	}

	/// Piecewise-linear u and centred-difference u_x from a stored snapshot.
	static FieldSample sample(const Mat& U, double centre, double h, double half_width, double x)
	{
		const int n = int(U.rows()), m = int(U.cols());
		auto col = [&](int j) { return (j >= 0 && j < m) ? Vec(U.col(j)) : Vec::Zero(n); };
		const double r = (x - centre + half_width) / h - 0.5;
		if (r < -2.0 || r > m + 1.0)
			return {Vec::Zero(n), Vec::Zero(n)};
		const int j = int(std::floor(r));
		const double a = r - j;
		const Vec u = (1 - a) * col(j) + a * col(j + 1);
		const Vec dj = (col(j + 1) - col(j - 1)) / (2 * h);
		const Vec dj1 = (col(j + 2) - col(j)) / (2 * h);
		return {u, (1 - a) * dj + a * dj1};
	}

	FieldSample sample(double x) const { return sample(U_, centre(), opt_.h, opt_.half_width, x); }

private:
	const FieldModel& model_;
	WindowOptions opt_;
	double c0_, s_;
	int n_ = 1, m_ = 0;
	double t_ = 0.0;
	EigenFrame frame_;
	Mat U_;
	std::vector<double> Z_;

	Vec cell_speeds(int j, double t, const Vec& u) const
	{
		const double x = c0_ + s_ * t + y_of(j);
		const Mat A = model_.system.matrix(x, u);
		Vec lam(n_);
		for (int i = 0; i < n_; ++i) {
			double q = 0.0;
			for (int a = 0; a < n_; ++a)
				for (int b = 0; b < n_; ++b)
					q += frame_.eta(i, a) * A(a, b) * frame_.xi(b, i);
			lam[i] = q - s_;
		}
		return lam;
	}

	Mat rates(const Mat& U, double t) const
	{
		Mat H(n_, m_), L(n_, m_);
		for (int j = 0; j < m_; ++j) {
			const double x = c0_ + s_ * t + y_of(j);
			H.col(j) = model_.flux(x, U.col(j)) - s_ * U.col(j);
			L.col(j) = cell_speeds(j, t, U.col(j));
		}
		// ghost states are zero: flux 0 and the far-field speeds
		const Vec ghost_lo = cell_speeds(-1, t, Vec::Zero(n_));
		const Vec ghost_hi = cell_speeds(m_, t, Vec::Zero(n_));
		Mat F(n_, m_ + 1);
		Vec du(n_), hs(n_), jump(n_);
		for (int f = 0; f <= m_; ++f) {
			du.setZero();
			hs.setZero();
			if (f < m_) {
				du += U.col(f);
				hs += H.col(f);
			}
			if (f > 0) {
				du -= U.col(f - 1);
				hs += H.col(f - 1);
			}
			jump.noalias() = frame_.eta * du;
			for (int i = 0; i < n_; ++i) {
				const double lL = f > 0 ? L(i, f - 1) : ghost_lo[i];
				const double lR = f < m_ ? L(i, f) : ghost_hi[i];
				hs -= std::max(std::abs(lL), std::abs(lR)) * jump[i] * frame_.xi.col(i);
			}
			F.col(f) = 0.5 * hs;
		}
		Mat R(n_, m_);
		for (int j = 0; j < m_; ++j)
			R.col(j) = -(F.col(j + 1) - F.col(j)) / opt_.h;
		return R;
	}

	std::vector<double> reactant_rates(const std::vector<double>& Z) const
	{
		const double a = model_.reactant_speed - s_, k = model_.reactant_rate;
		std::vector<double> r(Z.size());
		const std::size_t m = Z.size();
		for (std::size_t j = 0; j < m; ++j) {
			const double up = a > 0 ? (j > 0 ? Z[j - 1] : 0.0) : (j + 1 < m ? Z[j + 1] : 0.0);
			r[j] = -std::abs(a) * (Z[j] - up) / opt_.h - k * Z[j];
		}
		return r;
	}

	void check_guard() const
	{
		if (!model_.guard)
			return;
		for (int j = 0; j < m_; ++j)
			model_.guard(x_of(j), U_.col(j));
	}
};

// ---------------------------------------------------------------------------
// Coupled run

struct BlowupRunOptions
{
	WindowOptions window;
	double macro_dt = 0.05;
	double T_max = 100.0;
	int seeds = 101;
	double grad_factor = 1e3;
	double amp_factor = 2.0;
	double w_ceiling = 1e6;
	double rho_floor = 1e-6;
	double output_interval = 0.5;
	int probe_stride = 10;
};

struct TrajectoryPoint
{
	double t = 0.0;
	double sup_amp = 0.0;
	double sup_grad = 0.0;
	double max_w = std::numeric_limits<double>::quiet_NaN();
	double min_rho = std::numeric_limits<double>::quiet_NaN();
	double zhat_max = 0.0;
	double l2 = 0.0;
};

struct BlowupRun
{
	BlowupData data;
	CharEnsemble ensemble;
	std::vector<TrajectoryPoint> trajectory;
	double frame_speed = 0.0;
	double h2_initial = 0.0;
	double zhat_max = 0.0;
};

namespace detail {

inline TrajectoryPoint observe(const WindowSim& sim, const CharEnsemble& e)
{
	TrajectoryPoint p;
	p.t = e.t;
	p.sup_amp = sim.sup_amp();
	p.sup_grad = sim.sup_grad();
	p.zhat_max = sim.reactant_max();
	p.l2 = sim.l2_norm();
	double mw = 0.0, mr = std::numeric_limits<double>::infinity();
	for (std::size_t a = 0; a < e.slots(); ++a)
		for (std::size_t s = 0; s < e.z.size(); ++s) {
			mw = std::max(mw, std::abs(e.w[a][s]));
			mr = std::min(mr, e.rho(a, s));
		}
	p.max_w = mw;
	p.min_rho = mr;
	return p;
}

} // namespace detail

/// Field evolution in a window following the chosen family, with the
/// characteristic ensemble of that family advanced every macro step from
/// snapshots interpolated linearly in time.
inline BlowupRun simulate_gas(const FieldModel& model, const BlowupData& data, const BlowupRunOptions& opt,
                              const std::function<double(double)>& zhat0 = {})
{
	if (!(opt.macro_dt > 0.0) || !(opt.T_max > 0.0) || opt.seeds < 3 || opt.probe_stride < 1)
		throw BlowupError(BlowupErrc::BadInput, "simulate_gas: bad run options");
	if (opt.window.h > data.s0 / 200.0 + 1e-15)
		throw BlowupError(BlowupErrc::BadInput, "simulate_gas: need at least 200 cells across the bump");
	BlowupRun run;
	run.data = data;
	const HypSystem& sys = model.system;
	run.frame_speed = eigen_frame(sys, data.x0, Vec::Zero(sys.n)).lambdas[data.family];
	WindowSim sim(model, data.x0, run.frame_speed, opt.window, [&](double x) { return data.u0(x); }, zhat0);
	run.h2_initial = sim.h2_norm();

	std::vector<double> seeds(std::size_t(opt.seeds));
	for (int k = 0; k < opt.seeds; ++k)
		seeds[std::size_t(k)] = data.x0 - 0.5 * data.s0 + data.s0 * k / (opt.seeds - 1);

	Mat U_old = sim.field();
	double t_old = 0.0, c_old = sim.centre();
	const double h = opt.window.h, hw = opt.window.half_width;
	FieldProvider field = [&](double x, double t) {
		const FieldSample b = WindowSim::sample(sim.field(), sim.centre(), h, hw, x);
		if (t >= sim.t() || sim.t() <= t_old)
			return b;
		const FieldSample a = WindowSim::sample(U_old, c_old, h, hw, x);
		const double r = (t - t_old) / (sim.t() - t_old);
		return FieldSample{(1 - r) * a.u + r * b.u, (1 - r) * a.u_x + r * b.u_x};
	};
	FieldProvider initial = [&](double x, double) { return FieldSample{data.u0(x), data.u0_x(x)}; };
	auto probes = [&](double) {
		std::vector<double> xs;
		for (int j = 0; j < sim.cells(); j += opt.probe_stride)
			xs.push_back(sim.x_of(j));
		return xs;
	};
	run.ensemble = make_ensemble(sys, seeds, {data.family}, initial, 0.0, probes);
	CharEnsemble& e = run.ensemble;
	e.w_ceiling = opt.w_ceiling;
	e.rho_floor = opt.rho_floor;
	e.w_threshold = opt.grad_factor * e.W0;

	run.trajectory.push_back(detail::observe(sim, e));
	double next_out = opt.output_interval;
	while (e.t < opt.T_max - 1e-12 && !e.blown_up) {
		const double t_next = std::min(e.t + opt.macro_dt, opt.T_max);
		U_old = sim.field();
		t_old = sim.t();
		c_old = sim.centre();
		sim.advance_to(t_next, opt.macro_dt);
		run.zhat_max = std::max(run.zhat_max, sim.reactant_max());
		advance_ensemble(sys, e, field, t_next - e.t);
		if (e.blown_up || e.t >= next_out - 1e-12 || e.t >= opt.T_max - 1e-12) {
			run.trajectory.push_back(detail::observe(sim, e));
			while (next_out <= e.t + 1e-12)
				next_out += opt.output_interval;
		}
	}
	return run;
}

enum class Verdict { Blowup, NoBlowup };

inline const char* to_string(Verdict v) { return v == Verdict::Blowup ? "Blowup" : "NoBlowup"; }

struct BlowupReport
{
	double T_star = std::numeric_limits<double>::infinity(); // first blowup flag
	double T_grad = std::numeric_limits<double>::infinity(); // gradient threshold crossing
	double amp_growth = 1.0;
	double grad_growth = 1.0;
	double fv_grad_growth = 1.0;
	double forecast = std::numeric_limits<double>::infinity();
	bool within_forecast = false;
	Verdict verdict = Verdict::NoBlowup;
	std::vector<double> t_series, grad_series, amp_series;
};

/// Detector on a bare trajectory: the gradient column is the ensemble max|w|
/// when present, the grid gradient otherwise; rho below the floor flags blowup.
inline BlowupReport detect_blowup(const std::vector<TrajectoryPoint>& traj, double grad_factor, double amp_factor,
                                  double rho_floor = 1e-6)
{
	BlowupReport r;
	if (traj.empty())
		return r;
	const bool has_w = !std::isnan(traj.front().max_w);
	const double g0 = has_w ? traj.front().max_w : traj.front().sup_grad;
	const double a0 = traj.front().sup_amp;
	double gmax = 0.0, fvmax = 0.0, amax = 0.0;
	for (const TrajectoryPoint& p : traj) {
		const double g = has_w ? p.max_w : p.sup_grad;
		r.t_series.push_back(p.t);
		r.grad_series.push_back(g);
		r.amp_series.push_back(p.sup_amp);
		if (!std::isinf(r.T_star))
			continue;
		gmax = std::max(gmax, g);
		fvmax = std::max(fvmax, p.sup_grad);
		amax = std::max(amax, p.sup_amp);
		if (g0 > 0.0 && g >= grad_factor * g0 && std::isinf(r.T_grad))
			r.T_grad = p.t;
		if (!std::isnan(p.min_rho) && p.min_rho < rho_floor)
			r.T_star = p.t;
	}
	if (!has_w)
		r.T_star = r.T_grad;
	r.grad_growth = g0 > 0.0 ? gmax / g0 : 1.0;
	r.fv_grad_growth = traj.front().sup_grad > 0.0 ? fvmax / traj.front().sup_grad : 1.0;
	r.amp_growth = a0 > 0.0 ? amax / a0 : 1.0;
	const bool flagged = std::isfinite(r.T_star);
	r.verdict = (flagged && r.grad_growth >= grad_factor && r.amp_growth <= amp_factor) ? Verdict::Blowup : Verdict::NoBlowup;
	return r;
}

inline BlowupReport detect_blowup(const BlowupRun& run, double grad_factor, double amp_factor)
{
	BlowupReport r = detect_blowup(run.trajectory, grad_factor, amp_factor, run.ensemble.rho_floor);
	const CharEnsemble& e = run.ensemble;
	r.T_star = e.blown_up ? e.T_blowup : std::numeric_limits<double>::infinity();
	r.T_grad = e.T_threshold;
	r.forecast = run.data.T_forecast;
	r.within_forecast = r.T_star <= r.forecast;
	const bool flagged = std::isfinite(r.T_star);
	r.verdict = (flagged && r.grad_growth >= grad_factor && r.amp_growth <= amp_factor) ? Verdict::Blowup : Verdict::NoBlowup;
	return r;
}

// ---------------------------------------------------------------------------
// Family of shrinking data that still blows up

struct NoDampingRow
{
	int n = 0;
	double theta = 0.0;
	double x0 = 0.0;
	double h2_initial = 0.0;
	double l2_max = 0.0;
	double T_star = 0.0;
	double grad_growth = 0.0;
	bool excursion = false;
	double hyperbola_r2 = 0.0;
};

struct NoDampingReport
{
	std::vector<NoDampingRow> rows;
	bool norms_monotone = false;
	bool all_excursion = false;
};

/// Amplitude amplitude/(n+1) for each n, placed at the distance the data requires.
inline NoDampingReport no_damping_family(const FieldModel& model, int family, const std::vector<int>& ns,
                                         double amplitude, double margin, BlowupRunOptions opt)
{
	NoDampingReport rep;
	for (int n : ns) {
		if (n < 0)
			throw BlowupError(BlowupErrc::BadInput, "no_damping_family: n must be non-negative");
		NoDampingRow row;
		row.n = n;
		row.theta = amplitude / (n + 1);
		const BlowupData probe = make_blowup_data(model.system, row.theta, -1.0, family, margin, 0.1, false);
		row.x0 = -(std::ceil(probe.required_distance) + 0.5 * probe.s0);
		const BlowupData data = make_blowup_data(model.system, row.theta, row.x0, family, margin, 0.1, true);
		opt.T_max = data.T_forecast;
		opt.output_interval = data.T_forecast / 800.0;
		const BlowupRun run = simulate_gas(model, data, opt);
		const BlowupReport r = detect_blowup(run, opt.grad_factor, opt.amp_factor);
		row.h2_initial = run.h2_initial;
		for (const TrajectoryPoint& p : run.trajectory)
			row.l2_max = std::max(row.l2_max, p.l2);
		row.T_star = r.T_star;
		row.grad_growth = r.grad_growth;
		row.excursion = r.verdict == Verdict::Blowup;
		// 1/max|w| against t over the second half of the run
		std::vector<double> ts, inv;
		for (const TrajectoryPoint& p : run.trajectory)
			if (p.t >= 0.5 * r.T_star && p.max_w > 0.0 && std::isfinite(r.T_star)) {
				ts.push_back(p.t);
				inv.push_back(1.0 / p.max_w);
			}
		row.hyperbola_r2 = ts.size() >= 3 ? linear_fit(ts, inv).r2 : 0.0;
		rep.rows.push_back(row);
	}
	rep.norms_monotone = true;
	rep.all_excursion = !rep.rows.empty();
	for (std::size_t k = 0; k < rep.rows.size(); ++k) {
		if (k > 0 && !(rep.rows[k].h2_initial < rep.rows[k - 1].h2_initial))
			rep.norms_monotone = false;
		if (!rep.rows[k].excursion)
			rep.all_excursion = false;
	}
	return rep;
}

} // namespace detlab
