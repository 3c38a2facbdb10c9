#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "common.hpp"

namespace detlab {

enum class CharErrc { NotStrictlyHyperbolic, NonGenuinelyNonlinear, BlownUp, BadInput };
using CharError = Failure<CharErrc>;

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// u_t + A(x,u) u_x + G(x,u) u = 0 with A = A_inf(u) + B(x,u).
struct HypSystem
{
	int n = 1;
	std::function<Mat(double, const Vec&)> matrix_fn;
	std::function<Mat(double, const Vec&)> source_fn; // empty means G = 0
	double decay_rate = 1.0;
	double delta = 0.1;

	Mat matrix(double x, const Vec& u) const { return matrix_fn(x, u); }
	Mat source(double x, const Vec& u) const
	{
		return source_fn ? source_fn(x, u) : Mat::Zero(n, n);
	}
	/// Stand-in for |x| -> infinity on the left: e^{-c|x|} = e^{-20}.
	double x_probe() const { return -20.0 / decay_rate; }
};

struct EigenFrame
{
	Vec lambdas;
	Mat xi;  // column i is xi^i
	Mat eta; // row i is eta_i

	int n() const { return int(lambdas.size()); }
	/// max |eta_i xi^j - delta_ij|
	double biorthogonality_error() const
	{
		return (eta * xi - Mat::Identity(n(), n())).cwiseAbs().maxCoeff();
	}
};

inline EigenFrame eigen_frame_of(const Mat& a)
{
	const int n = int(a.rows());
	EigenFrame f;
	if (n == 1) {
		f.lambdas = Vec::Constant(1, a(0, 0));
		f.xi = Mat::Ones(1, 1);
		f.eta = Mat::Ones(1, 1);
		return f;
	}
	Eigen::EigenSolver<Mat> es(a);
	if (es.info() != Eigen::Success)
		throw CharError(CharErrc::NotStrictlyHyperbolic, "eigen_frame: eigensolver failed");
	const double scale = 1.0 + a.cwiseAbs().maxCoeff();
	std::vector<int> order(n);
	for (int i = 0; i < n; ++i) {
		order[i] = i;
		if (std::abs(es.eigenvalues()[i].imag()) > 1e-10 * scale)
			throw CharError(CharErrc::NotStrictlyHyperbolic, "eigen_frame: complex eigenvalue");
	}
	std::sort(order.begin(), order.end(), [&](int p, int q) {
		return es.eigenvalues()[p].real() > es.eigenvalues()[q].real();
	});
	f.lambdas.resize(n);
	f.xi.resize(n, n);
	for (int i = 0; i < n; ++i) {
		f.lambdas[i] = es.eigenvalues()[order[i]].real();
		f.xi.col(i) = es.eigenvectors().col(order[i]).real();
	}
	for (int i = 0; i + 1 < n; ++i)
		if (f.lambdas[i] - f.lambdas[i + 1] < 1e-10)
			throw CharError(CharErrc::NotStrictlyHyperbolic, "eigen_frame: eigenvalue gap below 1e-10", i);

	for (int i = 0; i < n; ++i) {
		// largest-magnitude entry positive; near-ties go to the lowest index
		const double big = f.xi.col(i).cwiseAbs().maxCoeff();
		int p = 0;
		while (std::abs(f.xi(p, i)) < big * (1.0 - 1e-12))
			++p;
		if (f.xi(p, i) < 0.0)
			f.xi.col(i) = -f.xi.col(i);
	}
	f.eta = f.xi.inverse();
	for (int i = 0; i < n; ++i) {
		const double s = f.eta.row(i).norm();
		f.eta.row(i) /= s;
		f.xi.col(i) *= s;
	}
	return f;
}

inline EigenFrame eigen_frame(const HypSystem& sys, double x, const Vec& u)
{
	if (u.size() != sys.n)
		throw CharError(CharErrc::BadInput, "eigen_frame: state has the wrong dimension");
	return eigen_frame_of(sys.matrix(x, u));
}

/// Rank-3 array indexed (i, j, k), row-major.
struct Tensor3
{
	int n = 0;
	std::vector<double> data;

	explicit Tensor3(int n_ = 0) : n(n_), data(std::size_t(n_) * n_ * n_, 0.0) { }
	double& operator()(int i, int j, int k) { return data[(std::size_t(i) * n + j) * n + k]; }
	double operator()(int i, int j, int k) const { return data[(std::size_t(i) * n + j) * n + k]; }
};

struct CouplingCoeffs
{
	Mat b;          // b_ij = eta_i A_x xi^j
	Tensor3 c;      // c_ijk = eta_i (D_u A . xi^k) xi^j
	Tensor3 gamma;  // gamma_ikm, coefficient of w_k w_m
	Mat zeta_lin;   // zeta_ik, coefficient of w_k
	Vec kappa;      // kappa_i . u, the forcing value at this state
};

namespace detail {

inline double fd_step_u(const Vec& u) { return 1e-6 * (1.0 + u.norm()); }
inline double fd_step_x(double x) { return 1e-6 * (1.0 + std::abs(x)); }

/// d eta_i . xi^k for a perturbation dA of the matrix, using eta_i . eta_i = 1.
inline Mat eta_variation(const EigenFrame& f, const Mat& dA)
{
	const int n = f.n();
	const Mat m = f.eta * dA * f.xi; // m(i,k) = eta_i dA xi^k
	const Mat gram = f.eta * f.eta.transpose();
	Mat beta = Mat::Zero(n, n);
	for (int i = 0; i < n; ++i) {
		double diag = 0.0;
		for (int k = 0; k < n; ++k) {
			if (k == i)
				continue;
			beta(i, k) = m(i, k) / (f.lambdas[i] - f.lambdas[k]);
			diag -= beta(i, k) * gram(k, i);
		}
		beta(i, i) = diag;
	}
	return beta;
}

} // namespace detail

/// Derivatives of eta_i along a direction d in state space, projected on xi^k:
/// returns beta(i,k) = (D_u eta_i . d) xi^k.
inline Mat eta_state_derivative(const HypSystem& sys, double x, const Vec& u, const EigenFrame& f, const Vec& d)
{
	const double h = detail::fd_step_u(u);
	const Mat dA = (sys.matrix(x, u + h * d) - sys.matrix(x, u - h * d)) / (2 * h);
	return detail::eta_variation(f, dA);
}

inline CouplingCoeffs coupling_coeffs(const HypSystem& sys, double x, const Vec& u, const EigenFrame& f)
{
	const int n = sys.n;
	CouplingCoeffs cc{Mat::Zero(n, n), Tensor3(n), Tensor3(n), Mat::Zero(n, n), Vec::Zero(n)};
	const double hx = detail::fd_step_x(x);
	const double hu = detail::fd_step_u(u);

	const Mat Ax = (sys.matrix(x + hx, u) - sys.matrix(x - hx, u)) / (2 * hx);
	cc.b = f.eta * Ax * f.xi;
	const Mat beta_x = detail::eta_variation(f, Ax);

	std::vector<Mat> beta_u(n); // beta_u[m](i,k) = (D_u eta_i . xi^m) xi^k
	for (int m = 0; m < n; ++m) {
		const Vec d = f.xi.col(m);
		const Mat Au = (sys.matrix(x, u + hu * d) - sys.matrix(x, u - hu * d)) / (2 * hu);
		const Mat proj = f.eta * Au * f.xi;
		for (int i = 0; i < n; ++i)
			for (int j = 0; j < n; ++j)
				cc.c(i, j, m) = proj(i, j);
		beta_u[m] = detail::eta_variation(f, Au);
	}

	const Mat G = sys.source(x, u);
	const Vec Gu = G * u;
	const Vec g = f.eta * Gu; // Gu = sum g_m xi^m
	Mat beta_gu = Mat::Zero(n, n);
	for (int m = 0; m < n; ++m)
		beta_gu += g[m] * beta_u[m];
	const Mat eGx = f.eta * G * f.xi;
	Mat eGu = Mat::Zero(n, n); // eta_i (D_u G . xi^k) u
	if (sys.source_fn) {
		for (int k = 0; k < n; ++k) {
			const Vec d = f.xi.col(k);
			const Vec dGu = (sys.source(x, u + hu * d) - sys.source(x, u - hu * d)) * u / (2 * hu);
			eGu.col(k) = f.eta * dGu;
		}
		const Vec Gx_u = (sys.source(x + hx, u) - sys.source(x - hx, u)) * u / (2 * hx);
		cc.kappa = -(f.eta * Gx_u);
	}

	for (int i = 0; i < n; ++i) {
		const double li = f.lambdas[i];
		for (int k = 0; k < n; ++k) {
			cc.zeta_lin(i, k) = li * beta_x(i, k) - beta_gu(i, k) - cc.b(i, k) - eGx(i, k) - eGu(i, k);
			for (int m = 0; m < n; ++m)
				cc.gamma(i, k, m) = (li - f.lambdas[m]) * beta_u[m](i, k) - cc.c(i, k, m);
		}
	}
	return cc;
}

struct RiccatiForecast
{
	double gamma_inf = 0.0;
	double W0 = 0.0;
	double t0 = 0.0;
	double T_star_upper = 0.0;
};

/// gamma_iii at the far-field probe point and zero state.
inline double gamma_inf(const HypSystem& sys, int family)
{
	if (family < 0 || family >= sys.n)
		throw CharError(CharErrc::BadInput, "gamma_inf: family out of range");
	const double x = sys.x_probe();
	const Vec zero = Vec::Zero(sys.n);
	const EigenFrame f = eigen_frame(sys, x, zero);
	return coupling_coeffs(sys, x, zero, f).gamma(family, family, family);
}

inline RiccatiForecast riccati_forecast(double gamma_inf_value, double W0, double t0)
{
	if (!(gamma_inf_value > 1e-12))
		throw CharError(CharErrc::NonGenuinelyNonlinear, "riccati_forecast: gamma_inf is not positive");
	if (!(W0 > 0.0) || t0 < 0.0)
		throw CharError(CharErrc::BadInput, "riccati_forecast: need W0 > 0 and t0 >= 0");
	return {gamma_inf_value, W0, t0, t0 + 8.0 / (3.0 * gamma_inf_value * 0.75 * W0)};
}

/// min_{k<i} (inf lambda_k - sup lambda_i) over x in [x_lo, x_hi] and states
/// 0, +-delta e_j. Infinite for scalar systems.
inline double spectral_gap(const HypSystem& sys, double x_lo, double x_hi, int nx = 5)
{
	const int n = sys.n;
	if (n == 1)
		return std::numeric_limits<double>::infinity();
	Vec lo = Vec::Constant(n, std::numeric_limits<double>::infinity());
	Vec hi = Vec::Constant(n, -std::numeric_limits<double>::infinity());
	for (int a = 0; a < nx; ++a) {
		const double x = nx == 1 ? x_lo : x_lo + (x_hi - x_lo) * a / (nx - 1);
		for (int s = -1; s <= 2 * n - 1; ++s) {
			Vec u = Vec::Zero(n);
			if (s >= 0)
				u[s / 2] = (s % 2 == 0 ? 1.0 : -1.0) * sys.delta;
			const EigenFrame f = eigen_frame(sys, x, u);
			lo = lo.cwiseMin(f.lambdas);
			hi = hi.cwiseMax(f.lambdas);
		}
	}
	double gap = std::numeric_limits<double>::infinity();
	for (int k = 0; k < n; ++k)
		for (int i = k + 1; i < n; ++i)
			gap = std::min(gap, lo[k] - hi[i]);
	return gap;
}

struct FieldSample
{
	Vec u;
	Vec u_x;
};
using FieldProvider = std::function<FieldSample(double x, double t)>;

enum class BlowupCause { None, RhoFloor, WCeiling };

/// Characteristics X_i(z,t) from seeds z for a chosen subset of families,
/// with density rho_i = dX_i/dz and w_i = eta_i . u_x tracked by ODE.
struct CharEnsemble
{
	std::vector<double> z;
	std::vector<int> families;
	std::vector<std::vector<double>> X, log_rho, w, log_rho_budget; // [family slot][seed]
	double t = 0.0;
	double s0 = 0.0;
	double t0 = 0.0;

	double W0 = 0.0, W = 0.0, V = 0.0, U = 0.0, S = 0.0, J = 0.0;
	bool overlap_after_t0 = false;
	double frame_check_max = 0.0;

	double rho_floor = 1e-6;
	double w_ceiling = 1e6;
	bool blown_up = false;
	double T_blowup = std::numeric_limits<double>::infinity();
	BlowupCause cause = BlowupCause::None;
	int blow_family = -1;
	double blow_seed = 0.0;
	/// first time max|w| reached this value (0 disables)
	double w_threshold = 0.0;
	double T_threshold = std::numeric_limits<double>::infinity();
	/// extra sample points for U and V, e.g. the cells of the companion grid
	std::function<std::vector<double>(double)> probes;

	std::size_t slots() const { return families.size(); }
	double rho(std::size_t f, std::size_t s) const { return std::exp(log_rho[f][s]); }
	double v(std::size_t f, std::size_t s) const { return w[f][s] * rho(f, s); }
	double alpha(std::size_t f) const { return std::min(X[f].front(), X[f].back()); }
	double beta(std::size_t f) const { return std::max(X[f].front(), X[f].back()); }
	/// int |v_i| dz over the seeds (trapezoid).
	double J_of(std::size_t f) const
	{
		double acc = 0.0;
		for (std::size_t s = 0; s + 1 < z.size(); ++s)
			acc += 0.5 * (std::abs(v(f, s)) + std::abs(v(f, s + 1))) * (z[s + 1] - z[s]);
		return acc;
	}
	/// int |w_i| dx over the current characteristic positions (trapezoid).
	double J_of_x(std::size_t f) const
	{
		double acc = 0.0;
		for (std::size_t s = 0; s + 1 < z.size(); ++s)
			acc += 0.5 * (std::abs(w[f][s]) + std::abs(w[f][s + 1])) * std::abs(X[f][s + 1] - X[f][s]);
		return acc;
	}
};

namespace detail {

struct CharRates
{
	double dX, dlog_rho, dw, budget;
};

inline CharRates char_rates(const HypSystem& sys, int i, double X, double wi, const FieldSample& fs)
{
	const EigenFrame f = eigen_frame(sys, X, fs.u);
	const CouplingCoeffs cc = coupling_coeffs(sys, X, fs.u, f);
	Vec w = f.eta * fs.u_x;
	w[i] = wi;
	const int n = sys.n;
	CharRates r{f.lambdas[i], cc.b(i, i), cc.kappa[i], std::abs(cc.b(i, i))};
	for (int m = 0; m < n; ++m) {
		r.dlog_rho += cc.c(i, i, m) * w[m];
		r.budget += std::abs(cc.c(i, i, m) * w[m]);
	}
	for (int k = 0; k < n; ++k) {
		r.dw += cc.zeta_lin(i, k) * w[k];
		for (int m = 0; m < n; ++m)
			r.dw += cc.gamma(i, k, m) * w[k] * w[m];
	}
	return r;
}

inline void update_diagnostics(const HypSystem& sys, CharEnsemble& e, const FieldProvider& field)
{
	const std::size_t F = e.slots();
	for (std::size_t a = 0; a < F; ++a) {
		const int i = e.families[a];
		for (std::size_t s = 0; s < e.z.size(); ++s)
			e.W = std::max(e.W, std::abs(e.w[a][s]));
		e.S = std::max(e.S, e.beta(a) - e.alpha(a));
		e.J = std::max(e.J, e.J_of(a));
		// feet of the other tracked families sample u and w_i outside R_i
		for (std::size_t b = 0; b < F; ++b)
			for (std::size_t s = 0; s < e.z.size(); ++s) {
				const double x = e.X[b][s];
				const FieldSample fs = field(x, e.t);
				e.U = std::max(e.U, fs.u.cwiseAbs().maxCoeff());
				if (b == a || (x >= e.alpha(a) && x <= e.beta(a)))
					continue;
				const EigenFrame f = eigen_frame(sys, x, fs.u);
				const double wi = std::abs(f.eta.row(i).dot(fs.u_x));
				e.V = std::max(e.V, wi);
				e.W = std::max(e.W, wi);
			}
	}
	if (e.probes) {
		const std::vector<double> xs = e.probes(e.t);
		for (double x : xs) {
			const FieldSample fs = field(x, e.t);
			const double umax = fs.u.cwiseAbs().maxCoeff();
			e.U = std::max(e.U, umax);
			if (umax == 0.0 && fs.u_x.cwiseAbs().maxCoeff() == 0.0)
				continue;
			const EigenFrame f = eigen_frame(sys, x, fs.u);
			for (std::size_t a = 0; a < F; ++a) {
				if (x >= e.alpha(a) && x <= e.beta(a))
					continue;
				const double wi = std::abs(f.eta.row(e.families[a]).dot(fs.u_x));
				e.V = std::max(e.V, wi);
				e.W = std::max(e.W, wi);
			}
		}
	}
	if (e.t >= e.t0)
		for (std::size_t a = 0; a < F; ++a)
			for (std::size_t b = a + 1; b < F; ++b)
				if (e.alpha(a) < e.beta(b) && e.alpha(b) < e.beta(a))
					e.overlap_after_t0 = true;
}

} // namespace detail

/// Seeds the ensemble at time t_start from the field: rho = 1, w_i = eta_i . u_x.
inline CharEnsemble make_ensemble(const HypSystem& sys, std::vector<double> seeds, std::vector<int> families,
                                  const FieldProvider& field, double t_start = 0.0,
                                  std::function<std::vector<double>(double)> probes = {})
{
	if (seeds.size() < 2 || families.empty())
		throw CharError(CharErrc::BadInput, "make_ensemble: need two seeds and one family");
	if (!std::is_sorted(seeds.begin(), seeds.end()))
		throw CharError(CharErrc::BadInput, "make_ensemble: seeds must be sorted");
	for (int i : families)
		if (i < 0 || i >= sys.n)
			throw CharError(CharErrc::BadInput, "make_ensemble: family out of range");
	CharEnsemble e;
	e.z = std::move(seeds);
	e.families = std::move(families);
	e.t = t_start;
	e.probes = std::move(probes);
	e.s0 = e.z.back() - e.z.front();
	const double gap = spectral_gap(sys, e.z.front(), e.z.back());
	e.t0 = t_start + (std::isfinite(gap) ? e.s0 / std::max(gap, 1e-12) : 0.0);
	const std::size_t F = e.slots(), N = e.z.size();
	e.X.assign(F, e.z);
	e.log_rho.assign(F, std::vector<double>(N, 0.0));
	e.log_rho_budget.assign(F, std::vector<double>(N, 0.0));
	e.w.assign(F, std::vector<double>(N, 0.0));
	for (std::size_t a = 0; a < F; ++a)
		for (std::size_t s = 0; s < N; ++s) {
			const FieldSample fs = field(e.z[s], t_start);
			const EigenFrame f = eigen_frame(sys, e.z[s], fs.u);
			e.w[a][s] = f.eta.row(e.families[a]).dot(fs.u_x);
			e.W0 = std::max(e.W0, std::abs(e.w[a][s]));
		}
	detail::update_diagnostics(sys, e, field);
	return e;
}

/// Heun step of the characteristic ODEs over [t, t+dt]. Each seed substeps
/// adaptively so that the relative change of w and rho per substep stays small.
/// Returns false once the ensemble has blown up; the first blowup time is kept.
inline bool advance_ensemble(const HypSystem& sys, CharEnsemble& e, const FieldProvider& field, double dt,
                             double rel_step = 0.01)
{
	if (e.blown_up)
		throw CharError(CharErrc::BlownUp, "advance_ensemble: ensemble already blew up");
	if (!(dt > 0.0))
		throw CharError(CharErrc::BadInput, "advance_ensemble: dt must be positive");
	const double t_end = e.t + dt;
	const double log_floor = std::log(e.rho_floor);
	for (std::size_t a = 0; a < e.slots(); ++a) {
		const int i = e.families[a];
		for (std::size_t s = 0; s < e.z.size(); ++s) {
			double tau = e.t;
			double X = e.X[a][s], lr = e.log_rho[a][s], w = e.w[a][s], bud = e.log_rho_budget[a][s];
			while (tau < t_end) {
				const detail::CharRates r1 = detail::char_rates(sys, i, X, w, field(X, tau));
				const double rate = std::abs(r1.dw) / std::max(std::abs(w), 1e-300) + std::abs(r1.dlog_rho);
				double h = t_end - tau;
				if (rate * h > rel_step)
					h = rel_step / rate;
				if (tau + h >= t_end || t_end - (tau + h) < 1e-12 * (1.0 + std::abs(t_end)))
					h = t_end - tau;
				const double Xp = X + h * r1.dX, wp = w + h * r1.dw;
				const detail::CharRates r2 = detail::char_rates(sys, i, Xp, wp, field(Xp, tau + h));
				X += 0.5 * h * (r1.dX + r2.dX);
				lr += 0.5 * h * (r1.dlog_rho + r2.dlog_rho);
				w += 0.5 * h * (r1.dw + r2.dw);
				bud += 0.5 * h * (r1.budget + r2.budget);
				tau = (h == t_end - tau) ? t_end : tau + h;
				if (e.w_threshold > 0.0 && std::abs(w) >= e.w_threshold && tau < e.T_threshold)
					e.T_threshold = tau;
				const bool floor = lr < log_floor, ceil = std::abs(w) > e.w_ceiling;
				if (floor || ceil) {
					if (tau < e.T_blowup) {
						e.T_blowup = tau;
						e.cause = floor ? BlowupCause::RhoFloor : BlowupCause::WCeiling;
						e.blow_family = i;
						e.blow_seed = e.z[s];
					}
					e.blown_up = true;
					break;
				}
			}
			e.X[a][s] = X;
			e.log_rho[a][s] = lr;
			e.w[a][s] = w;
			e.log_rho_budget[a][s] = bud;
		}
	}
	e.t = e.blown_up ? e.T_blowup : t_end;
	// spot check of the frame invariants on the first seed of each family
	for (std::size_t a = 0; a < e.slots(); ++a) {
		const FieldSample fs = field(e.X[a][0], e.t);
		const EigenFrame f = eigen_frame(sys, e.X[a][0], fs.u);
		e.frame_check_max = std::max(e.frame_check_max, f.biorthogonality_error());
	}
	detail::update_diagnostics(sys, e, field);
	return !e.blown_up;
}

struct Diagnostics
{
	double W, V, U, S, J;
};

inline Diagnostics measure_diagnostics(const CharEnsemble& e)
{
	return {e.W, e.V, e.U, e.S, e.J};
}

} // namespace detlab
