#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "common.hpp"
#include "shock_frame_sim.hpp"

namespace detlab {

enum class EnergyErrc { WrongSide, TailNotResolved, Infeasible, NonPositiveEnergy, BadInput };
using EnergyError = Failure<EnergyErrc>;

enum class Side { Left, Right };
enum class WeightVariant { One, Two, Plain };

struct WeightSpec
{
	double epsilon = 1.0;
	double C = 1.0;
	Side side = Side::Left;
	WeightVariant variant = WeightVariant::One;
};

/// rho(x) with the inner integral of C e^{-eps|s|} done in closed form.
inline double weight_value(const WeightSpec& w, double x)
{
	const bool left = w.side == Side::Left;
	if ((left && x > 0.0) || (!left && x < 0.0) || (w.variant == WeightVariant::Plain) == left)
		throw EnergyError(EnergyErrc::WrongSide, "weight_value: variant and side do not match the point");
	if (w.variant == WeightVariant::Plain)
		return std::exp(w.epsilon * x);
	// int_0^x C e^{eps s} ds for x <= 0
	const double I = w.C / w.epsilon * std::expm1(w.epsilon * x);
	return w.variant == WeightVariant::One ? std::exp(-w.epsilon * x - I) : std::exp(-w.epsilon * x + I);
}

/// order-th derivative of samples on a uniform grid: centred in the interior,
/// second-order one-sided at both ends.
inline std::vector<double> grid_derivative(const std::vector<double>& a, double h, int order)
{
	const std::size_t n = a.size();
	if (order == 0)
		return a;
	if (n < 4)
		throw EnergyError(EnergyErrc::BadInput, "grid_derivative: need four samples");
	std::vector<double> d(n);
	if (order == 1) {
		for (std::size_t j = 1; j + 1 < n; ++j)
			d[j] = (a[j + 1] - a[j - 1]) / (2 * h);
		d[0] = (-3 * a[0] + 4 * a[1] - a[2]) / (2 * h);
		d[n - 1] = (3 * a[n - 1] - 4 * a[n - 2] + a[n - 3]) / (2 * h);
	} else if (order == 2) {
		const double h2 = h * h;
		for (std::size_t j = 1; j + 1 < n; ++j)
			d[j] = (a[j + 1] - 2 * a[j] + a[j - 1]) / h2;
		d[0] = (2 * a[0] - 5 * a[1] + 4 * a[2] - a[3]) / h2;
		d[n - 1] = (2 * a[n - 1] - 5 * a[n - 2] + 4 * a[n - 3] - a[n - 4]) / h2;
	} else {
		throw EnergyError(EnergyErrc::BadInput, "grid_derivative: order must be 0..2");
	}
	return d;
}

/// sqrt(sum_{l<=k} int (d^l v)^2 e^{eps|x|} dx) over both half-lines, midpoint rule on the cell centres.
inline double weighted_sobolev_norm(const TwinField& f, const TwinGrid& g, double epsilon, int k, bool check_tail = true)
{
	double total = 0.0, tail = 0.0;
	for (int l = 0; l <= k; ++l) {
		const auto dm = grid_derivative(f.minus, g.h, l);
		const auto dp = grid_derivative(f.plus, g.h, l);
		for (std::size_t j = 0; j < dm.size(); ++j)
			total += dm[j] * dm[j] * std::exp(-epsilon * g.x_minus(j));
		for (std::size_t j = 0; j < dp.size(); ++j)
			total += dp[j] * dp[j] * std::exp(epsilon * g.x_plus(j));
		tail += dm.front() * dm.front() * std::exp(-epsilon * g.x_minus(0));
		tail += dp.back() * dp.back() * std::exp(epsilon * g.x_plus(dp.size() - 1));
	}
	total *= g.h;
	tail *= g.h;
	if (check_tail && total > 0.0 && tail > 0.01 * total)
		throw EnergyError(EnergyErrc::TailNotResolved, "weighted_sobolev_norm: outer boundary carries over 1% of the norm");
	return std::sqrt(total);
}

/// Unweighted L2 norm over both half-lines.
inline double plain_l2_norm(const TwinField& f, double h)
{
	double s = 0.0;
	for (double x : f.minus)
		s += x * x;
	for (double x : f.plus)
		s += x * x;
	return std::sqrt(s * h);
}

/// (C_{k,-}, C'_{k,-}, C_{k,+}, C'_{k,+}) for k = 0, 1, 2.
struct EnergyCoeffs
{
	std::array<double, 3> v_minus{1, 1, 1};
	std::array<double, 3> zeta_minus{1, 1, 1};
	std::array<double, 3> v_plus{1, 1, 1};
	std::array<double, 3> zeta_plus{1, 1, 1};

	double min() const
	{
		double m = v_minus[0];
		for (const auto* a : {&v_minus, &zeta_minus, &v_plus, &zeta_plus})
			for (double c : *a)
				m = std::min(m, c);
		return m;
	}

	double max() const
	{
		double m = v_minus[0];
		for (const auto* a : {&v_minus, &zeta_minus, &v_plus, &zeta_plus})
			for (double c : *a)
				m = std::max(m, c);
		return m;
	}
};

struct EstimateConstants
{
	double mu = 0.0;
	double nu = 0.0;
	double epsilon = 0.0; ///< k / nu
	double omega = 0.0;   ///< mu epsilon / 4
	double eta = 0.0;
	double C_tilde = 0.0;
	double kappa_q = 0.0;
	double C = 1.0;       ///< weight correction constant
	double C_f = 0.0;     ///< bound on |f''| near the profile states
	double delta1 = 1.0;
	EnergyCoeffs coeffs;
};

/// Speed gaps, weight rate and boundary constant for a profile at amplitude bound eta.
inline EstimateConstants make_constants(const WaveProfile& prof, double eta, double C = 1.0)
{
	const WaveParams& p = prof.params;
	const double sigma = prof.sigma;
	if (!(sigma > 0.0))
		throw EnergyError(EnergyErrc::BadInput, "make_constants: needs sigma > 0");
	if (!(eta > 0.0) || eta > 0.25 * p.u0)
		throw EnergyError(EnergyErrc::BadInput, "make_constants: eta must lie in (0, u0/4]");
	const int m = 400;
	double Cf = 0.0, inf_left = 1e300, sup_right = -1e300;
	for (int i = 0; i <= m; ++i) {
		const double ul = prof.u_minus_inf - eta + (p.u0 - prof.u_minus_inf + 2 * eta) * i / m;
		const double ur = -eta + 2 * eta * i / m;
		Cf = std::max({Cf, std::abs(flux_eval(p.flux, ul, 2)), std::abs(flux_eval(p.flux, ur, 2))});
		inf_left = std::min(inf_left, flux_eval(p.flux, ul, 1));
		sup_right = std::max(sup_right, flux_eval(p.flux, ur, 1));
	}
	EstimateConstants c;
	c.C_f = Cf;
	c.eta = eta;
	c.C = C;
	c.mu = std::min({sigma - Cf * eta, sigma - Cf * eta - sup_right, inf_left - sigma - Cf * eta, p.k});
	if (!(c.mu > 0.0))
		throw EnergyError(EnergyErrc::BadInput, "make_constants: no positive speed gap at this eta");
	c.nu = sigma + Cf * eta;
	c.epsilon = p.k / c.nu;
	c.omega = c.mu * c.epsilon / 4.0;
	c.C_tilde = rh_lipschitz_bound(prof, eta);
	c.kappa_q = prof.kappa;
	c.delta1 = p.q == 0.0 ? 1.0 : c.mu * c.epsilon / (8 * p.k * std::abs(p.q));
	return c;
}

/// Left-hand sides minus right-hand sides of the ten coefficient conditions; all must be <= 0.
inline std::array<double, 10> coefficient_conditions(const EstimateConstants& c, double q)
{
	const auto& K = c.coeffs;
	const double Ct = c.C_tilde, w = c.omega, sk = std::sqrt(c.kappa_q), aq = std::abs(q);
	const double sv = K.v_minus[0] + K.v_minus[1] + K.v_minus[2];
	const double sz = K.zeta_minus[0] + K.zeta_minus[1] + K.zeta_minus[2];
	return {
		Ct * (sv * sk + sz) - w * K.v_plus[0] / 2,
		Ct * (sk * (K.v_minus[1] + K.v_minus[2]) + sz) - w * K.v_minus[0] / 2,
		Ct * aq * K.v_minus[1] - K.zeta_minus[1] * w / 2,
		Ct * K.v_minus[2] - K.v_minus[1] * w / 2,
		Ct * aq * K.v_minus[2] - K.zeta_minus[2] * w / 2,
		Ct * sz - w * K.zeta_plus[0] / 2,
		Ct * (K.zeta_minus[1] + K.zeta_minus[2]) - w * K.zeta_plus[1] / 2,
		Ct * K.zeta_minus[2] - w * K.zeta_plus[2] / 2,
		Ct * K.zeta_minus[2] - w * K.v_minus[1],
		Ct * K.v_minus[2] - w * K.v_plus[1],
	};
}

/// Explicit coefficient tuple; C'_{2,-} is the largest value the zeta(0+) and
/// v_x(0-) conditions allow once the others are fixed.
inline EnergyCoeffs explicit_coefficients(double omega, double C_tilde)
{
	if (!(omega > 0.0) || !(C_tilde > 0.0))
		throw EnergyError(EnergyErrc::BadInput, "select_coefficients: omega and C_tilde must be positive");
	const double w = omega, Ct = C_tilde;
	EnergyCoeffs K;
	K.v_minus[0] = 1.0;
	K.v_minus[1] = w / (4 * Ct);
	K.v_minus[2] = std::min(K.v_minus[1], K.v_minus[1] * w / (2 * Ct));
	K.zeta_minus[0] = w / (8 * Ct);
	K.zeta_minus[1] = std::min(w / (8 * Ct), w * K.v_minus[1] / Ct);
	K.zeta_minus[2] = std::min(w / (2 * Ct) - K.zeta_minus[0] - K.zeta_minus[1], w * K.v_minus[1] / Ct);
	return K;
}

/// Stores the explicit tuple in c and re-checks all ten conditions at q. Throws
/// Infeasible with the 1-based index of the first failing condition.
inline EnergyCoeffs select_coefficients(EstimateConstants& c, double q)
{
	const EnergyCoeffs K = explicit_coefficients(c.omega, c.C_tilde);
	const double w = c.omega;
	c.coeffs = K;
	const auto cond = coefficient_conditions(c, q);
	for (std::size_t i = 0; i < cond.size(); ++i)
		if (cond[i] > 1e-14 * w)
			throw EnergyError(EnergyErrc::Infeasible, "select_coefficients: condition " + std::to_string(i + 1) + " fails",
							  int(i + 1));
	return K;
}

struct EnergyReport
{
	double t = 0.0;
	std::array<double, 3> v_minus{}, zeta_minus{}, v_plus{}, zeta_plus{};
	double total = 0.0;
};

namespace detail {

inline std::array<double, 3> side_energies(const std::vector<double>& a, double h, const std::vector<double>& rho)
{
	std::array<double, 3> e{};
	for (int k = 0; k <= 2; ++k) {
		const auto d = grid_derivative(a, h, k);
		double s = 0.0;
		for (std::size_t j = 0; j < d.size(); ++j)
			s += d[j] * d[j] * rho[j];
		e[std::size_t(k)] = s * h;
	}
	return e;
}

} // namespace detail

/// Cached weights on a grid: rho_{-,1}, rho_{-,2} on the left and rho_+ on the right.
struct EnergyWeights
{
	std::vector<double> left_one, left_two, right;

	EnergyWeights() = default;
	EnergyWeights(const TwinGrid& g, double epsilon, double C)
	{
		WeightSpec one{epsilon, C, Side::Left, WeightVariant::One};
		WeightSpec two{epsilon, C, Side::Left, WeightVariant::Two};
		WeightSpec plain{epsilon, C, Side::Right, WeightVariant::Plain};
		for (std::size_t j = 0; j < g.n_minus; ++j) {
			left_one.push_back(weight_value(one, g.x_minus(j)));
			left_two.push_back(weight_value(two, g.x_minus(j)));
		}
		for (std::size_t j = 0; j < g.n_plus; ++j)
			right.push_back(weight_value(plain, g.x_plus(j)));
	}
};

inline EnergyReport total_energy(const PerturbationState& s, const EnergyCoeffs& K, const EnergyWeights& w)
{
	EnergyReport r;
	r.t = s.t;
	r.v_minus = detail::side_energies(s.v.minus, s.grid.h, w.left_one);
	r.zeta_minus = detail::side_energies(s.zeta.minus, s.grid.h, w.left_two);
	r.v_plus = detail::side_energies(s.v.plus, s.grid.h, w.right);
	r.zeta_plus = detail::side_energies(s.zeta.plus, s.grid.h, w.right);
	for (std::size_t k = 0; k < 3; ++k)
		r.total += K.v_minus[k] * r.v_minus[k] + K.zeta_minus[k] * r.zeta_minus[k] + K.v_plus[k] * r.v_plus[k] +
				   K.zeta_plus[k] * r.zeta_plus[k];
	return r;
}

inline EnergyReport total_energy(const PerturbationState& s, const EstimateConstants& c)
{
	return total_energy(s, c.coeffs, EnergyWeights(s.grid, c.epsilon, c.C));
}

/// Bounds m, M with m ||.||^2 <= total_energy <= M ||.||^2 in H^2_eps.
inline std::pair<double, double> energy_equivalence(const EnergyCoeffs& K, double epsilon, double C)
{
	const double f = std::exp(2 * C / epsilon);
	return {K.min() / f, K.max() * f};
}

struct DecayFit
{
	double theta = 0.0;
	double r2 = 1.0;
	std::size_t n = 0;
};

/// Least-squares slope of log E against t over samples with t in [t_lo, t_hi], sign flipped.
inline DecayFit fit_decay_rate(const std::vector<double>& t, const std::vector<double>& E, double t_lo, double t_hi)
{
	std::vector<double> x, y;
	for (std::size_t i = 0; i < t.size(); ++i) {
		if (t[i] < t_lo || t[i] > t_hi)
			continue;
		if (!(E[i] > 0.0))
			throw EnergyError(EnergyErrc::NonPositiveEnergy, "fit_decay_rate: energy must be positive in the window");
		x.push_back(t[i]);
		y.push_back(std::log(E[i]));
	}
	if (x.size() < 2)
		throw EnergyError(EnergyErrc::BadInput, "fit_decay_rate: fewer than two samples in the window");
	const LinearFit lf = linear_fit(x, y);
	return {-lf.slope, lf.r2, x.size()};
}

/// Same, discarding the leading transient_fraction of the samples.
inline DecayFit fit_decay_rate(const std::vector<double>& t, const std::vector<double>& E, double transient_fraction = 0.1)
{
	if (t.empty())
		throw EnergyError(EnergyErrc::BadInput, "fit_decay_rate: empty series");
	const std::size_t skip = std::size_t(std::floor(transient_fraction * double(t.size())));
	return fit_decay_rate(t, E, t[std::min(skip, t.size() - 1)], t.back());
}

/// max_t of ||.||(t) - C e^{-theta t} ||.||(0) - int_0^t C e^{-theta(t-s)} low(s) ds, trapezoid convolution.
inline double damping_residual(const std::vector<double>& t, const std::vector<double>& high, const std::vector<double>& low,
							   double C, double theta)
{
	if (t.empty() || high.size() != t.size() || low.size() != t.size())
		throw EnergyError(EnergyErrc::BadInput, "damping_residual: series lengths differ");
	double worst = -std::numeric_limits<double>::infinity();
	// I(t_i) = int_0^{t_i} e^{-theta(t_i - s)} low(s) ds, advanced recursively
	double I = 0.0;
	for (std::size_t i = 0; i < t.size(); ++i) {
		if (i > 0) {
			const double dt = t[i] - t[i - 1];
			const double decay = std::exp(-theta * dt);
			I = I * decay + 0.5 * dt * (low[i - 1] * decay + low[i]);
		}
		const double rhs = C * std::exp(-theta * (t[i] - t[0])) * high[0] + C * I;
		worst = std::max(worst, high[i] - rhs);
	}
	return worst;
}

} // namespace detlab
