#pragma once

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "common.hpp"

namespace detlab {

enum class FluxErrc { OutOfInterval, UnsupportedOrder, NonPhysicalState, NotHyperbolic, BadSpec };
using FluxError = Failure<FluxErrc>;

/// Scalar flux with closed-form derivatives up to third order on a certified interval.
struct ScalarFlux
{
	enum class Kind { Burgers, CubicConvex, Polynomial };

	Kind kind = Kind::Burgers;
	std::vector<double> coeffs; ///< ascending powers, Polynomial only
	double lo = -10.0;
	double hi = 10.0;

	static ScalarFlux burgers(double lo = -10.0, double hi = 10.0)
	{
		return ScalarFlux{Kind::Burgers, {}, lo, hi};
	}

	/// f(u) = u^2/2 + u^3/6, convex for u > -1.
	static ScalarFlux cubic_convex(double lo = -0.9, double hi = 10.0)
	{
		if (lo <= -1.0)
			throw FluxError(FluxErrc::BadSpec, "cubic_convex: interval must stay above -1");
		return ScalarFlux{Kind::CubicConvex, {}, lo, hi};
	}

	static ScalarFlux polynomial(std::vector<double> c, double lo, double hi)
	{
		if (c.empty())
			throw FluxError(FluxErrc::BadSpec, "polynomial flux needs coefficients");
		return ScalarFlux{Kind::Polynomial, std::move(c), lo, hi};
	}
};

namespace detail {

inline double poly_derivative(const std::vector<double>& c, double u, int order)
{
	// Horner on the order-th derivative coefficients j!/(j-order)! c_j
	double acc = 0.0;
	for (int j = int(c.size()) - 1; j >= order; --j) {
		double fall = 1.0;
		for (int m = 0; m < order; ++m)
			fall *= double(j - m);
		acc = acc * u + fall * c[std::size_t(j)];
	}
	return acc;
}

} // namespace detail

/// order-th derivative of f at u, order in 0..3.
inline double flux_eval(const ScalarFlux& flux, double u, int order)
{
	if (order < 0 || order > 3)
		throw FluxError(FluxErrc::UnsupportedOrder, "flux_eval: order " + std::to_string(order) + " not in 0..3", order);
	if (!(u >= flux.lo && u <= flux.hi))
		throw FluxError(FluxErrc::OutOfInterval, "flux_eval: u=" + std::to_string(u) + " outside certified interval");
	switch (flux.kind) {
	case ScalarFlux::Kind::Burgers:
		switch (order) {
		case 0: return 0.5 * u * u;
		case 1: return u;
		case 2: return 1.0;
		default: return 0.0;
		}
	case ScalarFlux::Kind::CubicConvex:
		switch (order) {
		case 0: return 0.5 * u * u + u * u * u / 6.0;
		case 1: return u + 0.5 * u * u;
		case 2: return 1.0 + u;
		default: return 1.0;
		}
	case ScalarFlux::Kind::Polynomial:
		return detail::poly_derivative(flux.coeffs, u, order);
	}
	return 0.0;
}

/// f(u + dv) - f(u) without cancellation: an exact third-order Taylor sum for
/// fluxes of degree at most three, a plain difference otherwise.
inline double flux_increment(const ScalarFlux& flux, double u, double dv)
{
	if (flux.kind == ScalarFlux::Kind::Polynomial && flux.coeffs.size() > 4)
		return flux_eval(flux, u + dv, 0) - flux_eval(flux, u, 0);
	flux_eval(flux, u + dv, 0); // interval check on the end state
	return dv * (flux_eval(flux, u, 1) + dv * (flux_eval(flux, u, 2) / 2 + dv * flux_eval(flux, u, 3) / 6));
}

/// Ideal gas law p = Gamma e / v with T = e / c_heat.
struct IdealGasEOS
{
	double gamma = 0.4;
	double c_heat = 1.0;
};

struct PressurePartials
{
	double p, p_v, p_u, p_E;
};

inline PressurePartials eos_pressure_partials(const IdealGasEOS& eos, double v, double u, double E)
{
	const double e = E - 0.5 * u * u;
	if (!(v > 0.0) || !(e > 0.0))
		throw FluxError(FluxErrc::NonPhysicalState, "eos: need v > 0 and E - u^2/2 > 0");
	const double g = eos.gamma;
	return {g * e / v, -g * e / (v * v), -g * u / v, g / v};
}

inline double temperature(const IdealGasEOS& eos, double v, double u, double E)
{
	(void)v;
	return (E - 0.5 * u * u) / eos.c_heat;
}

/// Jacobian of the Lagrangian gas flux (-u, p, p u) in the variables (v, u, E).
inline std::array<std::array<double, 3>, 3> gas_jacobian(const IdealGasEOS& eos, double v, double u, double E)
{
	const PressurePartials pp = eos_pressure_partials(eos, v, u, E);
	return {{{0.0, -1.0, 0.0},
	         {pp.p_v, pp.p_u, pp.p_E},
	         {u * pp.p_v, u * pp.p_u + pp.p, u * pp.p_E}}};
}

/// Lagrangian sound speed sqrt(p p_E - p_v).
inline double sound_speed(const IdealGasEOS& eos, double v, double u, double E)
{
	const PressurePartials pp = eos_pressure_partials(eos, v, u, E);
	const double c2 = pp.p * pp.p_E - pp.p_v;
	if (!(c2 > 0.0))
		throw FluxError(FluxErrc::NotHyperbolic, "sound_speed: p p_E - p_v <= 0");
	return std::sqrt(c2);
}

} // namespace detlab
