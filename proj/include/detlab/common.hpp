#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace detlab {

/// Exception carrying a module-specific error code and an optional integer detail
/// (reason code, inequality index, line number).
template <class Code>
class Failure : public std::runtime_error
{
public:
	Failure(Code code, const std::string& what, int detail = 0)
		: std::runtime_error(what), code_(code), detail_(detail)
	{ }

	Code code() const noexcept { return code_; }
	int detail() const noexcept { return detail_; }

private:
	Code code_;
	int detail_;
};

struct LinearFit
{
	double slope = 0.0;
	double intercept = 0.0;
	double r2 = 1.0;
};

/// Ordinary least squares y = intercept + slope * x.
/// r2 is reported as 1 when the residual vanishes (including constant data).
inline LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y)
{
	LinearFit fit;
	const std::size_t n = x.size();
	if (n < 2 || y.size() != n)
		throw std::invalid_argument("linear_fit: need at least two paired samples");
	double mx = 0.0, my = 0.0;
	for (std::size_t i = 0; i < n; ++i) {
		mx += x[i];
		my += y[i];
	}
	mx /= double(n);
	my /= double(n);
	double sxx = 0.0, sxy = 0.0, syy = 0.0;
	for (std::size_t i = 0; i < n; ++i) {
		const double dx = x[i] - mx, dy = y[i] - my;
		sxx += dx * dx;
		sxy += dx * dy;
		syy += dy * dy;
	}
	if (sxx == 0.0)
		throw std::invalid_argument("linear_fit: abscissae are all equal");
	fit.slope = sxy / sxx;
	fit.intercept = my - fit.slope * mx;
	double ssr = 0.0;
	for (std::size_t i = 0; i < n; ++i) {
		const double r = y[i] - (fit.intercept + fit.slope * x[i]);
		ssr += r * r;
	}
	const double tiny = 1e-30 * (1.0 + syy);
	fit.r2 = (ssr <= tiny) ? 1.0 : (syy > 0.0 ? 1.0 - ssr / syy : 0.0);
	return fit;
}

/// Deterministic uniform variates from a 64-bit Mersenne state; avoids the
/// implementation-defined std distributions so sweeps reproduce across toolchains.
template <class Engine>
double uniform01(Engine& eng)
{
	return double(eng() >> 11) * 0x1.0p-53;
}

template <class Engine>
double uniform(Engine& eng, double lo, double hi)
{
	return lo + (hi - lo) * uniform01(eng);
}

} // namespace detlab
