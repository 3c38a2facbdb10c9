#pragma once

#include <cmath>
#include <functional>
#include <map>
#include <sstream>
#include <type_traits>
#include <string>
#include <vector>

#include "common.hpp"

namespace detlab {

enum class ConfigErrc { ParseError, UnknownKey, RangeError };
using ConfigError = Failure<ConfigErrc>;

enum class Experiment { Profile, MajdaStability, MajdaDamping, NegativeSpeed, ZndBlowup, NoDamping };

inline const char* to_string(Experiment e)
{
	switch (e) {
	case Experiment::Profile: return "profile";
	case Experiment::MajdaStability: return "majda-stability";
	case Experiment::MajdaDamping: return "majda-damping";
	case Experiment::NegativeSpeed: return "negative-speed";
	case Experiment::ZndBlowup: return "znd-blowup";
	case Experiment::NoDamping: return "no-damping";
	}
	return "?";
}

struct ExperimentConfig
{
	Experiment experiment = Experiment::Profile;
	std::string output = "out";
	long seed = 1;

	// scalar model
	double k = 1.0;
	double q = 0.09;
	double u0 = 1.0;
	double u_i = 0.5;
	std::string flux_kind = "burgers"; // burgers | cubic | polynomial
	std::vector<double> flux_coeffs;
	double flux_lo = -10.0;
	double flux_hi = 10.0;
	double profile_L = 10.0;
	double profile_tol = 1e-10;

	// shock-frame simulation
	double sim_h = 0.005;
	double sim_T = 50.0;
	double sim_L_minus = 10.0;
	double sim_L_plus = 4.0;
	double sim_cfl = 0.4;
	double sim_output_interval = 0.5;
	std::string bump_field = "v"; // v | zeta
	double bump_lo = -6.0;
	double bump_hi = -5.0;
	double bump_amp = 1e-3;

	// energy
	double energy_eta = 0.02;
	double energy_C = 1.0;
	double energy_alpha = 1.0;
	double energy_transient = 0.3;
	double energy_rate_window = 5.0; // growth-rate window for the negative-speed run

	// gas
	double znd_gamma = 0.4;
	double znd_c_heat = 1.0;
	double znd_k = 1.0;
	double znd_q = 1.0;
	double znd_sigma = 2.0;
	double znd_v_plus = 1.0;
	double znd_e_plus = 1.0;
	double znd_T_ignition = -1.0;

	// blowup
	std::vector<double> blowup_theta = {0.1};
	int blowup_family = 2;
	double blowup_margin = 3.0;
	double blowup_grad_factor = 1e3;
	double blowup_amp_factor = 2.0;
	double blowup_h = 0.005;
	double blowup_macro_dt = 0.05;
	int blowup_seeds = 101;
	double blowup_x0 = 0.0; // 0: placed at the required distance

	// no-damping family
	std::vector<double> nodamp_n = {4, 8, 16};
	double nodamp_amplitude = 2.0;

	// eigen diagnostics
	int diag_states = 1000;
};

namespace detail {

inline std::string trim(const std::string& s)
{
	const auto b = s.find_first_not_of(" \t\r");
	if (b == std::string::npos)
		return "";
	const auto e = s.find_last_not_of(" \t\r");
	return s.substr(b, e - b + 1);
}

inline double parse_number(const std::string& v, int line)
{
	std::size_t pos = 0;
	double d = 0.0;
	try {
		d = std::stod(v, &pos);
	} catch (const std::exception&) {
		throw ConfigError(ConfigErrc::ParseError, "line " + std::to_string(line) + ": not a number: " + v, line);
	}
	if (pos != v.size() || !std::isfinite(d))
		throw ConfigError(ConfigErrc::ParseError, "line " + std::to_string(line) + ": not a number: " + v, line);
	return d;
}

inline std::vector<double> parse_list(const std::string& v, int line)
{
	std::vector<double> out;
	std::stringstream ss(v);
	std::string item;
	while (std::getline(ss, item, ','))
		out.push_back(parse_number(trim(item), line));
	if (out.empty())
		throw ConfigError(ConfigErrc::ParseError, "line " + std::to_string(line) + ": empty list", line);
	return out;
}

} // namespace detail

/// Line-oriented `key = value` text; `#` starts a comment. Unknown keys and
/// out-of-range values are errors, everything unset keeps its default.
inline ExperimentConfig parse_config(const std::string& text)
{
	ExperimentConfig c;
	using Setter = std::function<void(const std::string&, int)>;
	auto num = [](double& dst, std::function<bool(double)> ok, const char* rule) -> Setter {
		return [&dst, ok, rule](const std::string& v, int line) {
			const double d = detail::parse_number(v, line);
			if (!ok(d))
				throw ConfigError(ConfigErrc::RangeError, "line " + std::to_string(line) + ": value must be " + rule, line);
			dst = d;
		};
	};
	auto integer = [](auto& dst, double lo, const char* rule) -> Setter {
		return [&dst, lo, rule](const std::string& v, int line) {
			const double d = detail::parse_number(v, line);
			if (d != std::floor(d) || d < lo)
				throw ConfigError(ConfigErrc::RangeError, "line " + std::to_string(line) + ": value must be " + rule, line);
			dst = static_cast<std::remove_reference_t<decltype(dst)>>(d);
		};
	};
	auto list = [](std::vector<double>& dst, std::function<bool(double)> ok, const char* rule) -> Setter {
		return [&dst, ok, rule](const std::string& v, int line) {
			auto l = detail::parse_list(v, line);
			for (double d : l)
				if (!ok(d))
					throw ConfigError(ConfigErrc::RangeError, "line " + std::to_string(line) + ": entries must be " + rule, line);
			dst = std::move(l);
		};
	};
	auto choice = [](std::string& dst, std::vector<std::string> allowed) -> Setter {
		return [&dst, allowed](const std::string& v, int line) {
			for (const auto& a : allowed)
				if (a == v) {
					dst = v;
					return;
				}
			throw ConfigError(ConfigErrc::RangeError, "line " + std::to_string(line) + ": unsupported value " + v, line);
		};
	};
	const auto pos = [](double d) { return d > 0.0; };
	const auto nonneg = [](double d) { return d >= 0.0; };
	const auto any = [](double) { return true; };

	std::map<std::string, Setter> keys = {
		{"experiment",
		 [&](const std::string& v, int line) {
			 for (Experiment e : {Experiment::Profile, Experiment::MajdaStability, Experiment::MajdaDamping,
		                          Experiment::NegativeSpeed, Experiment::ZndBlowup, Experiment::NoDamping})
				 if (v == to_string(e)) {
					 c.experiment = e;
					 return;
				 }
			 throw ConfigError(ConfigErrc::RangeError, "line " + std::to_string(line) + ": unknown experiment " + v, line);
		 }},
		{"output", [&](const std::string& v, int) { c.output = v; }},
		{"seed", integer(c.seed, 0, "a non-negative integer")},
		{"wave.k", num(c.k, pos, "positive")},
		{"wave.q", num(c.q, any, "a number")},
		{"wave.u0", num(c.u0, pos, "positive")},
		{"wave.u_i", num(c.u_i, pos, "positive")},
		{"flux.kind", choice(c.flux_kind, {"burgers", "cubic", "polynomial"})},
		{"flux.coeffs", list(c.flux_coeffs, any, "numbers")},
		{"flux.lo", num(c.flux_lo, any, "a number")},
		{"flux.hi", num(c.flux_hi, any, "a number")},
		{"profile.L", num(c.profile_L, pos, "positive")},
		{"profile.tol", num(c.profile_tol, pos, "positive")},
		{"sim.h", num(c.sim_h, pos, "positive")},
		{"sim.T", num(c.sim_T, pos, "positive")},
		{"sim.L_minus", num(c.sim_L_minus, pos, "positive")},
		{"sim.L_plus", num(c.sim_L_plus, pos, "positive")},
		{"sim.cfl", num(c.sim_cfl, [](double d) { return d > 0.0 && d <= 1.0; }, "in (0, 1]")},
		{"sim.output_interval", num(c.sim_output_interval, pos, "positive")},
		{"bump.field", choice(c.bump_field, {"v", "zeta"})},
		{"bump.lo", num(c.bump_lo, any, "a number")},
		{"bump.hi", num(c.bump_hi, any, "a number")},
		{"bump.amp", num(c.bump_amp, nonneg, "non-negative")},
		{"energy.eta", num(c.energy_eta, pos, "positive")},
		{"energy.C", num(c.energy_C, pos, "positive")},
		{"energy.alpha", num(c.energy_alpha, pos, "positive")},
		{"energy.transient", num(c.energy_transient, [](double d) { return d >= 0.0 && d < 1.0; }, "in [0, 1)")},
		{"energy.rate_window", num(c.energy_rate_window, pos, "positive")},
		{"znd.gamma", num(c.znd_gamma, pos, "positive")},
		{"znd.c_heat", num(c.znd_c_heat, pos, "positive")},
		{"znd.k", num(c.znd_k, pos, "positive")},
		{"znd.q", num(c.znd_q, nonneg, "non-negative")},
		{"znd.sigma", num(c.znd_sigma, pos, "positive")},
		{"znd.v_plus", num(c.znd_v_plus, pos, "positive")},
		{"znd.e_plus", num(c.znd_e_plus, pos, "positive")},
		{"znd.T_ignition", num(c.znd_T_ignition, any, "a number")},
		{"blowup.theta", list(c.blowup_theta, nonneg, "non-negative")},
		{"blowup.family", integer(c.blowup_family, 0, "a non-negative integer")},
		{"blowup.margin", num(c.blowup_margin, pos, "positive")},
		{"blowup.grad_factor", num(c.blowup_grad_factor, [](double d) { return d > 1.0; }, "greater than 1")},
		{"blowup.amp_factor", num(c.blowup_amp_factor, [](double d) { return d >= 1.0; }, "at least 1")},
		{"blowup.h", num(c.blowup_h, pos, "positive")},
		{"blowup.macro_dt", num(c.blowup_macro_dt, pos, "positive")},
		{"blowup.seeds", integer(c.blowup_seeds, 3, "an integer >= 3")},
		{"blowup.x0", num(c.blowup_x0, [](double d) { return d <= 0.0; }, "non-positive")},
		{"nodamp.n", list(c.nodamp_n, [](double d) { return d >= 0.0 && d == std::floor(d); }, "non-negative integers")},
		{"nodamp.amplitude", num(c.nodamp_amplitude, pos, "positive")},
		{"diag.states", integer(c.diag_states, 1, "a positive integer")},
	};

	std::stringstream in(text);
	std::string raw;
	int line = 0;
	while (std::getline(in, raw)) {
		++line;
		const auto hash = raw.find('#');
		const std::string s = detail::trim(hash == std::string::npos ? raw : raw.substr(0, hash));
		if (s.empty())
			continue;
		const auto eq = s.find('=');
		if (eq == std::string::npos)
			throw ConfigError(ConfigErrc::ParseError, "line " + std::to_string(line) + ": expected key = value", line);
		const std::string key = detail::trim(s.substr(0, eq)), value = detail::trim(s.substr(eq + 1));
		if (key.empty() || value.empty())
			throw ConfigError(ConfigErrc::ParseError, "line " + std::to_string(line) + ": expected key = value", line);
		const auto it = keys.find(key);
		if (it == keys.end())
			throw ConfigError(ConfigErrc::UnknownKey, "line " + std::to_string(line) + ": unknown key " + key, line);
		it->second(value, line);
	}

	if (!(c.u_i < c.u0))
		throw ConfigError(ConfigErrc::RangeError, "wave.u_i must be below wave.u0");
	if (!(c.flux_lo < c.flux_hi))
		throw ConfigError(ConfigErrc::RangeError, "flux.lo must be below flux.hi");
	if (c.flux_kind == "polynomial" && c.flux_coeffs.empty())
		throw ConfigError(ConfigErrc::RangeError, "flux.kind = polynomial needs flux.coeffs");
	if (!(c.bump_lo < c.bump_hi))
		throw ConfigError(ConfigErrc::RangeError, "bump.lo must be below bump.hi");
	if (!(c.sim_h < c.sim_L_minus) || !(c.sim_h < c.sim_L_plus))
		throw ConfigError(ConfigErrc::RangeError, "sim.h must be smaller than both half-line lengths");
	return c;
}

} // namespace detlab
