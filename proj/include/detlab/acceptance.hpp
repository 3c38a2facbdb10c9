#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <ostream>
#include <string>
#include <vector>

#include "experiments.hpp"

namespace detlab {

struct CriterionResult
{
	int id = 0;
	std::string title;
	bool pass = false;
	std::vector<Check> checks;
};

namespace detail {

inline ExperimentConfig accept_profile_config()
{
	ExperimentConfig c;
	c.experiment = Experiment::Profile;
	c.q = 0.09;
	c.profile_L = 8.0;
	c.profile_tol = 1e-11;
	return c;
}

inline ExperimentConfig accept_stability_config()
{
	ExperimentConfig c;
	c.experiment = Experiment::MajdaStability;
	c.q = 0.01;
	c.sim_h = 5e-3;
	c.sim_T = 50.0;
	c.sim_L_minus = 10.0;
	c.sim_L_plus = 4.0;
	c.bump_field = "v";
	c.bump_lo = -6.0;
	c.bump_hi = -5.0;
	c.bump_amp = 1e-3;
	c.energy_eta = 0.02;
	c.energy_transient = 0.3;
	return c;
}

inline ExperimentConfig accept_negative_speed_config()
{
	ExperimentConfig c;
	c.experiment = Experiment::NegativeSpeed;
	c.q = 0.0;
	c.flux_kind = "polynomial";
	c.flux_coeffs = {0.0, -1.0, 0.5}; // sigma = u0/2 - 1 = -1/2
	c.sim_h = 5e-3;
	c.sim_T = 20.0;
	c.sim_L_minus = 4.0;
	c.sim_L_plus = 14.0;
	c.sim_output_interval = 0.25;
	c.bump_field = "zeta";
	c.bump_lo = 1.0;
	c.bump_hi = 2.0;
	c.bump_amp = 1e-3;
	c.energy_alpha = 1.0;
	c.energy_rate_window = 5.0;
	return c;
}

inline ExperimentConfig accept_scalar_blowup_config()
{
	ExperimentConfig c;
	c.q = 0.09;
	c.flux_lo = -50.0;
	c.flux_hi = 50.0;
	return c;
}

inline ExperimentConfig accept_znd_config()
{
	ExperimentConfig c;
	c.experiment = Experiment::ZndBlowup;
	c.blowup_theta = {0.1, 0.05};
	c.blowup_family = 2;
	return c;
}

inline ExperimentConfig accept_no_damping_config()
{
	ExperimentConfig c = accept_scalar_blowup_config();
	c.experiment = Experiment::NoDamping;
	c.nodamp_n = {4, 8, 16};
	c.nodamp_amplitude = 2.0;
	return c;
}

inline CriterionResult criterion(int id, std::string title, std::vector<Check> checks)
{
	CriterionResult r{id, std::move(title), true, std::move(checks)};
	for (const Check& c : r.checks)
		r.pass = r.pass && c.pass;
	return r;
}

inline std::vector<Check> checks_of(const ExperimentResult& e, const std::string& prefix = {})
{
	std::vector<Check> out;
	for (const Check& c : e.checks)
		out.push_back({prefix + c.name, c.pass, c.detail});
	return out;
}

inline std::string file_bytes(const std::filesystem::path& p)
{
	std::ifstream f(p, std::ios::binary);
	return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

} // namespace detail

/// Criteria 1-9; every artifact lands under dir.
inline std::vector<CriterionResult> run_acceptance_pass(const std::string& dir, long seed, int workers, std::ostream* log)
{
	std::vector<CriterionResult> out;
	auto note = [&](const std::string& s) {
		if (log)
			*log << "  .. " << s << std::endl;
	};

	{
		note("profile oracle");
		const detail::Stopwatch sw;
		const ExperimentResult e = run_profile(detail::accept_profile_config());
		const double secs = sw.seconds();
		e.write(dir + "/c1_profile");
		auto ch = detail::checks_of(e);
		ch.push_back({"sigma_is_one_half", e.value("sigma") == 0.5, detail::fmt("sigma = %.17g", e.value("sigma"))});
		ch.push_back({"u_minus_inf_is_0.9", std::abs(e.value("u_minus_inf") - 0.9) <= 1e-10,
		              detail::fmt("u_-inf = %.17g", e.value("u_minus_inf"))});
		ch.push_back({"runtime_under_1s", secs < 1.0, detail::fmt("%.3f s", secs)});
		out.push_back(detail::criterion(1, "profile oracle", ch));
	}
	{
		note("decay envelope");
		const ExperimentResult e = run_kappa_sweep(detail::accept_profile_config(), {0.09, 0.05, 0.01, 0.001});
		e.write(dir + "/c2_kappa");
		out.push_back(detail::criterion(2, "decay envelope", detail::checks_of(e)));
	}
	ExperimentResult neg;
	{
		note("stability run");
		const detail::Stopwatch sw;
		const ExperimentResult e = run_majda_stability(detail::accept_stability_config());
		const double secs = sw.seconds();
		e.write(dir + "/c3_stability");
		auto ch = detail::checks_of(e);
		ch.push_back({"runtime_under_1min", secs < 60.0, detail::fmt("%.1f s", secs)});
		out.push_back(detail::criterion(3, "Majda stability", ch));

		note("negative-speed run");
		neg = run_negative_speed(detail::accept_negative_speed_config());
		neg.write(dir + "/c5_negative_speed");
		const double res = e.value("damping_residual");
		std::vector<Check> d4 = {{"residual_nonpositive_along_stable_run", res <= 0.0,
		                          detail::fmt("residual %.3g", res) +
		                              detail::fmt(" at C = %.4g, theta = %.4g", e.value("damping_C"), e.value("damping_theta"))}};
		for (const Check& c : neg.checks)
			if (c.name == "damping_fails_everywhere")
				d4.push_back({"negative_speed_control_positive", c.pass, "C <= 1e3, theta >= 0.01"});
		out.push_back(detail::criterion(4, "damping residual", d4));
		std::vector<Check> d5;
		for (const Check& c : neg.checks)
			if (c.name == "growth_rate_matches")
				d5.push_back(c);
		out.push_back(detail::criterion(5, "negative-speed instability", d5));
	}
	{
		note("scalar blowup oracle");
		const ExperimentResult e = run_scalar_blowup(detail::accept_scalar_blowup_config(), {0.5, 1.0, 2.0});
		e.write(dir + "/c6_scalar_blowup");
		out.push_back(detail::criterion(6, "scalar blowup oracle", detail::checks_of(e)));
	}
	{
		note("reduced detonation blowup (slow)");
		const ExperimentResult e = run_znd_blowup(detail::accept_znd_config(), workers);
		e.write(dir + "/c7_znd_blowup");
		out.push_back(detail::criterion(7, "ZND reduction and blowup", detail::checks_of(e)));
	}
	{
		note("eigen machinery");
		ExperimentConfig c;
		c.seed = seed;
		c.diag_states = 1000;
		const ExperimentResult e = run_char_diag(c);
		e.write(dir + "/c8_eigen");
		out.push_back(detail::criterion(8, "eigen machinery", detail::checks_of(e)));
	}
	{
		note("no-damping family");
		const ExperimentResult e = run_no_damping(detail::accept_no_damping_config());
		e.write(dir + "/c9_no_damping");
		auto ch = detail::checks_of(e);
		// the hyperbola fit is reported, not a pass condition
		std::vector<Check> pass;
		for (const Check& c : ch)
			if (c.name != "gradient_hyperbola_fit")
				pass.push_back(c);
		out.push_back(detail::criterion(9, "no-damping family", pass));
	}
	std::sort(out.begin(), out.end(), [](const CriterionResult& a, const CriterionResult& b) { return a.id < b.id; });
	return out;
}

/// Full suite: two passes with the same seed, criteria 1-9 from the first,
/// criterion 10 from a byte comparison of every CSV of both.
inline std::vector<CriterionResult> run_acceptance(const std::string& dir, long seed, int workers, std::ostream* log)
{
	namespace fs = std::filesystem;
	const std::string a = dir + "/run_a", b = dir + "/run_b";
	fs::remove_all(a);
	fs::remove_all(b);
	if (log)
		*log << "pass 1" << std::endl;
	std::vector<CriterionResult> out = run_acceptance_pass(a, seed, workers, log);
	if (log)
		*log << "pass 2" << std::endl;
	run_acceptance_pass(b, seed, workers, log);

	std::vector<Check> ch;
	int files = 0;
	for (const auto& entry : fs::recursive_directory_iterator(a)) {
		if (!entry.is_regular_file() || entry.path().extension() != ".csv")
			continue;
		++files;
		const fs::path rel = fs::relative(entry.path(), a);
		const fs::path other = fs::path(b) / rel;
		const bool same = fs::exists(other) && detail::file_bytes(entry.path()) == detail::file_bytes(other);
		if (!same)
			ch.push_back({rel.string(), false, "differs between passes"});
	}
	ch.push_back({"csv_files_compared", files > 0, std::to_string(files) + " files"});
	out.push_back(detail::criterion(10, "determinism", ch));
	return out;
}

/// One line per criterion.
inline void print_criteria(const std::vector<CriterionResult>& rs, std::ostream& os)
{
	for (const CriterionResult& r : rs) {
		os << "criterion " << r.id << " " << (r.pass ? "PASS" : "FAIL") << "  " << r.title;
		std::string failed;
		for (const Check& c : r.checks)
			if (!c.pass)
				failed += (failed.empty() ? "" : "; ") + c.name + (c.detail.empty() ? "" : " (" + c.detail + ")");
		if (!failed.empty())
			os << "  [" << failed << "]";
		os << '\n';
	}
}

/// Every check with its measured value.
inline void print_report(const std::vector<CriterionResult>& rs, std::ostream& os)
{
	for (const CriterionResult& r : rs) {
		os << "criterion " << r.id << " " << (r.pass ? "PASS" : "FAIL") << "  " << r.title << '\n';
		for (const Check& c : r.checks)
			os << "    " << (c.pass ? "ok   " : "FAIL ") << c.name << (c.detail.empty() ? "" : ": " + c.detail) << '\n';
	}
}

} // namespace detlab
