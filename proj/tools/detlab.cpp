// detlab: command-line driver for the experiments and the acceptance suite.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include "detlab/acceptance.hpp"
#include "detlab/config.hpp"
#include "detlab/csv.hpp"
#include "detlab/experiments.hpp"

using namespace detlab;

namespace {

constexpr int kPass = 0, kFail = 1, kUsage = 2;

struct Common
{
	std::string config;
	std::string out;
	long seed = -1;
	int workers = 1;
};

void add_common(CLI::App* sub, Common& c, bool with_config = true)
{
	if (with_config)
		sub->add_option("--config", c.config, "key = value config file")->check(CLI::ExistingFile);
	sub->add_option("--out", c.out, "output directory (overrides the config)");
	sub->add_option("--seed", c.seed, "seed for randomized sweeps")->check(CLI::NonNegativeNumber);
	sub->add_option("--workers", c.workers, "worker threads for independent runs")->check(CLI::PositiveNumber);
}

ExperimentConfig load(const Common& c)
{
	std::string text;
	if (!c.config.empty()) {
		std::ifstream f(c.config);
		std::stringstream ss;
		ss << f.rdbuf();
		text = ss.str();
	}
	ExperimentConfig cfg = parse_config(text);
	if (!c.out.empty())
		cfg.output = c.out;
	if (c.seed >= 0)
		cfg.seed = c.seed;
	return cfg;
}

int report(const ExperimentResult& r, const std::string& dir)
{
	r.write(dir);
	for (const auto& [k, v] : r.summary)
		std::cout << k << " = " << v << '\n';
	for (const Check& c : r.checks)
		std::cout << (c.pass ? "PASS " : "FAIL ") << c.name << (c.detail.empty() ? "" : ": " + c.detail) << '\n';
	std::cout << "artifacts in " << dir << '\n';
	return r.passed() ? kPass : kFail;
}

} // namespace

int main(int argc, char** argv)
{
	CLI::App app{"Detonation-wave stability and blowup experiments"};
	app.require_subcommand(1);

	Common profile_o, majda_o, char_o, znd_o, nod_o, acc_o;
	auto* profile = app.add_subcommand("profile", "integrate and verify a traveling-wave profile");
	add_common(profile, profile_o);

	auto* majda = app.add_subcommand("majda-run", "shock-frame run: majda-stability, majda-damping or negative-speed");
	add_common(majda, majda_o);

	std::string fit_file, fit_column = "energy";
	double fit_transient = 0.1, fit_lo = std::nan(""), fit_hi = std::nan("");
	auto* fit = app.add_subcommand("fit-decay", "fit an exponential rate to a CSV column");
	fit->add_option("file", fit_file, "CSV with a t column")->required()->check(CLI::ExistingFile);
	fit->add_option("--column", fit_column, "column to fit");
	fit->add_option("--transient", fit_transient, "leading fraction of samples to skip");
	fit->add_option("--t-lo", fit_lo, "window start (overrides --transient)");
	fit->add_option("--t-hi", fit_hi, "window end");

	auto* chard = app.add_subcommand("char-diag", "eigen frames and coefficients at random gas states");
	add_common(chard, char_o);

	auto* znd = app.add_subcommand("znd-blowup", "blowup runs of the reduced detonation model");
	add_common(znd, znd_o);

	auto* nod = app.add_subcommand("no-damping", "shrinking data that still blows up");
	add_common(nod, nod_o);

	auto* acc = app.add_subcommand("accept", "run the acceptance suite");
	add_common(acc, acc_o, false);

	try {
		app.parse(argc, argv);
	} catch (const CLI::ParseError& e) {
		const int code = app.exit(e);
		return code == 0 ? kPass : kUsage;
	}

	try {
		if (*profile) {
			ExperimentConfig c = load(profile_o);
			c.experiment = Experiment::Profile;
			return report(run_profile(c), c.output);
		}
		if (*majda) {
			ExperimentConfig c = load(majda_o);
			if (c.experiment != Experiment::MajdaStability && c.experiment != Experiment::MajdaDamping &&
			    c.experiment != Experiment::NegativeSpeed) {
				std::cerr << "majda-run: experiment must be majda-stability, majda-damping or negative-speed\n";
				return kUsage;
			}
			return report(run_experiment(c), c.output);
		}
		if (*fit) {
			const CsvTable t = read_csv(fit_file);
			const auto ts = column(t, "t"), ys = column(t, fit_column);
			const DecayFit f = std::isnan(fit_lo) ? fit_decay_rate(ts, ys, fit_transient)
			                                      : fit_decay_rate(ts, ys, fit_lo, std::isnan(fit_hi) ? ts.back() : fit_hi);
			std::cout << "rate = " << f.theta << "\nr2 = " << f.r2 << "\nsamples = " << f.n << '\n';
			return f.theta > 0.0 ? kPass : kFail;
		}
		if (*chard) {
			const ExperimentConfig c = load(char_o);
			return report(run_char_diag(c), c.output);
		}
		if (*znd) {
			ExperimentConfig c = load(znd_o);
			c.experiment = Experiment::ZndBlowup;
			return report(run_znd_blowup(c, znd_o.workers), c.output);
		}
		if (*nod) {
			ExperimentConfig c = load(nod_o);
			c.experiment = Experiment::NoDamping;
			return report(run_no_damping(c), c.output);
		}
		if (*acc) {
			const std::string dir = acc_o.out.empty() ? "acceptance_out" : acc_o.out;
			const auto rs = run_acceptance(dir, acc_o.seed >= 0 ? acc_o.seed : 1, acc_o.workers, &std::cerr);
			print_criteria(rs, std::cout);
			std::ofstream rep(dir + "/report.txt");
			print_report(rs, rep);
			for (const auto& r : rs)
				if (!r.pass)
					return kFail;
			return kPass;
		}
	} catch (const ConfigError& e) {
		std::cerr << "config error: " << e.what() << '\n';
		return kUsage;
	} catch (const ProfileError& e) {
		std::cerr << "invalid wave parameters: " << e.what() << '\n';
		return kUsage;
	} catch (const SimError& e) {
		std::cerr << "invalid simulation setup: " << e.what() << '\n';
		return kUsage;
	} catch (const EnergyError& e) {
		std::cerr << "bad series: " << e.what() << '\n';
		return kUsage;
	} catch (const BlowupError& e) {
		std::cerr << "blowup setup: " << e.what() << '\n';
		return e.code() == BlowupErrc::BadInput || e.code() == BlowupErrc::DistanceTooSmall ? kUsage : kFail;
	} catch (const std::exception& e) {
		std::cerr << "error: " << e.what() << '\n';
		return kFail;
	}
	return kUsage;
}
