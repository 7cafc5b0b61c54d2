// Command-line front end: train, sample, gradcheck, inspect.

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include <CLI11.hpp>

#include "ccgae/ccgae.hpp"

namespace fs = std::filesystem;
using namespace ccgae;

namespace {

// Exit codes
constexpr int kOk = 0;
constexpr int kConfigError = 2;
constexpr int kIoError = 3;
constexpr int kNonFinite = 4;
constexpr int kGradcheckFailed = 5;
constexpr int kBadArgument = 6;

/// Worker cap from CCGAE_THREADS, else the machine's parallelism.
unsigned worker_threads() {
	if (const char* env = std::getenv("CCGAE_THREADS")) {
		const long n = std::strtol(env, nullptr, 10);
		if (n > 0) return static_cast<unsigned>(n);
	}
	return std::max(1u, std::thread::hardware_concurrency());
}

std::string resolve(const fs::path& base, const std::string& p) {
	if (p.empty() || fs::path(p).is_absolute()) return p;
	return (base / p).lexically_normal().string();
}

Dataset load_training_data(const RunConfig& cfg, const fs::path& base) {
	Dataset d;
	if (cfg.dataset_format == "raw") {
		d = load_raw(resolve(base, cfg.train_raw));
	} else {
		const std::size_t classes = cfg.model == ModelKind::Gae ? cfg.n_y : 0;
		d = load_idx_dataset(resolve(base, cfg.train_images), resolve(base, cfg.train_labels), classes);
	}
	if (cfg.binarize) {
		d.examples = binarize(d.examples, cfg.binarize_threshold);
	}
	if (cfg.examples_per_class > 0) {
		d = take_per_class(d, cfg.examples_per_class);
	}
	return d;
}

struct TrainOptions {
	std::string config;
};

int cmd_train(const TrainOptions& opt) {
	RunConfig cfg;
	try {
		cfg = load_config(opt.config);
		cfg.validate();
	} catch (const ConfigError& e) {
		std::cerr << opt.config << ": " << e.what() << "\n";
		return kConfigError;
	} catch (const FormatError& e) {
		std::cerr << e.what() << "\n";
		return kIoError;
	} catch (const std::invalid_argument& e) {
		std::cerr << opt.config << ": " << e.what() << "\n";
		return kConfigError;
	}
	const fs::path base = fs::path(opt.config).parent_path();
	std::cout << echo_config(cfg) << std::flush;

	Dataset data;
	try {
		data = load_training_data(cfg, base);
	} catch (const FormatError& e) {
		std::cerr << "data error: " << e.what() << "\n";
		return kIoError;
	}
	std::cout << "# " << data.size() << " training examples, " << data.n_x() << " inputs, "
	          << data.n_classes << " classes\n";

	const std::string log_path = resolve(base, cfg.log_out);
	std::ofstream log;
	if (!log_path.empty()) {
		log.open(log_path, std::ios::trunc);
		if (!log) {
			std::cerr << "cannot write " << log_path << "\n";
			return kIoError;
		}
		log << "epoch,mean_loss,lr,wall_seconds\n";
	}
	auto on_epoch = [&](const EpochRecord& r) {
		const std::string line = csv_line(r);
		std::cout << line << std::endl;
		if (log) log << line << "\n" << std::flush;
	};

	Rng init = Rng(cfg.hp.seed).derive(Stream::Init);
	try {
		if (cfg.model == ModelKind::Gae) {
			const GaeDims dims{static_cast<Eigen::Index>(cfg.n_x), static_cast<Eigen::Index>(cfg.n_y),
					static_cast<Eigen::Index>(cfg.n_f), static_cast<Eigen::Index>(cfg.n_h)};
			auto model = GaeParams::random(dims, cfg.hidden_activation, cfg.output_activation, init);
			fit(model, data, cfg.hp, on_epoch);
			save_checkpoint(resolve(base, cfg.checkpoint_out), model, cfg.hp.loss);
		} else {
			auto model = DaeParams::random(static_cast<Eigen::Index>(cfg.n_x), static_cast<Eigen::Index>(cfg.n_h),
					cfg.tied, cfg.hidden_activation, cfg.output_activation, init);
			fit(model, data, cfg.hp, on_epoch);
			save_checkpoint(resolve(base, cfg.checkpoint_out), model, cfg.hp.loss);
		}
	} catch (const NonFiniteError& e) {
		std::cerr << "training aborted: " << e.what() << "\n";
		return kNonFinite;
	} catch (const DimensionError& e) {
		std::cerr << "shape error: " << e.what() << "\n";
		return kConfigError;
	} catch (const FormatError& e) {
		std::cerr << e.what() << "\n";
		return kIoError;
	}
	std::cout << "# wrote " << resolve(base, cfg.checkpoint_out) << "\n";
	return kOk;
}

struct SampleOptions {
	std::string checkpoint;
	std::string label = "0";
	std::size_t steps = 250;
	std::uint64_t seed = 0;
	std::string out = "samples.pgm";
	std::string trace;
	CorruptionKind corruption_kind = CorruptionKind::SaltPepper;
	double corruption_level = 0.5;
	std::string mode = "bernoulli";
	std::size_t tile_rows = 0;
	std::size_t tile_cols = 0;
	std::size_t grid_cols = 25;
};

fs::path per_label_path(const fs::path& p, std::size_t label) {
	fs::path out = p;
	out.replace_filename(p.stem().string() + "-" + std::to_string(label) + p.extension().string());
	return out;
}

template<typename Params>
int sample_model(const Params& model, const SampleOptions& opt) {
	const auto n_x = static_cast<std::size_t>(model.n_x());
	std::size_t tr = opt.tile_rows, tc = opt.tile_cols;
	if (tr == 0 && tc == 0) {
		const auto side = static_cast<std::size_t>(std::lround(std::sqrt(static_cast<double>(n_x))));
		tr = side * side == n_x ? side : 1;
		tc = n_x / tr;
	} else if (tr == 0) {
		tr = n_x / tc;
	} else if (tc == 0) {
		tc = n_x / tr;
	}
	if (tr * tc != n_x) {
		std::cerr << "tile geometry " << tr << "x" << tc << " does not match n_x = " << n_x << "\n";
		return kBadArgument;
	}

	ChainConfig cfg;
	cfg.steps = opt.steps;
	cfg.corruption = {opt.corruption_kind, opt.corruption_level};
	cfg.seed = opt.seed;
	cfg.output_mode = opt.mode == "expected" ? OutputMode::ExpectedValue : OutputMode::BernoulliSample;

	const auto n_y = static_cast<std::size_t>(conditioning_width(model));
	std::vector<std::size_t> labels;
	if (opt.label == "all") {
		for (std::size_t l = 0; l < std::max<std::size_t>(n_y, 1); ++l) labels.push_back(l);
	} else {
		std::size_t l = 0;
		try {
			l = std::stoul(opt.label);
		} catch (const std::exception&) {
			std::cerr << "label must be an integer or 'all'\n";
			return kBadArgument;
		}
		if (n_y > 0 && l >= n_y) {
			std::cerr << "label " << l << " out of range for " << n_y << " classes\n";
			return kBadArgument;
		}
		labels.push_back(l);
	}

	// one chain per label, run concurrently on shared read-only parameters
	std::vector<ChainTrace> traces(labels.size());
	const unsigned workers = std::min<unsigned>(worker_threads(), static_cast<unsigned>(labels.size()));
	{
		std::vector<std::jthread> pool;
		for (unsigned w = 0; w < workers; ++w) {
			pool.emplace_back([&, w] {
				for (std::size_t i = w; i < labels.size(); i += workers) {
					traces[i] = run_chain(model, labels[i], cfg);
				}
			});
		}
	}

	for (std::size_t i = 0; i < labels.size(); ++i) {
		const bool many = labels.size() > 1;
		const fs::path out = many ? per_label_path(opt.out, labels[i]) : fs::path(opt.out);
		write_pgm_grid(traces[i].expected(), tr, tc, opt.grid_cols, out);
		std::cout << "wrote " << out.string() << " (" << traces[i].size() << " steps, label " << labels[i] << ")\n";
		if (!opt.trace.empty()) {
			const fs::path t = many ? per_label_path(opt.trace, labels[i]) : fs::path(opt.trace);
			save_trace(t, traces[i]);
			std::cout << "wrote " << t.string() << "\n";
		}
	}
	return kOk;
}

int cmd_sample(const SampleOptions& opt) {
	if (opt.steps < 1) {
		std::cerr << "steps must be >= 1\n";
		return kBadArgument;
	}
	if (opt.mode != "bernoulli" && opt.mode != "expected") {
		std::cerr << "mode must be bernoulli or expected\n";
		return kBadArgument;
	}
	try {
		const Checkpoint ck = load_checkpoint(opt.checkpoint);
		return std::visit([&](const auto& c) { return sample_model(c.params, opt); }, ck);
	} catch (const FormatError& e) {
		std::cerr << e.what() << "\n";
		return kIoError;
	} catch (const std::invalid_argument& e) {
		std::cerr << e.what() << "\n";
		return kBadArgument;
	}
}

struct GradcheckCliOptions {
	std::vector<std::size_t> dims{7, 3, 5, 4};
	std::uint64_t seed = 0;
	std::size_t instances = 20;
	double epsilon = 1e-5;
	double threshold = 1e-4;
	std::string scale_gradient;  // BLOCK=FACTOR
};

int cmd_gradcheck(const GradcheckCliOptions& cli) {
	if (cli.dims.size() != 4) {
		std::cerr << "--dims takes n_x,n_y,n_f,n_h\n";
		return kBadArgument;
	}
	GradcheckOptions opt;
	opt.gae = {static_cast<Eigen::Index>(cli.dims[0]), static_cast<Eigen::Index>(cli.dims[1]),
			static_cast<Eigen::Index>(cli.dims[2]), static_cast<Eigen::Index>(cli.dims[3])};
	const std::size_t total = cli.dims[2] * (cli.dims[0] + cli.dims[1] + cli.dims[3]) + cli.dims[0] + cli.dims[3];
	if (total > 10000) {
		std::cerr << "model has " << total << " parameters; finite differences are limited to 10000\n";
		return kBadArgument;
	}
	opt.dae_n_x = opt.gae.n_x;
	opt.dae_n_h = opt.gae.n_h;
	opt.instances = cli.instances;
	opt.epsilon = cli.epsilon;
	if (!cli.scale_gradient.empty()) {
		const auto eq = cli.scale_gradient.find('=');
		if (eq == std::string::npos) {
			std::cerr << "--scale-gradient takes BLOCK=FACTOR\n";
			return kBadArgument;
		}
		opt.tamper_block = cli.scale_gradient.substr(0, eq);
		opt.tamper_scale = std::stod(cli.scale_gradient.substr(eq + 1));
	}
	const GradcheckReport report = run_gradcheck(opt, cli.seed);
	for (const auto& [name, err] : report.worst) {
		std::printf("%-40s %.3e %s\n", name.c_str(), err, err < cli.threshold ? "ok" : "FAIL");
	}
	const auto failed = report.failures(cli.threshold);
	if (!failed.empty()) {
		std::cerr << "gradient check failed in block " << failed.front() << " (" << failed.size()
		          << " block(s) above " << cli.threshold << ")\n";
		return kGradcheckFailed;
	}
	std::printf("all blocks below %.0e (max %.3e)\n", cli.threshold, report.max_error());
	return kOk;
}

int cmd_inspect(const std::string& path) {
	try {
		const Checkpoint ck = load_checkpoint(path);
		if (const auto* g = std::get_if<GaeCheckpoint>(&ck)) {
			const auto& p = g->params;
			std::cout << "format CCGAE1\nmodel gae\n"
			          << "n_x " << p.n_x() << "\nn_y " << p.n_y() << "\nn_f " << p.n_f() << "\nn_h " << p.n_h()
			          << "\nhidden_activation " << to_string(p.s_h) << "\noutput_activation " << to_string(p.s_o)
			          << "\nloss " << to_string(g->loss) << "\n";
			for (const auto& b : p.blocks()) {
				const Eigen::Map<const DenseVector> v(b.values.data(), static_cast<Eigen::Index>(b.values.size()));
				std::cout << "block " << b.name << " size " << b.values.size() << " rms "
				          << std::sqrt(v.squaredNorm() / std::max<double>(1.0, static_cast<double>(v.size()))) << "\n";
			}
		} else {
			const auto& d = std::get<DaeCheckpoint>(ck);
			const auto& p = d.params;
			std::cout << "format CCDAE1\nmodel dae\n"
			          << "n_x " << p.n_x() << "\nn_h " << p.n_h() << "\ntied " << (p.tied ? "true" : "false")
			          << "\nhidden_activation " << to_string(p.s_h) << "\noutput_activation " << to_string(p.s_o)
			          << "\nloss " << to_string(d.loss) << "\n";
		}
	} catch (const FormatError& e) {
		std::cerr << e.what() << "\n";
		return kIoError;
	}
	return kOk;
}

}  // namespace

int main(int argc, char** argv) {
	CLI::App app{"Denoising and class-conditional gated autoencoders: training and chain sampling"};
	app.require_subcommand(1);

	TrainOptions train;
	auto* train_cmd = app.add_subcommand("train", "Train a model from a config file");
	train_cmd->add_option("--config", train.config, "key = value config file")->required();

	SampleOptions sample;
	auto* sample_cmd = app.add_subcommand("sample", "Run a class-conditional sampling chain");
	std::string sample_config;
	sample_cmd->add_option("--config", sample_config, "Take defaults for the options below from a run config");
	auto* o_ckpt = sample_cmd->add_option("--checkpoint", sample.checkpoint, "Model checkpoint");
	sample_cmd->add_option("--label", sample.label, "Class label, or 'all'");
	auto* o_steps = sample_cmd->add_option("--steps", sample.steps, "Chain steps");
	auto* o_seed = sample_cmd->add_option("--seed", sample.seed, "Chain seed");
	sample_cmd->add_option("--out", sample.out, "Output PGM grid of expected values");
	sample_cmd->add_option("--trace", sample.trace, "Optional CCTRC1 trace output");
	auto* o_level = sample_cmd->add_option("--corruption-level", sample.corruption_level, "Corruption level (salt-and-pepper unless a config says otherwise)");
	auto* o_mode = sample_cmd->add_option("--mode", sample.mode, "bernoulli or expected");
	auto* o_rows = sample_cmd->add_option("--tile-rows", sample.tile_rows, "Tile height (default: square)");
	auto* o_cols = sample_cmd->add_option("--tile-cols", sample.tile_cols, "Tile width (default: square)");
	auto* o_grid = sample_cmd->add_option("--grid-cols", sample.grid_cols, "Tiles per grid row");

	GradcheckCliOptions gradcheck;
	auto* grad_cmd = app.add_subcommand("gradcheck", "Compare analytic gradients with finite differences");
	grad_cmd->add_option("--dims", gradcheck.dims, "n_x,n_y,n_f,n_h")->delimiter(',');
	grad_cmd->add_option("--seed", gradcheck.seed, "Instance seed");
	grad_cmd->add_option("--instances", gradcheck.instances, "Instances per loss/activation pair");
	grad_cmd->add_option("--epsilon", gradcheck.epsilon, "Central-difference step");
	grad_cmd->add_option("--threshold", gradcheck.threshold, "Largest accepted relative error");
	grad_cmd->add_option("--scale-gradient", gradcheck.scale_gradient)->group("");

	std::string inspect_path;
	auto* inspect_cmd = app.add_subcommand("inspect", "Print a checkpoint header");
	inspect_cmd->add_option("--checkpoint", inspect_path, "Model checkpoint")->required();

	CLI11_PARSE(app, argc, argv);

	if (*train_cmd) return cmd_train(train);
	if (*sample_cmd) {
		if (!sample_config.empty()) {
			RunConfig cfg;
			try {
				cfg = load_config(sample_config);
			} catch (const ConfigError& e) {
				std::cerr << sample_config << ": " << e.what() << "\n";
				return kConfigError;
			} catch (const FormatError& e) {
				std::cerr << e.what() << "\n";
				return kIoError;
			}
			// explicit flags win over the config
			if (!o_ckpt->count()) sample.checkpoint = resolve(fs::path(sample_config).parent_path(), cfg.checkpoint_out);
			if (!o_steps->count()) sample.steps = cfg.sample_steps;
			if (!o_seed->count()) sample.seed = cfg.hp.seed;
			sample.corruption_kind = cfg.hp.corruption.kind;
			if (!o_level->count()) sample.corruption_level = cfg.hp.corruption.level;
			if (!o_mode->count()) sample.mode = cfg.sample_mode == OutputMode::ExpectedValue ? "expected" : "bernoulli";
			if (!o_rows->count()) sample.tile_rows = cfg.image_rows;
			if (!o_cols->count()) sample.tile_cols = cfg.image_cols;
			if (!o_grid->count()) sample.grid_cols = cfg.sample_grid_cols;
		}
		if (sample.checkpoint.empty()) {
			std::cerr << "sample needs --checkpoint or --config\n";
			return kBadArgument;
		}
		return cmd_sample(sample);
	}
	if (*grad_cmd) return cmd_gradcheck(gradcheck);
	if (*inspect_cmd) return cmd_inspect(inspect_path);
	return kBadArgument;
}
