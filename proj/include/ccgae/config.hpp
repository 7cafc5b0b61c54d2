#ifndef CCGAE_CONFIG_HPP_
#define CCGAE_CONFIG_HPP_

#include <charconv>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>

#include "ccgae/core.hpp"
#include "ccgae/corruption.hpp"
#include "ccgae/sampling.hpp"
#include "ccgae/training.hpp"

namespace ccgae {

class ConfigError : public std::runtime_error {
public:
	ConfigError(std::size_t line, const std::string& what)
		: std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}

	/// 1-based line of the offending entry, 0 when not tied to a line.
	std::size_t line() const { return line_; }

private:
	std::size_t line_;
};

enum class ModelKind : std::uint8_t { Gae, Dae };

struct RunConfig {
	ModelKind model = ModelKind::Gae;
	std::size_t n_x = 784;
	std::size_t n_y = 10;
	std::size_t n_f = 1024;
	std::size_t n_h = 512;
	bool tied = true;
	Activation hidden_activation = Activation::ReLU;
	Activation output_activation = Activation::Logistic;
	Hyperparams hp;

	std::string dataset_format = "idx";  // idx | raw
	std::string train_images;
	std::string train_labels;
	std::string train_raw;
	bool binarize = true;
	double binarize_threshold = 0.5;
	std::size_t examples_per_class = 0;  // 0 keeps everything

	std::size_t image_rows = 28;
	std::size_t image_cols = 28;
	std::string checkpoint_out = "model.ckpt";
	std::string log_out = "train_log.csv";

	std::size_t sample_steps = 250;
	std::size_t sample_grid_cols = 25;
	OutputMode sample_mode = OutputMode::BernoulliSample;

	friend bool operator==(const RunConfig&, const RunConfig&) = default;

	void validate() const {
		hp.validate();
		if (n_x == 0 || n_h == 0) throw ConfigError(0, "n_x and n_h must be positive");
		if (model == ModelKind::Gae && (n_y == 0 || n_f == 0)) {
			throw ConfigError(0, "gae needs positive n_y and n_f");
		}
		if (image_rows * image_cols != 0 && image_rows * image_cols != n_x) {
			throw ConfigError(0, "image geometry " + std::to_string(image_rows) + "x" +
					std::to_string(image_cols) + " does not match n_x = " + std::to_string(n_x));
		}
		if (dataset_format != "idx" && dataset_format != "raw") {
			throw ConfigError(0, "dataset_format must be idx or raw");
		}
		if (dataset_format == "idx" && (train_images.empty() || train_labels.empty())) {
			throw ConfigError(0, "idx datasets need train_images and train_labels");
		}
		if (dataset_format == "raw" && train_raw.empty()) {
			throw ConfigError(0, "raw datasets need train_raw");
		}
		if (checkpoint_out.empty()) throw ConfigError(0, "checkpoint_out is empty");
	}
};

namespace detail {

inline std::string trim(const std::string& s) {
	const auto b = s.find_first_not_of(" \t\r");
	if (b == std::string::npos) return {};
	const auto e = s.find_last_not_of(" \t\r");
	return s.substr(b, e - b + 1);
}

/// Shortest text that parses back to the same double.
inline std::string format_real(double v) {
	char buf[64];
	const auto res = std::to_chars(buf, buf + sizeof(buf), v);
	return std::string(buf, res.ptr);
}

inline double parse_real(const std::string& s, std::size_t line, const std::string& key) {
	double v = 0.0;
	const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
	if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
		throw ConfigError(line, key + ": expected a number, got '" + s + "'");
	}
	return v;
}

inline std::uint64_t parse_count(const std::string& s, std::size_t line, const std::string& key) {
	std::uint64_t v = 0;
	const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
	if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
		throw ConfigError(line, key + ": expected a non-negative integer, got '" + s + "'");
	}
	return v;
}

inline bool parse_flag(const std::string& s, std::size_t line, const std::string& key) {
	if (s == "true" || s == "1" || s == "yes") return true;
	if (s == "false" || s == "0" || s == "no") return false;
	throw ConfigError(line, key + ": expected true/false, got '" + s + "'");
}

}  // namespace detail

/// Parses flat "key = value" lines; '#' starts a comment. Unknown or repeated
/// keys are errors. Missing keys keep their defaults.
inline RunConfig parse_config(std::istream& in) {
	RunConfig c;
	std::set<std::string> seen;
	std::string raw;
	std::size_t line = 0;
	while (std::getline(in, raw)) {
		++line;
		if (const auto hash = raw.find('#'); hash != std::string::npos) {
			raw.erase(hash);
		}
		const std::string text = detail::trim(raw);
		if (text.empty()) continue;
		const auto eq = text.find('=');
		if (eq == std::string::npos) {
			throw ConfigError(line, "expected 'key = value', got '" + text + "'");
		}
		const std::string key = detail::trim(text.substr(0, eq));
		const std::string val = detail::trim(text.substr(eq + 1));
		if (!seen.insert(key).second) {
			throw ConfigError(line, "duplicate key '" + key + "'");
		}
		auto count = [&] { return static_cast<std::size_t>(detail::parse_count(val, line, key)); };
		auto real = [&] { return detail::parse_real(val, line, key); };
		auto flag = [&] { return detail::parse_flag(val, line, key); };
		try {
			if (key == "model") {
				if (val == "gae") c.model = ModelKind::Gae;
				else if (val == "dae") c.model = ModelKind::Dae;
				else throw ConfigError(line, "model must be gae or dae, got '" + val + "'");
			} else if (key == "n_x") c.n_x = count();
			else if (key == "n_y") c.n_y = count();
			else if (key == "n_f") c.n_f = count();
			else if (key == "n_h") c.n_h = count();
			else if (key == "tied") c.tied = flag();
			else if (key == "hidden_activation") c.hidden_activation = parse_activation(val);
			else if (key == "output_activation") c.output_activation = parse_activation(val);
			else if (key == "loss") c.hp.loss = parse_loss(val);
			else if (key == "corruption") c.hp.corruption.kind = parse_corruption_kind(val);
			else if (key == "corruption_level") c.hp.corruption.level = real();
			else if (key == "walkback_k") c.hp.walkback_k = count();
			else if (key == "lr") c.hp.lr0 = real();
			else if (key == "anneal") c.hp.anneal = real();
			else if (key == "momentum") c.hp.momentum = real();
			else if (key == "batch_size") c.hp.batch_size = count();
			else if (key == "epochs") c.hp.epochs = count();
			else if (key == "seed") c.hp.seed = detail::parse_count(val, line, key);
			else if (key == "resample_reconstructions") c.hp.resample_reconstructions = flag();
			else if (key == "dataset_format") c.dataset_format = val;
			else if (key == "train_images") c.train_images = val;
			else if (key == "train_labels") c.train_labels = val;
			else if (key == "train_raw") c.train_raw = val;
			else if (key == "binarize") c.binarize = flag();
			else if (key == "binarize_threshold") c.binarize_threshold = real();
			else if (key == "examples_per_class") c.examples_per_class = count();
			else if (key == "image_rows") c.image_rows = count();
			else if (key == "image_cols") c.image_cols = count();
			else if (key == "checkpoint_out") c.checkpoint_out = val;
			else if (key == "log_out") c.log_out = val;
			else if (key == "sample_steps") c.sample_steps = count();
			else if (key == "sample_grid_cols") c.sample_grid_cols = count();
			else if (key == "sample_mode") {
				if (val == "bernoulli") c.sample_mode = OutputMode::BernoulliSample;
				else if (val == "expected") c.sample_mode = OutputMode::ExpectedValue;
				else throw ConfigError(line, "sample_mode must be bernoulli or expected");
			} else {
				throw ConfigError(line, "unknown key '" + key + "'");
			}
		} catch (const ConfigError&) {
			throw;
		} catch (const std::invalid_argument& e) {
			throw ConfigError(line, e.what());
		}
	}
	return c;
}

inline RunConfig parse_config(const std::string& text) {
	std::istringstream in(text);
	return parse_config(in);
}

inline RunConfig load_config(const std::filesystem::path& path) {
	std::ifstream in(path);
	if (!in) {
		throw FormatError(FormatError::Kind::Io, "cannot open config " + path.string());
	}
	return parse_config(in);
}

/// Canonical text of every setting; parse_config(echo_config(c)) == c.
inline std::string echo_config(const RunConfig& c) {
	std::ostringstream os;
	auto put = [&](const char* key, const std::string& v) { os << key << " = " << v << "\n"; };
	auto num = [](std::uint64_t v) { return std::to_string(v); };
	auto flag = [](bool b) { return std::string(b ? "true" : "false"); };
	put("model", c.model == ModelKind::Gae ? "gae" : "dae");
	put("n_x", num(c.n_x));
	put("n_y", num(c.n_y));
	put("n_f", num(c.n_f));
	put("n_h", num(c.n_h));
	put("tied", flag(c.tied));
	put("hidden_activation", to_string(c.hidden_activation));
	put("output_activation", to_string(c.output_activation));
	put("loss", to_string(c.hp.loss));
	put("corruption", to_string(c.hp.corruption.kind));
	put("corruption_level", detail::format_real(c.hp.corruption.level));
	put("walkback_k", num(c.hp.walkback_k));
	put("lr", detail::format_real(c.hp.lr0));
	put("anneal", detail::format_real(c.hp.anneal));
	put("momentum", detail::format_real(c.hp.momentum));
	put("batch_size", num(c.hp.batch_size));
	put("epochs", num(c.hp.epochs));
	put("seed", num(c.hp.seed));
	put("resample_reconstructions", flag(c.hp.resample_reconstructions));
	put("dataset_format", c.dataset_format);
	put("train_images", c.train_images);
	put("train_labels", c.train_labels);
	put("train_raw", c.train_raw);
	put("binarize", flag(c.binarize));
	put("binarize_threshold", detail::format_real(c.binarize_threshold));
	put("examples_per_class", num(c.examples_per_class));
	put("image_rows", num(c.image_rows));
	put("image_cols", num(c.image_cols));
	put("checkpoint_out", c.checkpoint_out);
	put("log_out", c.log_out);
	put("sample_steps", num(c.sample_steps));
	put("sample_grid_cols", num(c.sample_grid_cols));
	put("sample_mode", c.sample_mode == OutputMode::BernoulliSample ? "bernoulli" : "expected");
	return os.str();
}

}  // namespace ccgae

#endif  // CCGAE_CONFIG_HPP_
