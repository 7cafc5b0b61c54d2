#ifndef CCGAE_SAMPLING_HPP_
#define CCGAE_SAMPLING_HPP_

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ccgae/core.hpp"
#include "ccgae/corruption.hpp"
#include "ccgae/data_io.hpp"
#include "ccgae/io.hpp"
#include "ccgae/models.hpp"
#include "ccgae/training.hpp"

namespace ccgae {

enum class ChainInit : std::uint8_t { Zeros, DataExample, Custom };

enum class OutputMode : std::uint8_t {
	BernoulliSample,  // binary data: the state is a factorized Bernoulli draw
	ExpectedValue,    // real-valued data: the state is the conditional mean
};

struct ChainConfig {
	std::size_t steps = 250;
	CorruptionSpec corruption{CorruptionKind::SaltPepper, 0.5};
	ChainInit init = ChainInit::Zeros;
	DenseVector init_vector;  // used by DataExample and Custom
	OutputMode output_mode = OutputMode::BernoulliSample;
	std::uint64_t seed = 0;

	void validate(Eigen::Index n_x) const {
		if (steps < 1) {
			throw std::invalid_argument("chain: steps must be >= 1");
		}
		corruption.validate();
		if (init != ChainInit::Zeros) {
			require_len(init_vector, n_x, "chain: init vector");
		}
	}
};

struct ChainRecord {
	DenseVector expected;   // x-hat, the reconstruction mean
	DenseVector state;      // Bernoulli draw of expected, or expected itself
	DenseVector corrupted;  // corrupt(state), the next step's input
};

struct ChainTrace {
	std::vector<ChainRecord> steps;

	std::size_t size() const { return steps.size(); }
	std::vector<DenseVector> expected() const {
		std::vector<DenseVector> out;
		out.reserve(steps.size());
		for (const auto& s : steps) {
			out.push_back(s.expected);
		}
		return out;
	}
};

/// x_t ~ P(x | x~_{t-1}, y), then x~_t ~ C(x~ | x_t).
template<typename Params>
ChainRecord chain_step(const Params& p, const DenseVector& x_tilde, const DenseVector& y,
		const ChainConfig& cfg, Rng& rng) {
	ChainRecord rec;
	rec.expected = reconstruct(p, x_tilde, y);
	rec.state = cfg.output_mode == OutputMode::BernoulliSample ? bernoulli_sample(rec.expected, rng)
	                                                          : rec.expected;
	rec.corrupted = corrupt(cfg.corruption, rec.state, rng);
	return rec;
}

/// Runs the class-conditional chain for cfg.steps steps. Every step, including
/// the first, reconstructs from a corrupted copy of the previous state; the
/// initial state is the zero vector unless cfg.init says otherwise. The label
/// is one-hot encoded once and never corrupted.
template<typename Params>
ChainTrace run_chain(const Params& p, std::size_t label, const ChainConfig& cfg, Rng& rng) {
	cfg.validate(p.n_x());
	const auto n_y = static_cast<std::size_t>(conditioning_width(p));
	DenseVector y;
	if (n_y > 0) {
		y = one_hot(label, n_y);
	}
	const DenseVector init = cfg.init == ChainInit::Zeros ? DenseVector(DenseVector::Zero(p.n_x()))
	                                                      : cfg.init_vector;
	DenseVector x_tilde = corrupt(cfg.corruption, init, rng);
	ChainTrace trace;
	trace.steps.reserve(cfg.steps);
	for (std::size_t t = 0; t < cfg.steps; ++t) {
		trace.steps.push_back(chain_step(p, x_tilde, y, cfg, rng));
		x_tilde = trace.steps.back().corrupted;
	}
	return trace;
}

/// Chain generator for a label, derived from cfg.seed so chains for different
/// labels are independent and individually reproducible.
inline Rng chain_stream(std::uint64_t seed, std::size_t label) {
	return Rng(seed).derive({static_cast<std::uint64_t>(Stream::Sampling), label});
}

template<typename Params>
ChainTrace run_chain(const Params& p, std::size_t label, const ChainConfig& cfg) {
	Rng rng = chain_stream(cfg.seed, label);
	return run_chain(p, label, cfg, rng);
}

// Trace container "CCTRC1": step count and n_X (u32 LE), then each step's
// expected vector as f64 LE.

inline Bytes encode_trace(const ChainTrace& trace) {
	ByteWriter out;
	out.magic("CCTRC1");
	out.u32le(static_cast<std::uint32_t>(trace.size()));
	const auto n_x = trace.steps.empty() ? 0 : trace.steps.front().expected.size();
	out.u32le(static_cast<std::uint32_t>(n_x));
	for (const auto& s : trace.steps) {
		if (s.expected.size() != n_x) {
			throw DimensionError("encode_trace: ragged trace");
		}
		out.f64le(std::span<const double>(s.expected.data(), static_cast<std::size_t>(n_x)));
	}
	return out.take();
}

/// Expected vectors stored in a trace file.
inline std::vector<DenseVector> parse_trace(std::span<const std::uint8_t> data, const std::string& origin) {
	ByteReader in(data, origin);
	in.expect_magic("CCTRC1");
	const std::uint32_t steps = in.u32le();
	const std::uint32_t n_x = in.u32le();
	in.need(static_cast<std::uint64_t>(steps) * n_x * 8, "trace payload");
	std::vector<DenseVector> out(steps, DenseVector(n_x));
	for (auto& v : out) {
		in.f64le(std::span<double>(v.data(), n_x));
	}
	in.expect_end();
	return out;
}

inline void save_trace(const std::filesystem::path& path, const ChainTrace& trace) {
	write_file(path, encode_trace(trace));
}

inline std::vector<DenseVector> load_trace(const std::filesystem::path& path) {
	const Bytes data = read_file(path);
	return parse_trace(data, path.string());
}

}  // namespace ccgae

#endif  // CCGAE_SAMPLING_HPP_
