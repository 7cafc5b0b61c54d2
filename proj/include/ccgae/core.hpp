#ifndef CCGAE_CORE_HPP_
#define CCGAE_CORE_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace ccgae {

/// Row-major dense matrix of doubles. Storage is contiguous, so data() is
/// rows * cols values in row order.
using DenseMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using DenseVector = Eigen::VectorXd;

/// Thrown when operand shapes do not agree. The message names both shapes.
class DimensionError : public std::invalid_argument {
public:
	using std::invalid_argument::invalid_argument;
};

/// Thrown when a computation produces NaN or Inf.
class NonFiniteError : public std::runtime_error {
public:
	using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string shape(Eigen::Index rows, Eigen::Index cols) {
	std::ostringstream os;
	os << rows << "x" << cols;
	return os.str();
}

template<typename A, typename B>
std::string shapes(const char* what, const A& a, const B& b) {
	return std::string(what) + ": " + shape(a.rows(), a.cols()) + " vs " + shape(b.rows(), b.cols());
}

}  // namespace detail

inline void require_len(const DenseVector& v, Eigen::Index n, const char* what) {
	if (v.size() != n) {
		throw DimensionError(std::string(what) + ": expected length " + std::to_string(n) +
				", got " + std::to_string(v.size()));
	}
}

template<typename Derived>
bool all_finite(const Eigen::DenseBase<Derived>& m) {
	return m.allFinite();
}

inline DenseVector matvec(const DenseMatrix& m, const DenseVector& v) {
	if (m.cols() != v.size()) {
		throw DimensionError(detail::shapes("matvec", m, v));
	}
	return m * v;
}

/// Elementwise product.
inline DenseVector hadamard(const DenseVector& a, const DenseVector& b) {
	if (a.size() != b.size()) {
		throw DimensionError(detail::shapes("hadamard", a, b));
	}
	return a.cwiseProduct(b);
}

enum class Activation : std::uint8_t { Identity = 0, Logistic = 1, ReLU = 2 };

enum class LossKind : std::uint8_t { SquaredError = 0, CrossEntropy = 1 };

inline std::string to_string(Activation a) {
	switch (a) {
	case Activation::Identity: return "identity";
	case Activation::Logistic: return "logistic";
	case Activation::ReLU: return "relu";
	}
	return "?";
}

inline std::string to_string(LossKind k) {
	return k == LossKind::SquaredError ? "squared_error" : "cross_entropy";
}

inline Activation parse_activation(const std::string& s) {
	if (s == "identity") return Activation::Identity;
	if (s == "logistic" || s == "sigmoid") return Activation::Logistic;
	if (s == "relu") return Activation::ReLU;
	throw std::invalid_argument("unknown activation '" + s + "'");
}

inline LossKind parse_loss(const std::string& s) {
	if (s == "squared_error") return LossKind::SquaredError;
	if (s == "cross_entropy") return LossKind::CrossEntropy;
	throw std::invalid_argument("unknown loss '" + s + "'");
}

inline double logistic(double z) {
	// split keeps exp() from overflowing on either tail; the clamp keeps the
	// result off 0 and 1, which doubles would otherwise reach past |z| ~ 37
	constexpr double lo = std::numeric_limits<double>::denorm_min();
	constexpr double hi = 1.0 - std::numeric_limits<double>::epsilon() / 2;
	if (z >= 0.0) {
		return std::min(1.0 / (1.0 + std::exp(-z)), hi);
	}
	const double e = std::exp(z);
	return std::max(e / (1.0 + e), lo);
}

/// Applies the activation elementwise to a vector or matrix expression.
template<typename Derived>
auto activate(Activation a, const Eigen::MatrixBase<Derived>& v) {
	using Plain = typename Derived::PlainObject;
	switch (a) {
	case Activation::Logistic:
		return Plain(v.unaryExpr([](double z) { return logistic(z); }));
	case Activation::ReLU:
		return Plain(v.cwiseMax(0.0));
	case Activation::Identity:
		break;
	}
	return Plain(v);
}

/// Derivative of the activation, expressed through the pre-activation and
/// the activation output. ReLU'(0) is 0.
template<typename Pre, typename Out>
auto activation_derivative(Activation a, const Eigen::MatrixBase<Pre>& pre,
		const Eigen::MatrixBase<Out>& out) {
	using Plain = typename Pre::PlainObject;
	switch (a) {
	case Activation::Logistic:
		return Plain(out.array() * (1.0 - out.array()));
	case Activation::ReLU:
		return Plain((pre.array() > 0.0).template cast<double>());
	case Activation::Identity:
		break;
	}
	return Plain(Plain::Ones(pre.rows(), pre.cols()));
}

/// Predictions are clipped into [kClip, 1 - kClip] before taking logs.
inline constexpr double kClip = 1e-7;

inline double clip_probability(double p) {
	return std::clamp(p, kClip, 1.0 - kClip);
}

/// Reconstruction loss summed over dimensions. Cross-entropy is returned as a
/// positive quantity to be minimized.
template<typename X, typename XHat>
double loss(LossKind kind, const Eigen::MatrixBase<X>& x, const Eigen::MatrixBase<XHat>& xhat) {
	if (x.rows() != xhat.rows() || x.cols() != xhat.cols()) {
		throw DimensionError(detail::shapes("loss", x, xhat));
	}
	if (kind == LossKind::SquaredError) {
		return (x - xhat).squaredNorm();
	}
	double total = 0.0;
	for (Eigen::Index r = 0; r < x.rows(); ++r) {
		for (Eigen::Index c = 0; c < x.cols(); ++c) {
			const double t = x(r, c);
			const double p = clip_probability(xhat(r, c));
			total -= t * std::log(p) + (1.0 - t) * std::log(1.0 - p);
		}
	}
	return total;
}

/// d loss / d pre-activation of the output layer. The clip is treated as the
/// identity; logistic output with cross-entropy reduces to (xhat - target).
template<typename T, typename Pre, typename Out>
auto output_delta(LossKind kind, Activation out_act, const Eigen::MatrixBase<T>& target,
		const Eigen::MatrixBase<Pre>& pre, const Eigen::MatrixBase<Out>& xhat) {
	using Plain = typename Out::PlainObject;
	if (kind == LossKind::CrossEntropy) {
		if (out_act == Activation::Logistic) {
			return Plain(xhat - target);
		}
		const auto p = xhat.array().max(kClip).min(1.0 - kClip);
		Plain dldx = (-target.array() / p + (1.0 - target.array()) / (1.0 - p)).matrix();
		return Plain(dldx.cwiseProduct(activation_derivative(out_act, pre, xhat)));
	}
	Plain dldx = 2.0 * (xhat - target);
	return Plain(dldx.cwiseProduct(activation_derivative(out_act, pre, xhat)));
}

/// Purposes a random stream can be derived for. Streams for different
/// purposes never share draws.
enum class Stream : std::uint64_t {
	Init = 1,
	Corruption = 2,
	Walkback = 3,
	Shuffle = 4,
	Sampling = 5,
	Test = 6,
};

/// Seeded 64-bit generator. Child streams are derived from the seed and a key
/// path, never from the current state, so consuming draws in one stream does
/// not move any other.
class Rng {
public:
	using engine_type = std::mt19937_64;
	using result_type = engine_type::result_type;

	explicit Rng(std::uint64_t seed = 0) : seed_(seed), engine_(mix(seed)) {}

	std::uint64_t seed() const { return seed_; }

	Rng derive(std::initializer_list<std::uint64_t> keys) const {
		std::uint64_t s = seed_;
		for (auto k : keys) {
			s = mix(s ^ mix(k + 0x632be59bd9b4e019ULL));
		}
		return Rng(s);
	}

	Rng derive(Stream purpose) const { return derive({static_cast<std::uint64_t>(purpose)}); }

	result_type operator()() { return engine_(); }
	static constexpr result_type min() { return engine_type::min(); }
	static constexpr result_type max() { return engine_type::max(); }

	/// Uniform on [0, 1).
	double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }
	double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(engine_); }
	double normal(double stddev) { return std::normal_distribution<double>(0.0, stddev)(engine_); }
	bool bernoulli(double p) { return uniform() < p; }

private:
	// splitmix64 finalizer
	static std::uint64_t mix(std::uint64_t z) {
		z += 0x9e3779b97f4a7c15ULL;
		z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
		z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
		return z ^ (z >> 31);
	}

	std::uint64_t seed_;
	engine_type engine_;
};

/// Elementwise Bernoulli draw with the given probabilities.
inline DenseVector bernoulli_sample(const DenseVector& p, Rng& rng) {
	DenseVector out(p.size());
	for (Eigen::Index i = 0; i < p.size(); ++i) {
		out[i] = rng.bernoulli(p[i]) ? 1.0 : 0.0;
	}
	return out;
}

}  // namespace ccgae

#endif  // CCGAE_CORE_HPP_
