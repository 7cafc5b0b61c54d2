#ifndef CCGAE_CORRUPTION_HPP_
#define CCGAE_CORRUPTION_HPP_

#include <stdexcept>
#include <string>

#include "ccgae/core.hpp"

namespace ccgae {

enum class CorruptionKind : std::uint8_t { Gaussian = 0, Masking = 1, SaltPepper = 2 };

/// Noise process C(x~|x). level is the standard deviation for Gaussian noise
/// and the per-dimension corruption probability otherwise.
struct CorruptionSpec {
	CorruptionKind kind = CorruptionKind::SaltPepper;
	double level = 0.0;

	void validate() const {
		if (!std::isfinite(level)) {
			throw std::invalid_argument("corruption level must be finite");
		}
		if (kind == CorruptionKind::Gaussian) {
			if (level < 0.0) {
				throw std::invalid_argument("gaussian sigma must be >= 0, got " + std::to_string(level));
			}
		} else if (level < 0.0 || level > 1.0) {
			throw std::invalid_argument("corruption probability must lie in [0,1], got " +
					std::to_string(level));
		}
	}

	friend bool operator==(const CorruptionSpec&, const CorruptionSpec&) = default;
};

inline std::string to_string(CorruptionKind k) {
	switch (k) {
	case CorruptionKind::Gaussian: return "gaussian";
	case CorruptionKind::Masking: return "masking";
	case CorruptionKind::SaltPepper: return "salt_pepper";
	}
	return "?";
}

inline CorruptionKind parse_corruption_kind(const std::string& s) {
	if (s == "gaussian") return CorruptionKind::Gaussian;
	if (s == "masking") return CorruptionKind::Masking;
	if (s == "salt_pepper") return CorruptionKind::SaltPepper;
	throw std::invalid_argument("unknown corruption kind '" + s + "'");
}

/// Corrupts x in place. Draw order is one decision per coordinate in index
/// order, then (salt-and-pepper only) the 0/1 choice for that coordinate.
template<typename Derived>
void corrupt_inplace(const CorruptionSpec& spec, Eigen::MatrixBase<Derived>&& x, Rng& rng) {
	spec.validate();
	switch (spec.kind) {
	case CorruptionKind::Gaussian:
		if (spec.level == 0.0) {
			return;
		}
		for (Eigen::Index i = 0; i < x.size(); ++i) {
			x(i) += rng.normal(spec.level);
		}
		return;
	case CorruptionKind::Masking:
		for (Eigen::Index i = 0; i < x.size(); ++i) {
			if (rng.bernoulli(spec.level)) {
				x(i) = 0.0;
			}
		}
		return;
	case CorruptionKind::SaltPepper:
		for (Eigen::Index i = 0; i < x.size(); ++i) {
			if (rng.bernoulli(spec.level)) {
				x(i) = rng.bernoulli(0.5) ? 1.0 : 0.0;
			}
		}
		return;
	}
}

template<typename Derived>
void corrupt_inplace(const CorruptionSpec& spec, Eigen::MatrixBase<Derived>& x, Rng& rng) {
	corrupt_inplace(spec, std::move(x), rng);
}

inline DenseVector corrupt(const CorruptionSpec& spec, const DenseVector& x, Rng& rng) {
	if (!x.allFinite()) {
		throw std::invalid_argument("corrupt: input is not finite");
	}
	DenseVector out = x;
	corrupt_inplace(spec, out, rng);
	return out;
}

}  // namespace ccgae

#endif  // CCGAE_CORRUPTION_HPP_
