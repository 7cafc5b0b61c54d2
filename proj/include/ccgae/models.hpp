#ifndef CCGAE_MODELS_HPP_
#define CCGAE_MODELS_HPP_

#include <array>
#include <cmath>
#include <span>
#include <string_view>
#include <type_traits>
#include <vector>

#include "ccgae/core.hpp"

namespace ccgae {

/// A named, contiguous view of one parameter (or gradient) block.
template<typename T>
struct BlockView {
	std::string_view name;
	std::span<T> values;
};

namespace detail {

template<typename M>
auto view(std::string_view name, M& m) {
	using T = std::remove_pointer_t<decltype(m.data())>;
	return BlockView<T>{name, std::span<T>(m.data(), static_cast<std::size_t>(m.size()))};
}

template<typename M>
void uniform_fill(M& m, double r, Rng& rng) {
	for (Eigen::Index i = 0; i < m.size(); ++i) {
		m.data()[i] = rng.uniform(-r, r);
	}
}

/// Scaled uniform initialization: r = sqrt(6 / (fan_in + fan_out)).
inline void scaled_init(DenseMatrix& m, Eigen::Index fan_in, Eigen::Index fan_out, Rng& rng) {
	const double r = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
	uniform_fill(m, r, rng);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Classic autoencoder

struct DaeParams {
	DenseMatrix W;      // n_H x n_X
	DenseVector b;      // n_H
	DenseVector b_out;  // n_X
	bool tied = true;
	DenseMatrix W_out;  // n_X x n_H, empty when tied
	Activation s_h = Activation::Logistic;
	Activation s_o = Activation::Logistic;

	Eigen::Index n_x() const { return W.cols(); }
	Eigen::Index n_h() const { return W.rows(); }

	static DaeParams zeros(Eigen::Index n_x, Eigen::Index n_h, bool tied,
			Activation s_h, Activation s_o) {
		DaeParams p;
		p.W = DenseMatrix::Zero(n_h, n_x);
		p.b = DenseVector::Zero(n_h);
		p.b_out = DenseVector::Zero(n_x);
		p.tied = tied;
		if (!tied) {
			p.W_out = DenseMatrix::Zero(n_x, n_h);
		}
		p.s_h = s_h;
		p.s_o = s_o;
		return p;
	}

	static DaeParams random(Eigen::Index n_x, Eigen::Index n_h, bool tied,
			Activation s_h, Activation s_o, Rng& rng) {
		DaeParams p = zeros(n_x, n_h, tied, s_h, s_o);
		detail::scaled_init(p.W, n_x, n_h, rng);
		if (!tied) {
			detail::scaled_init(p.W_out, n_h, n_x, rng);
		}
		return p;
	}

	/// Decoder weights: W^T when tied.
	DenseMatrix decoder_weights() const { return tied ? DenseMatrix(W.transpose()) : W_out; }

	void validate() const {
		if (b.size() != W.rows() || b_out.size() != W.cols()) {
			throw DimensionError("DaeParams: bias lengths do not match W " +
					detail::shape(W.rows(), W.cols()));
		}
		if (!tied && (W_out.rows() != W.cols() || W_out.cols() != W.rows())) {
			throw DimensionError(detail::shapes("DaeParams: W_out vs W^T", W_out, W.transpose()));
		}
	}

	template<typename Self>
	static auto blocks_of(Self& self) {
		using V = decltype(detail::view("W", self.W));
		std::vector<V> out{detail::view("W", self.W), detail::view("b", self.b),
				detail::view("b_out", self.b_out)};
		if (!self.tied) {
			out.push_back(detail::view("W_out", self.W_out));
		}
		return out;
	}
	auto blocks() { return blocks_of(*this); }
	auto blocks() const { return blocks_of(*this); }
};

inline DenseVector dae_encode(const DaeParams& p, const DenseVector& x) {
	require_len(x, p.n_x(), "dae_encode: x");
	return activate(p.s_h, DenseVector(p.W * x + p.b));
}

inline DenseVector dae_decode(const DaeParams& p, const DenseVector& h) {
	require_len(h, p.n_h(), "dae_decode: h");
	DenseVector pre = p.tied ? DenseVector(p.W.transpose() * h + p.b_out)
	                         : DenseVector(p.W_out * h + p.b_out);
	return activate(p.s_o, pre);
}

inline DenseVector dae_reconstruct(const DaeParams& p, const DenseVector& x) {
	return dae_decode(p, dae_encode(p, x));
}

// ---------------------------------------------------------------------------
// Naive gated model: a full n_Y x n_H x n_X weight tensor

struct NaiveGatedParams {
	std::vector<DenseMatrix> slices;  // n_Y slices, each n_H x n_X
	DenseVector b;                    // n_H
	Activation s_h = Activation::Identity;
};

/// w(y) = sum_k y_k * slice_k
inline DenseMatrix naive_gated_weights(const NaiveGatedParams& p, const DenseVector& y) {
	require_len(y, static_cast<Eigen::Index>(p.slices.size()), "naive_gated_weights: y");
	if (p.slices.empty()) {
		throw DimensionError("naive_gated_weights: no slices");
	}
	DenseMatrix w = DenseMatrix::Zero(p.slices.front().rows(), p.slices.front().cols());
	for (std::size_t k = 0; k < p.slices.size(); ++k) {
		if (p.slices[k].rows() != w.rows() || p.slices[k].cols() != w.cols()) {
			throw DimensionError(detail::shapes("naive_gated_weights: slice", p.slices[k], w));
		}
		w += y[static_cast<Eigen::Index>(k)] * p.slices[k];
	}
	return w;
}

inline DenseVector naive_gated_encode(const NaiveGatedParams& p, const DenseVector& x,
		const DenseVector& y) {
	const DenseMatrix w = naive_gated_weights(p, y);
	require_len(p.b, w.rows(), "naive_gated_encode: b");
	return activate(p.s_h, DenseVector(matvec(w, x) + p.b));
}

// ---------------------------------------------------------------------------
// Factored gated autoencoder with tied encoder/decoder weights

struct GaeDims {
	Eigen::Index n_x = 0;
	Eigen::Index n_y = 0;
	Eigen::Index n_f = 0;
	Eigen::Index n_h = 0;

	friend bool operator==(const GaeDims&, const GaeDims&) = default;
};

struct GaeParams {
	DenseMatrix Wx;   // n_F x n_X
	DenseMatrix Wy;   // n_F x n_Y
	DenseMatrix Wh;   // n_F x n_H
	DenseVector b_h;  // n_H
	DenseVector b_x;  // n_X
	Activation s_h = Activation::ReLU;
	Activation s_o = Activation::Logistic;

	GaeDims dims() const { return {Wx.cols(), Wy.cols(), Wx.rows(), Wh.cols()}; }
	Eigen::Index n_x() const { return Wx.cols(); }
	Eigen::Index n_y() const { return Wy.cols(); }
	Eigen::Index n_f() const { return Wx.rows(); }
	Eigen::Index n_h() const { return Wh.cols(); }

	static GaeParams zeros(const GaeDims& d, Activation s_h, Activation s_o) {
		GaeParams p;
		p.Wx = DenseMatrix::Zero(d.n_f, d.n_x);
		p.Wy = DenseMatrix::Zero(d.n_f, d.n_y);
		p.Wh = DenseMatrix::Zero(d.n_f, d.n_h);
		p.b_h = DenseVector::Zero(d.n_h);
		p.b_x = DenseVector::Zero(d.n_x);
		p.s_h = s_h;
		p.s_o = s_o;
		return p;
	}

	/// Each factor matrix is drawn uniformly on [-r, r] with
	/// r = sqrt(6 / (fan_in + fan_out)); biases start at zero.
	static GaeParams random(const GaeDims& d, Activation s_h, Activation s_o, Rng& rng) {
		GaeParams p = zeros(d, s_h, s_o);
		detail::scaled_init(p.Wx, d.n_x, d.n_f, rng);
		detail::scaled_init(p.Wy, d.n_y, d.n_f, rng);
		detail::scaled_init(p.Wh, d.n_h, d.n_f, rng);
		return p;
	}

	void validate() const {
		if (Wy.rows() != Wx.rows() || Wh.rows() != Wx.rows()) {
			throw DimensionError("GaeParams: factor counts differ: Wx " +
					detail::shape(Wx.rows(), Wx.cols()) + ", Wy " + detail::shape(Wy.rows(), Wy.cols()) +
					", Wh " + detail::shape(Wh.rows(), Wh.cols()));
		}
		if (b_h.size() != Wh.cols() || b_x.size() != Wx.cols()) {
			throw DimensionError("GaeParams: bias lengths do not match weights");
		}
	}

	template<typename Self>
	static auto blocks_of(Self& self) {
		using V = decltype(detail::view("Wx", self.Wx));
		return std::array<V, 5>{detail::view("Wx", self.Wx), detail::view("Wy", self.Wy),
				detail::view("Wh", self.Wh), detail::view("b_h", self.b_h),
				detail::view("b_x", self.b_x)};
	}
	auto blocks() { return blocks_of(*this); }
	auto blocks() const { return blocks_of(*this); }
};

/// Hidden pre-activation Wh^T (Wx x * Wy y) + b_h.
inline DenseVector gae_preactivation(const GaeParams& p, const DenseVector& x, const DenseVector& y) {
	require_len(x, p.n_x(), "gae_encode: x");
	require_len(y, p.n_y(), "gae_encode: y");
	const DenseVector factors = hadamard(matvec(p.Wx, x), matvec(p.Wy, y));
	return p.Wh.transpose() * factors + p.b_h;
}

inline DenseVector gae_encode(const GaeParams& p, const DenseVector& x, const DenseVector& y) {
	return activate(p.s_h, gae_preactivation(p, x, y));
}

inline DenseVector gae_decode_x(const GaeParams& p, const DenseVector& h, const DenseVector& y) {
	require_len(h, p.n_h(), "gae_decode_x: h");
	require_len(y, p.n_y(), "gae_decode_x: y");
	const DenseVector factors = hadamard(matvec(p.Wh, h), matvec(p.Wy, y));
	return activate(p.s_o, DenseVector(p.Wx.transpose() * factors + p.b_x));
}

inline DenseVector gae_reconstruct(const GaeParams& p, const DenseVector& x, const DenseVector& y) {
	return gae_decode_x(p, gae_encode(p, x, y), y);
}

/// Reconstruction entry point shared by the training and sampling templates.
/// The classic autoencoder ignores the conditioning input.
inline DenseVector reconstruct(const GaeParams& p, const DenseVector& x, const DenseVector& y) {
	return gae_reconstruct(p, x, y);
}

inline DenseVector reconstruct(const DaeParams& p, const DenseVector& x, const DenseVector&) {
	return dae_reconstruct(p, x);
}

}  // namespace ccgae

#endif  // CCGAE_MODELS_HPP_
