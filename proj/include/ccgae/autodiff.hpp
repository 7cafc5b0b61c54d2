#ifndef CCGAE_AUTODIFF_HPP_
#define CCGAE_AUTODIFF_HPP_

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "ccgae/core.hpp"
#include "ccgae/models.hpp"

namespace ccgae {

struct GaeGradients {
	DenseMatrix dWx;
	DenseMatrix dWy;
	DenseMatrix dWh;
	DenseVector db_h;
	DenseVector db_x;

	static GaeGradients zeros_like(const GaeParams& p) {
		return {DenseMatrix::Zero(p.Wx.rows(), p.Wx.cols()), DenseMatrix::Zero(p.Wy.rows(), p.Wy.cols()),
				DenseMatrix::Zero(p.Wh.rows(), p.Wh.cols()), DenseVector::Zero(p.b_h.size()),
				DenseVector::Zero(p.b_x.size())};
	}

	GaeGradients& operator+=(const GaeGradients& o) {
		dWx += o.dWx;
		dWy += o.dWy;
		dWh += o.dWh;
		db_h += o.db_h;
		db_x += o.db_x;
		return *this;
	}

	GaeGradients& operator*=(double s) {
		dWx *= s;
		dWy *= s;
		dWh *= s;
		db_h *= s;
		db_x *= s;
		return *this;
	}

	bool all_finite() const {
		return dWx.allFinite() && dWy.allFinite() && dWh.allFinite() && db_h.allFinite() &&
				db_x.allFinite();
	}

	// same order and names as GaeParams::blocks()
	template<typename Self>
	static auto blocks_of(Self& self) {
		using V = decltype(detail::view("Wx", self.dWx));
		return std::array<V, 5>{detail::view("Wx", self.dWx), detail::view("Wy", self.dWy),
				detail::view("Wh", self.dWh), detail::view("b_h", self.db_h),
				detail::view("b_x", self.db_x)};
	}
	auto blocks() { return blocks_of(*this); }
	auto blocks() const { return blocks_of(*this); }
};

struct DaeGradients {
	DenseMatrix dW;
	DenseVector db;
	DenseVector db_out;
	DenseMatrix dW_out;  // empty when tied
	bool tied = true;

	static DaeGradients zeros_like(const DaeParams& p) {
		DaeGradients g{DenseMatrix::Zero(p.W.rows(), p.W.cols()), DenseVector::Zero(p.b.size()),
				DenseVector::Zero(p.b_out.size()), DenseMatrix(), p.tied};
		if (!p.tied) {
			g.dW_out = DenseMatrix::Zero(p.W_out.rows(), p.W_out.cols());
		}
		return g;
	}

	DaeGradients& operator+=(const DaeGradients& o) {
		dW += o.dW;
		db += o.db;
		db_out += o.db_out;
		if (!tied) {
			dW_out += o.dW_out;
		}
		return *this;
	}

	DaeGradients& operator*=(double s) {
		dW *= s;
		db *= s;
		db_out *= s;
		if (!tied) {
			dW_out *= s;
		}
		return *this;
	}

	bool all_finite() const {
		return dW.allFinite() && db.allFinite() && db_out.allFinite() && (tied || dW_out.allFinite());
	}

	template<typename Self>
	static auto blocks_of(Self& self) {
		using V = decltype(detail::view("W", self.dW));
		std::vector<V> out{detail::view("W", self.dW), detail::view("b", self.db),
				detail::view("b_out", self.db_out)};
		if (!self.tied) {
			out.push_back(detail::view("W_out", self.dW_out));
		}
		return out;
	}
	auto blocks() { return blocks_of(*this); }
	auto blocks() const { return blocks_of(*this); }
};

inline GaeGradients zero_gradients(const GaeParams& p) { return GaeGradients::zeros_like(p); }
inline DaeGradients zero_gradients(const DaeParams& p) { return DaeGradients::zeros_like(p); }

/// Result of a backward pass over a batch (one example per row). loss and
/// grads are sums over the rows; reconstruction holds each row's x-hat.
template<typename Grads>
struct BatchBackward {
	double loss = 0.0;
	Grads grads;
	DenseMatrix reconstruction;
};

namespace detail {

inline void require_rows(const DenseMatrix& m, Eigen::Index rows, Eigen::Index cols, const char* what) {
	if (m.rows() != rows || m.cols() != cols) {
		throw DimensionError(std::string(what) + ": expected " + shape(rows, cols) + ", got " +
				shape(m.rows(), m.cols()));
	}
}

inline void require_finite(bool ok, const char* where) {
	if (!ok) {
		throw NonFiniteError(std::string(where) + ": non-finite value (exploded parameters?)");
	}
}

}  // namespace detail

/// Backward pass of the factored gated autoencoder for a batch of corrupted
/// inputs x_tilde, labels y and clean targets. Because encoder and decoder
/// share Wx, Wy and Wh, each weight gradient is the sum of its encode and
/// decode contributions.
inline BatchBackward<GaeGradients> gae_backward_batch(const GaeParams& p, const DenseMatrix& x_tilde,
		const DenseMatrix& y, const DenseMatrix& target, LossKind kind) {
	const Eigen::Index batch = x_tilde.rows();
	detail::require_rows(x_tilde, batch, p.n_x(), "gae_backward: x_tilde");
	detail::require_rows(y, batch, p.n_y(), "gae_backward: y");
	detail::require_rows(target, batch, p.n_x(), "gae_backward: target");

	// forward, one example per row
	const DenseMatrix a = x_tilde * p.Wx.transpose();  // B x F
	const DenseMatrix v = y * p.Wy.transpose();        // B x F
	const DenseMatrix enc = a.cwiseProduct(v);
	DenseMatrix h_pre = enc * p.Wh;                    // B x H
	h_pre.rowwise() += p.b_h.transpose();
	const DenseMatrix h = activate(p.s_h, h_pre);
	const DenseMatrix u = h * p.Wh.transpose();        // B x F
	const DenseMatrix dec = u.cwiseProduct(v);
	DenseMatrix o_pre = dec * p.Wx;                    // B x X
	o_pre.rowwise() += p.b_x.transpose();
	DenseMatrix xhat = activate(p.s_o, o_pre);

	BatchBackward<GaeGradients> out{loss(kind, target, xhat), GaeGradients::zeros_like(p), {}};
	detail::require_finite(std::isfinite(out.loss) && xhat.allFinite(), "gae_backward");

	// decoder: o_pre = (u * v) Wx + b_x
	const DenseMatrix d_o = output_delta(kind, p.s_o, target, o_pre, xhat);
	out.grads.db_x = d_o.colwise().sum().transpose();
	out.grads.dWx.noalias() = dec.transpose() * d_o;
	const DenseMatrix d_dec = d_o * p.Wx.transpose();  // B x F
	DenseMatrix d_v = d_dec.cwiseProduct(u);
	const DenseMatrix d_u = d_dec.cwiseProduct(v);
	out.grads.dWh.noalias() = d_u.transpose() * h;
	const DenseMatrix d_h = d_u * p.Wh;                // B x H

	// encoder: h_pre = (a * v) Wh + b_h
	const DenseMatrix d_hpre = d_h.cwiseProduct(activation_derivative(p.s_h, h_pre, h));
	out.grads.db_h = d_hpre.colwise().sum().transpose();
	out.grads.dWh.noalias() += enc.transpose() * d_hpre;
	const DenseMatrix d_enc = d_hpre * p.Wh.transpose();
	d_v += d_enc.cwiseProduct(a);
	const DenseMatrix d_a = d_enc.cwiseProduct(v);
	out.grads.dWx.noalias() += d_a.transpose() * x_tilde;
	out.grads.dWy.noalias() = d_v.transpose() * y;

	detail::require_finite(out.grads.all_finite(), "gae_backward");
	out.reconstruction = std::move(xhat);
	return out;
}

/// Backward pass of the classic autoencoder. With tied weights W receives the
/// encoder and the transposed decoder contribution.
inline BatchBackward<DaeGradients> dae_backward_batch(const DaeParams& p, const DenseMatrix& x_tilde,
		const DenseMatrix& /*y*/, const DenseMatrix& target, LossKind kind) {
	const Eigen::Index batch = x_tilde.rows();
	detail::require_rows(x_tilde, batch, p.n_x(), "dae_backward: x_tilde");
	detail::require_rows(target, batch, p.n_x(), "dae_backward: target");

	DenseMatrix h_pre = x_tilde * p.W.transpose();  // B x H
	h_pre.rowwise() += p.b.transpose();
	const DenseMatrix h = activate(p.s_h, h_pre);
	DenseMatrix o_pre = p.tied ? DenseMatrix(h * p.W) : DenseMatrix(h * p.W_out.transpose());
	o_pre.rowwise() += p.b_out.transpose();
	DenseMatrix xhat = activate(p.s_o, o_pre);

	BatchBackward<DaeGradients> out{loss(kind, target, xhat), DaeGradients::zeros_like(p), {}};
	detail::require_finite(std::isfinite(out.loss) && xhat.allFinite(), "dae_backward");

	const DenseMatrix d_o = output_delta(kind, p.s_o, target, o_pre, xhat);
	out.grads.db_out = d_o.colwise().sum().transpose();
	DenseMatrix d_h;
	if (p.tied) {
		out.grads.dW.noalias() = h.transpose() * d_o;
		d_h = d_o * p.W.transpose();
	} else {
		out.grads.dW_out.noalias() = d_o.transpose() * h;
		d_h = d_o * p.W_out;
	}
	const DenseMatrix d_hpre = d_h.cwiseProduct(activation_derivative(p.s_h, h_pre, h));
	out.grads.db = d_hpre.colwise().sum().transpose();
	out.grads.dW.noalias() += d_hpre.transpose() * x_tilde;

	detail::require_finite(out.grads.all_finite(), "dae_backward");
	out.reconstruction = std::move(xhat);
	return out;
}

inline BatchBackward<GaeGradients> backward_batch(const GaeParams& p, const DenseMatrix& x_tilde,
		const DenseMatrix& y, const DenseMatrix& target, LossKind kind) {
	return gae_backward_batch(p, x_tilde, y, target, kind);
}

inline BatchBackward<DaeGradients> backward_batch(const DaeParams& p, const DenseMatrix& x_tilde,
		const DenseMatrix& y, const DenseMatrix& target, LossKind kind) {
	return dae_backward_batch(p, x_tilde, y, target, kind);
}

template<typename Grads>
struct Backward {
	double loss = 0.0;
	Grads grads;
};

inline Backward<GaeGradients> gae_backward(const GaeParams& p, const DenseVector& x_tilde,
		const DenseVector& y, const DenseVector& target, LossKind kind) {
	require_len(x_tilde, p.n_x(), "gae_backward: x_tilde");
	require_len(y, p.n_y(), "gae_backward: y");
	require_len(target, p.n_x(), "gae_backward: target");
	auto r = gae_backward_batch(p, x_tilde.transpose(), y.transpose(), target.transpose(), kind);
	return {r.loss, std::move(r.grads)};
}

inline Backward<DaeGradients> dae_backward(const DaeParams& p, const DenseVector& x_tilde,
		const DenseVector& target, LossKind kind) {
	require_len(x_tilde, p.n_x(), "dae_backward: x_tilde");
	require_len(target, p.n_x(), "dae_backward: target");
	auto r = dae_backward_batch(p, x_tilde.transpose(), DenseMatrix(1, 0), target.transpose(), kind);
	return {r.loss, std::move(r.grads)};
}

/// Relative error |a - n| / max(|a|, |n|, 1e-8).
inline double relative_error(double analytic, double numeric) {
	const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
	return std::abs(analytic - numeric) / denom;
}

/// Compares an analytic gradient against central differences
/// (L(theta + eps e_i) - L(theta - eps e_i)) / 2 eps, coordinate by coordinate.
/// params is perturbed in place and restored; loss_at receives it after each
/// perturbation. Returns the largest relative error.
inline double finite_diff_check(const std::function<double(std::span<const double>)>& loss_at,
		std::span<double> params, std::span<const double> analytic, double epsilon) {
	if (!(epsilon > 0.0)) {
		throw std::invalid_argument("finite_diff_check: epsilon must be > 0");
	}
	if (params.size() != analytic.size()) {
		throw DimensionError("finite_diff_check: " + std::to_string(params.size()) +
				" parameters vs " + std::to_string(analytic.size()) + " gradient entries");
	}
	double worst = 0.0;
	for (std::size_t i = 0; i < params.size(); ++i) {
		const double saved = params[i];
		// divide by the steps actually taken, not the nominal ones
		const double hi = saved + epsilon, lo = saved - epsilon;
		params[i] = hi;
		const double up = loss_at(params);
		params[i] = lo;
		const double down = loss_at(params);
		params[i] = saved;
		if (!std::isfinite(up) || !std::isfinite(down)) {
			throw NonFiniteError("finite_diff_check: non-finite loss at coordinate " + std::to_string(i));
		}
		worst = std::max(worst, relative_error(analytic[i], (up - down) / (hi - lo)));
	}
	return worst;
}

}  // namespace ccgae

#endif  // CCGAE_AUTODIFF_HPP_
