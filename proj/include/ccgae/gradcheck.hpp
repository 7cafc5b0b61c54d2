#ifndef CCGAE_GRADCHECK_HPP_
#define CCGAE_GRADCHECK_HPP_

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ccgae/autodiff.hpp"
#include "ccgae/models.hpp"

namespace ccgae {

/// One randomly drawn finite-difference problem.
template<typename Params>
struct GradcheckInstance {
	Params params;
	DenseVector x_tilde;
	DenseVector y;       // empty for the classic autoencoder
	DenseVector target;
};

namespace detail {

inline DenseVector uniform_vector(Eigen::Index n, double lo, double hi, Rng& rng) {
	DenseVector v(n);
	for (Eigen::Index i = 0; i < n; ++i) {
		v[i] = rng.uniform(lo, hi);
	}
	return v;
}

template<typename M>
void perturb_biases(M& b, Rng& rng) {
	for (Eigen::Index i = 0; i < b.size(); ++i) {
		b[i] = rng.uniform(-0.5, 0.5);
	}
}

/// True when a ReLU unit sits within margin of its kink, where central
/// differences straddle two linear pieces.
inline bool near_kink(Activation a, const DenseVector& pre, double margin) {
	return a == Activation::ReLU && (pre.array().abs() < margin).any();
}

}  // namespace detail

/// Random GAE problem: scaled-uniform weights, nonzero biases, inputs and
/// targets in [0,1], a dense label vector. Draws are repeated until no ReLU
/// pre-activation lies within 1e-3 of zero.
inline GradcheckInstance<GaeParams> random_gae_instance(const GaeDims& d, Activation s_h, Activation s_o,
		Rng& rng) {
	for (;;) {
		GradcheckInstance<GaeParams> inst{GaeParams::random(d, s_h, s_o, rng), {}, {}, {}};
		detail::perturb_biases(inst.params.b_h, rng);
		detail::perturb_biases(inst.params.b_x, rng);
		inst.x_tilde = detail::uniform_vector(d.n_x, 0.0, 1.0, rng);
		inst.y = detail::uniform_vector(d.n_y, 0.0, 1.0, rng);
		inst.target = detail::uniform_vector(d.n_x, 0.0, 1.0, rng);
		const auto& p = inst.params;
		const DenseVector h_pre = gae_preactivation(p, inst.x_tilde, inst.y);
		const DenseVector h = activate(p.s_h, h_pre);
		const DenseVector o_pre =
				p.Wx.transpose() * hadamard(matvec(p.Wh, h), matvec(p.Wy, inst.y)) + p.b_x;
		if (!detail::near_kink(s_h, h_pre, 1e-3) && !detail::near_kink(s_o, o_pre, 1e-3)) {
			return inst;
		}
	}
}

inline GradcheckInstance<DaeParams> random_dae_instance(Eigen::Index n_x, Eigen::Index n_h, bool tied,
		Activation s_h, Activation s_o, Rng& rng) {
	for (;;) {
		GradcheckInstance<DaeParams> inst{DaeParams::random(n_x, n_h, tied, s_h, s_o, rng), {}, {}, {}};
		detail::perturb_biases(inst.params.b, rng);
		detail::perturb_biases(inst.params.b_out, rng);
		inst.x_tilde = detail::uniform_vector(n_x, 0.0, 1.0, rng);
		inst.target = detail::uniform_vector(n_x, 0.0, 1.0, rng);
		const auto& p = inst.params;
		const DenseVector h_pre = p.W * inst.x_tilde + p.b;
		const DenseVector o_pre = p.decoder_weights() * activate(p.s_h, h_pre) + p.b_out;
		if (!detail::near_kink(s_h, h_pre, 1e-3) && !detail::near_kink(s_o, o_pre, 1e-3)) {
			return inst;
		}
	}
}

/// Worst relative error per labelled block across a sweep of instances.
struct GradcheckReport {
	std::map<std::string, double> worst;  // "<model>/<loss>/<hidden>/<block>"

	double max_error() const {
		double m = 0.0;
		for (const auto& [_, e] : worst) m = std::max(m, e);
		return m;
	}

	std::vector<std::string> failures(double threshold) const {
		std::vector<std::string> out;
		for (const auto& [name, e] : worst) {
			if (!(e < threshold)) out.push_back(name);
		}
		return out;
	}
};

struct GradcheckOptions {
	GaeDims gae{7, 3, 5, 4};
	Eigen::Index dae_n_x = 6;
	Eigen::Index dae_n_h = 4;
	std::size_t instances = 20;
	double epsilon = 1e-5;
	std::vector<Activation> hidden{Activation::ReLU, Activation::Logistic};
	std::vector<LossKind> losses{LossKind::SquaredError, LossKind::CrossEntropy};
	bool include_dae = true;
	/// Scales the analytic gradient of the named block (e.g. "Wx") before the
	/// comparison; used to confirm the check actually detects wrong gradients.
	std::string tamper_block;
	double tamper_scale = 1.0;
};

namespace detail {

template<typename T>
using ExtMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template<typename T>
using ExtVector = Eigen::Matrix<T, Eigen::Dynamic, 1>;

template<typename T>
ExtVector<T> ext_activate(Activation a, const ExtVector<T>& v) {
	switch (a) {
	case Activation::Logistic:
		return v.unaryExpr([](T z) { return T(1) / (T(1) + std::exp(-z)); });
	case Activation::ReLU:
		return v.cwiseMax(T(0));
	case Activation::Identity:
		break;
	}
	return v;
}

template<typename T>
T ext_loss(LossKind kind, const ExtVector<T>& t, const ExtVector<T>& xhat) {
	T total = 0;
	for (Eigen::Index i = 0; i < t.size(); ++i) {
		if (kind == LossKind::SquaredError) {
			total += (t[i] - xhat[i]) * (t[i] - xhat[i]);
		} else {
			const T p = std::clamp(xhat[i], T(kClip), T(1) - T(kClip));
			total -= t[i] * std::log(p) + (T(1) - t[i]) * std::log(T(1) - p);
		}
	}
	return total;
}

/// Reconstruction loss evaluated in extended precision, written directly from
/// the forward equations rather than through the double-precision code path.
inline long double extended_loss(const GaeParams& p, const DenseVector& x, const DenseVector& y,
		const DenseVector& t, LossKind kind) {
	using T = long double;
	const ExtMatrix<T> wx = p.Wx.cast<T>(), wy = p.Wy.cast<T>(), wh = p.Wh.cast<T>();
	const ExtVector<T> xv = x.cast<T>(), yv = y.cast<T>();
	const ExtVector<T> gate = wy * yv;
	const ExtVector<T> h = ext_activate<T>(p.s_h,
			ExtVector<T>(wh.transpose() * (wx * xv).cwiseProduct(gate) + p.b_h.cast<T>()));
	const ExtVector<T> xhat = ext_activate<T>(p.s_o,
			ExtVector<T>(wx.transpose() * (wh * h).cwiseProduct(gate) + p.b_x.cast<T>()));
	return ext_loss<T>(kind, t.cast<T>(), xhat);
}

inline long double extended_loss(const DaeParams& p, const DenseVector& x, const DenseVector&,
		const DenseVector& t, LossKind kind) {
	using T = long double;
	const ExtMatrix<T> w = p.W.cast<T>();
	const ExtVector<T> h = ext_activate<T>(p.s_h, ExtVector<T>(w * x.cast<T>() + p.b.cast<T>()));
	const ExtVector<T> pre = p.tied ? ExtVector<T>(w.transpose() * h + p.b_out.cast<T>())
	                                : ExtVector<T>(p.W_out.cast<T>() * h + p.b_out.cast<T>());
	return ext_loss<T>(kind, t.cast<T>(), ext_activate<T>(p.s_o, pre));
}

}  // namespace detail

struct BlockError {
	std::string block;
	double max_relative_error = 0.0;
};

/// Finite-difference check of every parameter block of a model on one
/// (x_tilde, y, target) triple. The numeric side evaluates the loss in
/// extended precision and hands finite_diff_check its offset from the
/// unperturbed loss, so the central difference is not swamped by round-off
/// for gradient entries far below the loss scale. tamper, if set, may alter
/// the analytic gradients before comparison.
template<typename Params>
std::vector<BlockError> check_gradients(const Params& params, const DenseVector& x_tilde,
		const DenseVector& y, const DenseVector& target, LossKind kind, double epsilon = 1e-5,
		const std::function<void(decltype(zero_gradients(params))&)>& tamper = {}) {
	auto analytic = backward_batch(params, x_tilde.transpose(), y.transpose(), target.transpose(),
			kind).grads;
	if (tamper) {
		tamper(analytic);
	}
	Params probe = params;
	const long double base = detail::extended_loss(probe, x_tilde, y, target, kind);
	auto loss_at = [&](std::span<const double>) {
		return static_cast<double>(detail::extended_loss(probe, x_tilde, y, target, kind) - base);
	};
	std::vector<BlockError> out;
	auto pb = probe.blocks();
	const auto gb = std::as_const(analytic).blocks();
	for (std::size_t b = 0; b < pb.size(); ++b) {
		out.push_back({std::string(pb[b].name), finite_diff_check(loss_at, pb[b].values, gb[b].values, epsilon)});
	}
	return out;
}

namespace detail {

template<typename Params>
void record(GradcheckReport& report, const std::string& prefix, const Params& p, const DenseVector& x,
		const DenseVector& y, const DenseVector& t, LossKind kind, const GradcheckOptions& opt) {
	using Grads = decltype(zero_gradients(p));
	std::function<void(Grads&)> tamper;
	if (!opt.tamper_block.empty()) {
		tamper = [&](Grads& g) {
			for (auto& b : g.blocks()) {
				if (b.name == opt.tamper_block) {
					for (double& v : b.values) v *= opt.tamper_scale;
				}
			}
		};
	}
	for (const auto& e : check_gradients(p, x, y, t, kind, opt.epsilon, tamper)) {
		double& slot = report.worst[prefix + e.block];
		slot = std::max(slot, e.max_relative_error);
	}
}

}  // namespace detail

/// Sweeps GAE (and tied DAE) instances over every hidden activation and loss.
/// The output activation is logistic, matching both experimental regimes.
inline GradcheckReport run_gradcheck(const GradcheckOptions& opt, std::uint64_t seed) {
	GradcheckReport report;
	const Rng root(seed);
	for (LossKind kind : opt.losses) {
		for (Activation s_h : opt.hidden) {
			const std::string tag = to_string(kind) + "/" + to_string(s_h) + "/";
			for (std::size_t i = 0; i < opt.instances; ++i) {
				Rng rng = root.derive({static_cast<std::uint64_t>(Stream::Test), static_cast<std::uint64_t>(kind),
						static_cast<std::uint64_t>(s_h), i});
				const auto g = random_gae_instance(opt.gae, s_h, Activation::Logistic, rng);
				detail::record(report, "gae/" + tag, g.params, g.x_tilde, g.y, g.target, kind, opt);
				if (opt.include_dae) {
					const auto d = random_dae_instance(opt.dae_n_x, opt.dae_n_h, true, s_h, Activation::Logistic, rng);
					detail::record(report, "dae/" + tag, d.params, d.x_tilde, DenseVector(), d.target, kind, opt);
				}
			}
		}
	}
	return report;
}

}  // namespace ccgae

#endif  // CCGAE_GRADCHECK_HPP_
