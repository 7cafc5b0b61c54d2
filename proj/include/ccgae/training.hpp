#ifndef CCGAE_TRAINING_HPP_
#define CCGAE_TRAINING_HPP_

#include <chrono>
#include <cstdio>
#include <cmath>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ccgae/autodiff.hpp"
#include "ccgae/core.hpp"
#include "ccgae/corruption.hpp"
#include "ccgae/data_io.hpp"
#include "ccgae/models.hpp"

namespace ccgae {

struct Hyperparams {
	CorruptionSpec corruption{CorruptionKind::SaltPepper, 0.5};
	std::size_t walkback_k = 1;
	double lr0 = 0.25;
	double anneal = 0.995;
	double momentum = 0.9;
	std::size_t batch_size = 100;
	std::size_t epochs = 200;
	LossKind loss = LossKind::CrossEntropy;
	std::uint64_t seed = 0;
	/// Bernoulli-sample each walkback reconstruction before corrupting it again.
	bool resample_reconstructions = true;

	void validate() const {
		corruption.validate();
		if (walkback_k < 1) throw std::invalid_argument("walkback_k must be >= 1");
		if (!(lr0 > 0.0)) throw std::invalid_argument("learning rate must be > 0");
		if (!(anneal > 0.0 && anneal <= 1.0)) throw std::invalid_argument("anneal must lie in (0,1]");
		if (!(momentum >= 0.0 && momentum < 1.0)) throw std::invalid_argument("momentum must lie in [0,1)");
		if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
	}

	friend bool operator==(const Hyperparams&, const Hyperparams&) = default;
};

/// lr0 * anneal^epoch, recomputed from the power each time.
inline double anneal_lr(double lr0, double anneal, std::size_t epoch) {
	return lr0 * std::pow(anneal, static_cast<double>(epoch));
}

template<typename Grads>
struct OptimizerState {
	Grads velocity;
	std::size_t epoch = 0;
	double lr = 0.0;
};

/// One Nesterov momentum step with the gradient taken at the lookahead point:
///   v <- mu v - lr grad(theta + mu v);  theta <- theta + v
/// Returns whatever loss grad_at reported alongside the gradient.
template<typename Params, typename Grads, typename GradFn>
double nesterov_step(Params& params, Grads& velocity, GradFn&& grad_at, double lr, double mu) {
	Params lookahead = params;
	{
		auto p = lookahead.blocks();
		const auto v = std::as_const(velocity).blocks();
		for (std::size_t b = 0; b < p.size(); ++b) {
			for (std::size_t i = 0; i < p[b].values.size(); ++i) {
				p[b].values[i] += mu * v[b].values[i];
			}
		}
	}
	auto [loss_value, grads] = grad_at(std::as_const(lookahead));
	if (!grads.all_finite()) {
		throw NonFiniteError("nesterov_step: non-finite gradient");
	}
	auto p = params.blocks();
	auto v = velocity.blocks();
	const auto g = std::as_const(grads).blocks();
	for (std::size_t b = 0; b < p.size(); ++b) {
		for (std::size_t i = 0; i < p[b].values.size(); ++i) {
			v[b].values[i] = mu * v[b].values[i] - lr * g[b].values[i];
			p[b].values[i] += v[b].values[i];
		}
	}
	return loss_value;
}

/// Observes each walkback step: the corrupted inputs fed to the model and the
/// targets they are scored against.
using WalkbackObserver = std::function<void(std::size_t step, const DenseMatrix& corrupted,
		const DenseMatrix& target)>;

template<typename Grads>
struct WalkbackResult {
	double loss = 0.0;
	Grads grads;
};

/// Walkback over a batch of clean examples (one per row), each with its own
/// generator. For k steps: corrupt the current state, reconstruct, score the
/// reconstruction against the clean example, then move the state to the
/// reconstruction (Bernoulli-sampled when hp.resample_reconstructions). The
/// final reconstruction is not resampled. Per row the draws are: corruption of
/// step 0, resampling of step 0, corruption of step 1, and so on.
///
/// Loss and gradients are averaged over the k steps and the rows.
template<typename Params>
auto walkback_batch(const Params& p, const DenseMatrix& clean, const DenseMatrix& y,
		const Hyperparams& hp, std::span<Rng> rngs, const WalkbackObserver& observer = {}) {
	using Grads = decltype(zero_gradients(p));
	if (rngs.size() != static_cast<std::size_t>(clean.rows())) {
		throw DimensionError("walkback: " + std::to_string(rngs.size()) + " generators for " +
				std::to_string(clean.rows()) + " examples");
	}
	hp.validate();
	WalkbackResult<Grads> out{0.0, zero_gradients(p)};
	DenseMatrix state = clean;
	for (std::size_t step = 0; step < hp.walkback_k; ++step) {
		DenseMatrix corrupted = state;
		for (Eigen::Index r = 0; r < corrupted.rows(); ++r) {
			corrupt_inplace(hp.corruption, corrupted.row(r), rngs[static_cast<std::size_t>(r)]);
		}
		if (observer) {
			observer(step, corrupted, clean);
		}
		auto back = backward_batch(p, corrupted, y, clean, hp.loss);
		out.loss += back.loss;
		out.grads += back.grads;
		if (step + 1 == hp.walkback_k) {
			break;
		}
		if (hp.resample_reconstructions) {
			for (Eigen::Index r = 0; r < state.rows(); ++r) {
				Rng& rng = rngs[static_cast<std::size_t>(r)];
				for (Eigen::Index c = 0; c < state.cols(); ++c) {
					state(r, c) = rng.bernoulli(back.reconstruction(r, c)) ? 1.0 : 0.0;
				}
			}
		} else {
			state = std::move(back.reconstruction);
		}
	}
	const double scale = 1.0 / static_cast<double>(hp.walkback_k * static_cast<std::size_t>(clean.rows()));
	out.loss *= scale;
	out.grads *= scale;
	return out;
}

/// Walkback loss and gradients for a single clean example x with label
/// vector y (empty for the classic autoencoder).
template<typename Params>
auto walkback_losses(const Params& p, const DenseVector& x, const DenseVector& y,
		const Hyperparams& hp, Rng& rng, const WalkbackObserver& observer = {}) {
	return walkback_batch(p, DenseMatrix(x.transpose()), DenseMatrix(y.transpose()), hp,
			std::span<Rng>(&rng, 1), observer);
}

inline Eigen::Index conditioning_width(const GaeParams& p) { return p.n_y(); }
inline Eigen::Index conditioning_width(const DaeParams&) { return 0; }

struct EpochRecord {
	std::size_t epoch = 0;
	double mean_loss = 0.0;
	double lr = 0.0;
	double wall_seconds = 0.0;
};

using TrainingLog = std::vector<EpochRecord>;

/// "epoch,mean_loss,lr,wall_seconds"
inline std::string csv_line(const EpochRecord& r) {
	char buf[128];
	std::snprintf(buf, sizeof(buf), "%zu,%.10g,%.10g,%.3f", r.epoch, r.mean_loss, r.lr, r.wall_seconds);
	return buf;
}

/// Generator for one example of one minibatch. Keys never depend on the
/// walkback depth or on any other example.
inline Rng example_stream(const Rng& root, std::size_t epoch, std::size_t batch, std::size_t index) {
	return root.derive({static_cast<std::uint64_t>(Stream::Walkback), epoch, batch, index});
}

/// Minibatch walkback training with Nesterov momentum and per-epoch
/// multiplicative annealing. Each epoch reshuffles the data; on_epoch (if set)
/// sees every record as it completes.
template<typename Params>
TrainingLog fit(Params& model, const Dataset& data, const Hyperparams& hp,
		const std::function<void(const EpochRecord&)>& on_epoch = {}) {
	hp.validate();
	if (data.size() == 0) {
		throw std::invalid_argument("fit: empty dataset");
	}
	if (data.n_x() != model.n_x()) {
		throw DimensionError("fit: dataset has " + std::to_string(data.n_x()) + " inputs, model expects " +
				std::to_string(model.n_x()));
	}
	const Eigen::Index n_y = conditioning_width(model);
	if (n_y > 0 && data.n_classes != static_cast<std::size_t>(n_y)) {
		throw DimensionError("fit: dataset has " + std::to_string(data.n_classes) +
				" classes, model label width is " + std::to_string(n_y));
	}

	const Rng root(hp.seed);
	OptimizerState<decltype(zero_gradients(model))> opt{zero_gradients(model), 0, hp.lr0};
	TrainingLog log;
	const auto start = std::chrono::steady_clock::now();
	for (std::size_t epoch = 0; epoch < hp.epochs; ++epoch) {
		opt.epoch = epoch;
		opt.lr = anneal_lr(hp.lr0, hp.anneal, epoch);
		Rng shuffle = root.derive({static_cast<std::uint64_t>(Stream::Shuffle), epoch});
		const auto batches = minibatches(data, hp.batch_size, shuffle);
		double loss_sum = 0.0;
		for (std::size_t b = 0; b < batches.size(); ++b) {
			const auto& idx = batches[b];
			const auto rows = static_cast<Eigen::Index>(idx.size());
			DenseMatrix x(rows, data.n_x());
			DenseMatrix y = DenseMatrix::Zero(rows, n_y);
			std::vector<Rng> rngs;
			rngs.reserve(idx.size());
			for (Eigen::Index r = 0; r < rows; ++r) {
				const std::size_t i = idx[static_cast<std::size_t>(r)];
				x.row(r) = data.examples.row(static_cast<Eigen::Index>(i));
				if (n_y > 0) {
					y(r, data.labels[i]) = 1.0;
				}
				rngs.push_back(example_stream(root, epoch, b, static_cast<std::size_t>(r)));
			}
			double batch_loss = 0.0;
			try {
				batch_loss = nesterov_step(model, opt.velocity, [&](const Params& at) {
					auto wb = walkback_batch(at, x, y, hp, std::span<Rng>(rngs));
					return std::pair{wb.loss, std::move(wb.grads)};
				}, opt.lr, hp.momentum);
			} catch (const NonFiniteError& e) {
				throw NonFiniteError("epoch " + std::to_string(epoch) + ", batch " + std::to_string(b) +
						": " + e.what());
			}
			if (!std::isfinite(batch_loss)) {
				throw NonFiniteError("epoch " + std::to_string(epoch) + ", batch " + std::to_string(b) +
						": non-finite loss");
			}
			loss_sum += batch_loss * static_cast<double>(rows);
		}
		const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
		log.push_back({epoch, loss_sum / static_cast<double>(data.size()), opt.lr, seconds});
		if (on_epoch) {
			on_epoch(log.back());
		}
	}
	return log;
}

}  // namespace ccgae

#endif  // CCGAE_TRAINING_HPP_
