// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fail.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "test_util.hpp"

using namespace ccgae;
namespace fs = std::filesystem;

namespace {

struct Outcome {
	bool pass = false;
	std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
	return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
	char buf[512];
	std::snprintf(buf, sizeof(buf), f, args...);
	return buf;
}

// -- 1 ----------------------------------------------------------------------

Outcome gradient_correctness() {
	const auto t0 = std::chrono::steady_clock::now();
	GradcheckOptions opt;
	const auto report = run_gradcheck(opt, 20240101);
	const double secs = seconds_since(t0);
	const double worst = report.max_error();
	const bool ok = worst < 1e-4 && secs < 30.0 && !report.worst.empty();
	return {ok, fmt("max relative error %.3e over %zu blocks, %.2f s", worst, report.worst.size(), secs)};
}

// -- 2 ----------------------------------------------------------------------

Outcome factored_naive_equivalence() {
	const auto t0 = std::chrono::steady_clock::now();
	Rng rng(2);
	double worst = 0;
	for (int trial = 0; trial < 50; ++trial) {
		auto dim = [&] { return static_cast<Eigen::Index>(1 + rng() % 7); };
		const GaeDims d{dim(), dim(), dim(), dim()};
		GaeParams p = GaeParams::random(d, Activation::Identity, Activation::Logistic, rng);
		for (Eigen::Index c = 0; c < d.n_h; ++c) p.b_h[c] = rng.uniform(-1, 1);
		DenseVector x(d.n_x), y(d.n_y);
		for (Eigen::Index i = 0; i < d.n_x; ++i) x[i] = rng.uniform(-1, 1);
		for (Eigen::Index j = 0; j < d.n_y; ++j) y[j] = rng.uniform(-1, 1);

		NaiveGatedParams naive;
		naive.b = p.b_h;
		naive.s_h = Activation::Identity;
		for (Eigen::Index j = 0; j < d.n_y; ++j) {
			DenseMatrix slice = DenseMatrix::Zero(d.n_h, d.n_x);
			for (Eigen::Index c = 0; c < d.n_h; ++c)
				for (Eigen::Index i = 0; i < d.n_x; ++i)
					for (Eigen::Index f = 0; f < d.n_f; ++f)
						slice(c, i) += p.Wh(f, c) * p.Wx(f, i) * p.Wy(f, j);
			naive.slices.push_back(slice);
		}
		const DenseVector a = naive_gated_encode(naive, x, y);
		const DenseVector b = gae_encode(p, x, y);
		worst = std::max(worst, (a - b).cwiseAbs().maxCoeff());
	}
	const double secs = seconds_since(t0);
	return {worst < 1e-10 && secs < 5.0, fmt("max |naive - factored| %.3e on 50 instances, %.3f s", worst, secs)};
}

// -- 3 ----------------------------------------------------------------------

Outcome corruption_statistics() {
	constexpr Eigen::Index n = 100000;
	Rng data(3);
	DenseVector x(n);
	for (Eigen::Index i = 0; i < n; ++i) x[i] = data.uniform(0.01, 0.99);

	Rng rng = Rng(3).derive(Stream::Corruption);
	const DenseVector sp = corrupt({CorruptionKind::SaltPepper, 0.5}, x, rng);
	Eigen::Index corrupted = 0, ones = 0;
	bool binary = true;
	for (Eigen::Index i = 0; i < n; ++i) {
		if (sp[i] != x[i]) {
			++corrupted;
			ones += sp[i] == 1.0;
			binary &= sp[i] == 0.0 || sp[i] == 1.0;
		}
	}
	const double frac = static_cast<double>(corrupted) / n;
	const double ones_frac = static_cast<double>(ones) / static_cast<double>(corrupted);

	const DenseVector mk = corrupt({CorruptionKind::Masking, 0.3}, x, rng);
	Eigen::Index zeros = 0, kept_or_zero = 0;
	for (Eigen::Index i = 0; i < n; ++i) {
		zeros += mk[i] == 0.0;
		kept_or_zero += mk[i] == 0.0 || mk[i] == x[i];
	}
	const double zero_frac = static_cast<double>(zeros) / n;
	const bool ok = binary && std::abs(frac - 0.5) <= 0.01 && std::abs(ones_frac - 0.5) <= 0.01 &&
			kept_or_zero == n && std::abs(zero_frac - 0.3) <= 0.01;
	return {ok, fmt("salt-and-pepper corrupted %.4f, ones %.4f; masking zeroed %.4f, zero-or-kept %.1f%%", frac,
			ones_frac, zero_frac, 100.0 * static_cast<double>(kept_or_zero) / n)};
}

// -- 4 ----------------------------------------------------------------------

Outcome walkback_oracle() {
	Rng init(4);
	const GaeParams p = GaeParams::random({20, 4, 12, 9}, Activation::ReLU, Activation::Logistic, init);
	double worst = 0;
	bool k1_exact = true;
	for (int trial = 0; trial < 10; ++trial) {
		DenseVector x(20);
		for (Eigen::Index i = 0; i < 20; ++i) x[i] = init.bernoulli(0.4) ? 1.0 : 0.0;
		const DenseVector y = one_hot(static_cast<std::size_t>(trial % 4), 4);
		Hyperparams hp;
		hp.walkback_k = 5;
		Rng a(400 + trial), b(400 + trial);
		const auto wb = walkback_losses(p, x, y, hp, a);

		// straight-line reimplementation: corrupt, score against x, resample, repeat
		double total = 0;
		auto acc = zero_gradients(p);
		DenseVector state = x;
		for (int s = 0; s < 5; ++s) {
			DenseVector xt = state;
			for (Eigen::Index i = 0; i < xt.size(); ++i) {
				if (b.uniform() < 0.5) xt[i] = b.uniform() < 0.5 ? 1.0 : 0.0;
			}
			const auto r = gae_backward(p, xt, y, x, LossKind::CrossEntropy);
			total += r.loss;
			acc += r.grads;
			if (s < 4) {
				const DenseVector xhat = gae_reconstruct(p, xt, y);
				for (Eigen::Index i = 0; i < xhat.size(); ++i) state[i] = b.uniform() < xhat[i] ? 1.0 : 0.0;
			}
		}
		acc *= 0.2;
		worst = std::max(worst, std::abs(wb.loss - total / 5));
		const auto wg = wb.grads.blocks();
		const auto og = std::as_const(acc).blocks();
		for (std::size_t k = 0; k < wg.size(); ++k)
			for (std::size_t i = 0; i < wg[k].values.size(); ++i)
				worst = std::max(worst, std::abs(wg[k].values[i] - og[k].values[i]));

		hp.walkback_k = 1;
		Rng c(500 + trial), d(500 + trial);
		const auto one = walkback_losses(p, x, y, hp, c);
		const auto plain = gae_backward(p, corrupt(hp.corruption, x, d), y, x, hp.loss);
		k1_exact &= one.loss == plain.loss && one.grads.dWx == plain.grads.dWx && one.grads.dWy == plain.grads.dWy &&
				one.grads.dWh == plain.grads.dWh && one.grads.db_h == plain.grads.db_h &&
				one.grads.db_x == plain.grads.db_x;
	}
	return {worst <= 1e-12 && k1_exact,
			fmt("k=5 max deviation from oracle %.3e; k=1 identical to plain step: %s", worst, k1_exact ? "yes" : "no")};
}

// -- 5 ----------------------------------------------------------------------

Outcome stripes_generation() {
	const auto t0 = std::chrono::steady_clock::now();
	const Dataset data = testutil::stripes(200, 0.05, 5);
	Hyperparams hp;
	hp.corruption = {CorruptionKind::SaltPepper, 0.3};
	hp.walkback_k = 3;
	hp.epochs = 50;
	hp.batch_size = 20;
	hp.lr0 = 0.05;
	hp.seed = 5;
	Rng init = Rng(hp.seed).derive(Stream::Init);
	GaeParams p = GaeParams::random({16, 2, 32, 16}, Activation::ReLU, Activation::Logistic, init);
	const auto log = fit(p, data, hp);
	const double train_secs = seconds_since(t0);

	std::size_t hits = 0, total = 0;
	for (std::size_t label = 0; label < 2; ++label) {
		ChainConfig cfg;
		cfg.steps = 100;
		cfg.corruption = hp.corruption;
		cfg.seed = 55;
		const auto trace = run_chain(p, label, cfg);
		const DenseVector own = testutil::stripe_prototype(label), other = testutil::stripe_prototype(1 - label);
		for (std::size_t t = 20; t < trace.size(); ++t) {  // steps 21..100
			const DenseVector& s = trace.steps[t].state;
			hits += testutil::hamming(s, own) < testutil::hamming(s, other);
			++total;
		}
	}
	const double frac = static_cast<double>(hits) / static_cast<double>(total);
	return {frac >= 0.9 && train_secs < 60.0,
			fmt("%.1f%% of post-burn-in states nearest the conditioned prototype; loss %.3f -> %.3f; train %.1f s",
					100 * frac, log.front().mean_loss, log.back().mean_loss, train_secs)};
}

// -- 6 ----------------------------------------------------------------------

Outcome desk_mnist() {
	const auto t0 = std::chrono::steady_clock::now();
	const fs::path dir = CCGAE_DATA_DIR;
	Dataset data = load_idx_dataset(dir / "mnist5k-images-idx3-ubyte.gz", dir / "mnist5k-labels-idx1-ubyte.gz", 10);
	data.examples = binarize(data.examples, 0.5);
	data = take_per_class(data, 200);
	if (data.size() != 2000) return {false, "expected 2000 training examples"};

	// batch 100, anneal 0.995, momentum 0.9, cross-entropy. With the loss summed over
	// 784 pixels, lr 0.25 diverges within the first epoch and 0.02 on some seeds;
	// 0.01 was stable across a pilot sweep of seeds.
	Hyperparams hp;
	hp.lr0 = 0.01;
	hp.corruption = {CorruptionKind::SaltPepper, 0.5};
	hp.walkback_k = 5;
	hp.epochs = 20;
	hp.seed = 6;
	Rng init = Rng(hp.seed).derive(Stream::Init);
	GaeParams p = GaeParams::random({784, 10, 256, 128}, Activation::ReLU, Activation::Logistic, init);
	const auto log = fit(p, data, hp);
	const double ratio = log.back().mean_loss / log.front().mean_loss;

	std::vector<DenseVector> centroid(10, DenseVector::Zero(784));
	std::vector<double> count(10, 0);
	for (std::size_t i = 0; i < data.size(); ++i) {
		centroid[data.labels[i]] += data.examples.row(static_cast<Eigen::Index>(i)).transpose();
		++count[data.labels[i]];
	}
	for (std::size_t c = 0; c < 10; ++c) centroid[c] /= count[c];

	std::size_t hits = 0, total = 0;
	std::string per_class;
	for (std::size_t label = 0; label < 10; ++label) {
		ChainConfig cfg;
		cfg.steps = 100;
		cfg.corruption = hp.corruption;
		cfg.seed = 66;
		const auto trace = run_chain(p, label, cfg);
		std::size_t own = 0;
		for (std::size_t t = 20; t < trace.size(); ++t) {
			const DenseVector& e = trace.steps[t].expected;
			std::size_t best = 0;
			for (std::size_t c = 1; c < 10; ++c) {
				if ((e - centroid[c]).squaredNorm() < (e - centroid[best]).squaredNorm()) best = c;
			}
			own += best == label;
			++total;
		}
		hits += own;
		per_class += fmt(" %zu:%zu", label, own);
	}
	const double frac = static_cast<double>(hits) / static_cast<double>(total);
	return {ratio < 0.7 && frac >= 0.6,
			fmt("loss %.2f -> %.2f (ratio %.3f); centroid match %.1f%% [per class of 80:%s]; %.0f s",
					log.front().mean_loss, log.back().mean_loss, ratio, 100 * frac, per_class.c_str(),
					seconds_since(t0))};
}

// -- 7 ----------------------------------------------------------------------

std::string slurp(const fs::path& p) {
	std::ifstream in(p, std::ios::binary);
	std::stringstream ss;
	ss << in.rdbuf();
	return ss.str();
}

int run_cli(const std::string& args, const fs::path& dir) {
	const std::string cmd = std::string(CCGAE_CLI_PATH) + " " + args + " >" + (dir / "cli.log").string() + " 2>&1";
	const int status = std::system(cmd.c_str());
	return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Outcome determinism() {
	const fs::path dir = testutil::scratch_dir("acceptance_det");
	save_raw(dir / "stripes.raw", testutil::stripes(100, 0.05, 7));
	auto config = [&](const std::string& ckpt) {
		std::ofstream(dir / (ckpt + ".cfg")) << "n_x = 16\nn_y = 2\nn_f = 24\nn_h = 12\ncorruption_level = 0.3\n"
		                                         "walkback_k = 3\nlr = 0.05\nbatch_size = 20\nepochs = 10\nseed = 7\n"
		                                         "dataset_format = raw\ntrain_raw = stripes.raw\nbinarize = false\n"
		                                         "image_rows = 4\nimage_cols = 4\ncheckpoint_out = "
		                                      << ckpt << ".ckpt\nlog_out = " << ckpt << ".csv\n";
		return (dir / (ckpt + ".cfg")).string();
	};
	if (run_cli("train --config " + config("a"), dir) != 0 || run_cli("train --config " + config("b"), dir) != 0) {
		return {false, "train failed: " + slurp(dir / "cli.log")};
	}
	const std::string a = slurp(dir / "a.ckpt"), b = slurp(dir / "b.ckpt");
	const std::string sample = "sample --checkpoint " + (dir / "a.ckpt").string() + " --label all --steps 50 --seed 3";
	if (run_cli(sample + " --out " + (dir / "s.pgm").string(), dir) != 0 ||
			run_cli(sample + " --out " + (dir / "t.pgm").string(), dir) != 0) {
		return {false, "sample failed: " + slurp(dir / "cli.log")};
	}
	bool pgm_same = true;
	for (const char* l : {"0", "1"}) {
		const std::string s = slurp(dir / ("s-" + std::string(l) + ".pgm"));
		pgm_same &= !s.empty() && s == slurp(dir / ("t-" + std::string(l) + ".pgm"));
	}
	const bool ok = !a.empty() && a == b && pgm_same;
	return {ok, fmt("checkpoints identical: %s (%zu bytes); PGMs identical: %s", a == b ? "yes" : "no", a.size(),
			pgm_same ? "yes" : "no")};
}

// -- 8 ----------------------------------------------------------------------

Outcome format_fidelity() {
	// IDX built byte by byte, independent of the library encoder
	Bytes idx{0, 0, 8, 3, 0, 0, 0, 3, 0, 0, 0, 2, 0, 0, 0, 3};
	Rng rng(8);
	for (int i = 0; i < 18; ++i) idx.push_back(static_cast<std::uint8_t>(rng() & 0xff));
	std::uint32_t rows = 0, cols = 0;
	const DenseMatrix images = parse_idx_images(idx, "synthetic", &rows, &cols);
	const bool idx_ok = encode_idx_images(images, rows, cols) == idx;
	const Bytes labels{0, 0, 8, 1, 0, 0, 0, 4, 3, 1, 4, 1};
	const bool labels_ok = encode_idx_labels(parse_idx_labels(labels, "synthetic")) == labels;

	std::vector<DenseVector> tiles(37, DenseVector::Constant(6, 0.25));
	const Bytes pgm = render_pgm_grid(tiles, 2, 3, 8);
	const auto g = grid_geometry(37, 2, 3, 8);
	const std::string header = "P5\n" + std::to_string(g.width) + " " + std::to_string(g.height) + "\n255\n";
	const bool pgm_ok = pgm.size() - header.size() == g.width * g.height &&
			std::equal(header.begin(), header.end(), pgm.begin());

	GaeParams p = GaeParams::random({9, 4, 7, 5}, Activation::ReLU, Activation::Logistic, rng);
	for (Eigen::Index i = 0; i < p.b_x.size(); ++i) p.b_x[i] = rng.uniform(-1e-3, 1e3);
	const fs::path dir = testutil::scratch_dir("acceptance_fmt");
	save_checkpoint(dir / "m.ckpt", p, LossKind::CrossEntropy);
	const GaeParams back = load_gae_checkpoint(dir / "m.ckpt").params;
	bool ckpt_ok = back.dims() == p.dims() && back.s_h == p.s_h && back.s_o == p.s_o;
	const auto pb = p.blocks();
	const auto bb = back.blocks();
	for (std::size_t k = 0; k < pb.size() && ckpt_ok; ++k) {
		ckpt_ok = std::memcmp(pb[k].values.data(), bb[k].values.data(), pb[k].values.size() * sizeof(double)) == 0;
	}
	return {idx_ok && labels_ok && pgm_ok && ckpt_ok,
			fmt("IDX images %s, IDX labels %s, PGM payload %s, checkpoint %s", idx_ok ? "ok" : "MISMATCH",
					labels_ok ? "ok" : "MISMATCH", pgm_ok ? "ok" : "MISMATCH", ckpt_ok ? "ok" : "MISMATCH")};
}

}  // namespace

int main() {
	const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
			{"gradient correctness", gradient_correctness},
			{"factored/naive equivalence", factored_naive_equivalence},
			{"corruption statistics", corruption_statistics},
			{"walkback oracle equivalence", walkback_oracle},
			{"synthetic conditional generation", stripes_generation},
			{"desk-scale MNIST", desk_mnist},
			{"determinism", determinism},
			{"format fidelity", format_fidelity},
	};
	int failed = 0;
	for (std::size_t i = 0; i < criteria.size(); ++i) {
		Outcome o;
		try {
			o = criteria[i].second();
		} catch (const std::exception& e) {
			o = {false, std::string("exception: ") + e.what()};
		}
		std::printf("%s criterion %zu (%s): %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first,
				o.detail.c_str());
		std::fflush(stdout);
		failed += !o.pass;
	}
	std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
	return failed == 0 ? 0 : 1;
}
