#include <gtest/gtest.h>

#include <cmath>

#include "ccgae/models.hpp"

using namespace ccgae;

namespace {

DenseMatrix random_matrix(Eigen::Index r, Eigen::Index c, Rng& rng) {
	DenseMatrix m(r, c);
	for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-1, 1);
	return m;
}

DenseVector random_vector(Eigen::Index n, Rng& rng) {
	DenseVector v(n);
	for (Eigen::Index i = 0; i < n; ++i) v[i] = rng.uniform(-1, 1);
	return v;
}

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

double apply(Activation a, double z) {
	switch (a) {
	case Activation::Logistic: return sigmoid(z);
	case Activation::ReLU: return z > 0 ? z : 0;
	case Activation::Identity: return z;
	}
	return z;
}

// loop-by-loop forward pass, no Eigen products
DenseVector loop_preactivation(const GaeParams& p, const DenseVector& x, const DenseVector& y) {
	DenseVector out = p.b_h;
	for (Eigen::Index c = 0; c < p.n_h(); ++c) {
		for (Eigen::Index f = 0; f < p.n_f(); ++f) {
			double fx = 0, fy = 0;
			for (Eigen::Index i = 0; i < p.n_x(); ++i) fx += p.Wx(f, i) * x[i];
			for (Eigen::Index j = 0; j < p.n_y(); ++j) fy += p.Wy(f, j) * y[j];
			out[c] += p.Wh(f, c) * fx * fy;
		}
	}
	return out;
}

DenseVector loop_decode(const GaeParams& p, const DenseVector& h, const DenseVector& y) {
	DenseVector out(p.n_x());
	for (Eigen::Index i = 0; i < p.n_x(); ++i) {
		double s = p.b_x[i];
		for (Eigen::Index f = 0; f < p.n_f(); ++f) {
			double fh = 0, fy = 0;
			for (Eigen::Index c = 0; c < p.n_h(); ++c) fh += p.Wh(f, c) * h[c];
			for (Eigen::Index j = 0; j < p.n_y(); ++j) fy += p.Wy(f, j) * y[j];
			s += p.Wx(f, i) * fh * fy;
		}
		out[i] = apply(p.s_o, s);
	}
	return out;
}

// W[c,i,j] = sum_f Wh[f,c] Wx[f,i] Wy[f,j], stored as one n_H x n_X slice per label j
NaiveGatedParams expand(const GaeParams& p) {
	NaiveGatedParams n;
	n.b = p.b_h;
	n.s_h = Activation::Identity;
	for (Eigen::Index j = 0; j < p.n_y(); ++j) {
		DenseMatrix s = DenseMatrix::Zero(p.n_h(), p.n_x());
		for (Eigen::Index c = 0; c < p.n_h(); ++c)
			for (Eigen::Index i = 0; i < p.n_x(); ++i)
				for (Eigen::Index f = 0; f < p.n_f(); ++f)
					s(c, i) += p.Wh(f, c) * p.Wx(f, i) * p.Wy(f, j);
		n.slices.push_back(s);
	}
	return n;
}

GaeParams scalar_gae() {
	GaeParams p = GaeParams::zeros({1, 1, 1, 1}, Activation::Identity, Activation::Identity);
	p.Wx(0, 0) = 2;
	p.Wy(0, 0) = 3;
	p.Wh(0, 0) = 4;
	return p;
}

GaeParams random_gae(const GaeDims& d, Rng& rng, Activation s_h = Activation::Identity,
		Activation s_o = Activation::Identity) {
	GaeParams p = GaeParams::random(d, s_h, s_o, rng);
	p.b_h = random_vector(d.n_h, rng);
	p.b_x = random_vector(d.n_x, rng);
	return p;
}

}  // namespace

TEST(Dae, EncodeExamples) {
	DaeParams p = DaeParams::zeros(2, 2, true, Activation::Logistic, Activation::Logistic);
	p.W = DenseMatrix::Identity(2, 2);
	EXPECT_EQ(dae_encode(p, DenseVector::Zero(2)), DenseVector::Constant(2, 0.5));

	DaeParams q = DaeParams::zeros(3, 2, true, Activation::ReLU, Activation::Logistic);
	q.b << 1, -1;
	DenseVector x(3);
	x << 4, -2, 7;
	EXPECT_EQ(dae_encode(q, x), (DenseVector(2) << 1, 0).finished());
	EXPECT_THROW(dae_encode(q, DenseVector::Zero(2)), DimensionError);
}

TEST(Dae, RandomEncodeDecodeAgainstLoops) {
	Rng rng(8);
	for (bool tied : {true, false}) {
		DaeParams p = DaeParams::random(4, 3, tied, Activation::Logistic, Activation::Logistic, rng);
		p.b = random_vector(3, rng);
		p.b_out = random_vector(4, rng);
		const DenseVector x = random_vector(4, rng);
		const DenseVector h = dae_encode(p, x);
		for (Eigen::Index c = 0; c < 3; ++c) {
			double s = p.b[c];
			for (Eigen::Index i = 0; i < 4; ++i) s += p.W(c, i) * x[i];
			EXPECT_NEAR(h[c], sigmoid(s), 1e-15);
		}
		const DenseVector xhat = dae_decode(p, h);
		for (Eigen::Index i = 0; i < 4; ++i) {
			double s = p.b_out[i];
			for (Eigen::Index c = 0; c < 3; ++c) s += (tied ? p.W(c, i) : p.W_out(i, c)) * h[c];
			EXPECT_NEAR(xhat[i], sigmoid(s), 1e-15);
		}
	}
}

TEST(Dae, IdentityPipeline) {
	DaeParams p = DaeParams::zeros(3, 3, true, Activation::Identity, Activation::Identity);
	p.W = DenseMatrix::Identity(3, 3);
	const DenseVector x = (DenseVector(3) << 0.1, -2, 5).finished();
	EXPECT_EQ(dae_decode(p, dae_encode(p, x)), x);

	DaeParams q = DaeParams::zeros(1, 1, true, Activation::Identity, Activation::Identity);
	q.b_out[0] = 0.2;
	EXPECT_EQ(dae_decode(q, DenseVector::Zero(1)), DenseVector::Constant(1, 0.2));
}

TEST(NaiveGated, WeightsSelectSlices) {
	Rng rng(3);
	NaiveGatedParams p;
	for (int k = 0; k < 3; ++k) p.slices.push_back(random_matrix(2, 4, rng));
	p.b = DenseVector::Zero(2);
	DenseVector e1 = DenseVector::Zero(3);
	e1[1] = 1;
	EXPECT_EQ(naive_gated_weights(p, e1), p.slices[1]);
	EXPECT_EQ(naive_gated_weights(p, DenseVector::Zero(3)), DenseMatrix::Zero(2, 4));
	DenseVector e01 = DenseVector::Zero(3);
	e01[0] = e01[1] = 1;
	EXPECT_EQ(naive_gated_weights(p, e01), DenseMatrix(p.slices[0] + p.slices[1]));
	EXPECT_THROW(naive_gated_weights(p, DenseVector::Zero(2)), DimensionError);
}

TEST(NaiveGated, EncodeExamples) {
	NaiveGatedParams p;
	p.slices = {DenseMatrix::Constant(1, 1, 6.0)};
	p.b = DenseVector::Zero(1);
	const DenseVector one = DenseVector::Ones(1);
	EXPECT_EQ(naive_gated_encode(p, one, one), DenseVector::Constant(1, 6));
	p.b[0] = -0.5;
	p.s_h = Activation::ReLU;
	EXPECT_EQ(naive_gated_encode(p, one, DenseVector::Zero(1)), DenseVector::Zero(1));
}

TEST(Gae, ScalarExamples) {
	const GaeParams p = scalar_gae();
	const DenseVector one = DenseVector::Ones(1);
	EXPECT_EQ(gae_encode(p, one, one), DenseVector::Constant(1, 24));
	EXPECT_EQ(gae_decode_x(p, one, one), DenseVector::Constant(1, 24));
	EXPECT_EQ(gae_reconstruct(p, one, one), DenseVector::Constant(1, 576));
}

TEST(Gae, ZeroLabelGivesBias) {
	Rng rng(4);
	const GaeParams p = random_gae({5, 3, 4, 6}, rng, Activation::ReLU, Activation::Logistic);
	const DenseVector x = random_vector(5, rng);
	const DenseVector y0 = DenseVector::Zero(3);
	EXPECT_EQ(gae_encode(p, x, y0), DenseVector(activate(Activation::ReLU, p.b_h)));
	EXPECT_EQ(gae_decode_x(p, DenseVector::Zero(6), random_vector(3, rng)),
			DenseVector(activate(Activation::Logistic, p.b_x)));
	EXPECT_EQ(gae_reconstruct(p, x, y0), DenseVector(activate(Activation::Logistic, p.b_x)));
}

TEST(Gae, RandomAgainstLoopOracle) {
	Rng rng(5);
	for (int trial = 0; trial < 20; ++trial) {
		const GaeParams p = random_gae({6, 4, 5, 3}, rng, Activation::Logistic, Activation::Logistic);
		const DenseVector x = random_vector(6, rng), y = random_vector(4, rng);
		const DenseVector pre = loop_preactivation(p, x, y);
		EXPECT_LT((gae_preactivation(p, x, y) - pre).cwiseAbs().maxCoeff(), 1e-12);
		DenseVector h(pre.size());
		for (Eigen::Index c = 0; c < pre.size(); ++c) h[c] = sigmoid(pre[c]);
		EXPECT_LT((gae_encode(p, x, y) - h).cwiseAbs().maxCoeff(), 1e-12);
		EXPECT_LT((gae_decode_x(p, h, y) - loop_decode(p, h, y)).cwiseAbs().maxCoeff(), 1e-12);
		EXPECT_LT((gae_reconstruct(p, x, y) - loop_decode(p, h, y)).cwiseAbs().maxCoeff(), 1e-12);
	}
}

TEST(Gae, FactoredEqualsNaiveTensor) {
	Rng rng(6);
	for (int trial = 0; trial < 50; ++trial) {
		const GaeDims d{1 + static_cast<Eigen::Index>(rng() % 5), 1 + static_cast<Eigen::Index>(rng() % 5),
				1 + static_cast<Eigen::Index>(rng() % 7), 1 + static_cast<Eigen::Index>(rng() % 5)};
		const GaeParams p = random_gae(d, rng);
		const NaiveGatedParams naive = expand(p);
		const DenseVector x = random_vector(d.n_x, rng), y = random_vector(d.n_y, rng);
		EXPECT_LT((naive_gated_encode(naive, x, y) - gae_preactivation(p, x, y)).cwiseAbs().maxCoeff(), 1e-10);
	}
}

TEST(Gae, PreactivationIsBilinear) {
	Rng rng(7);
	const GaeParams p = random_gae({5, 4, 6, 3}, rng);
	const DenseVector x = random_vector(5, rng), y = random_vector(4, rng);
	// bilinearity holds for the bias-free part
	const DenseVector base = gae_preactivation(p, x, y) - p.b_h;
	for (double a : {0.0, 1.0, -2.0, 0.5}) {
		const DenseVector ax = gae_preactivation(p, DenseVector(a * x), y) - p.b_h;
		const DenseVector ay = gae_preactivation(p, x, DenseVector(a * y)) - p.b_h;
		EXPECT_LT((ax - a * base).cwiseAbs().maxCoeff(), 1e-12) << a;
		EXPECT_LT((ay - a * base).cwiseAbs().maxCoeff(), 1e-12) << a;
	}
}

TEST(Gae, OneHotAdditivity) {
	Rng rng(8);
	const GaeParams p = random_gae({5, 4, 6, 3}, rng);
	const DenseVector x = random_vector(5, rng);
	const DenseVector zero = gae_preactivation(p, x, DenseVector::Zero(4));
	EXPECT_EQ(zero, p.b_h);
	for (Eigen::Index i = 0; i < 4; ++i) {
		for (Eigen::Index j = 0; j < 4; ++j) {
			if (i == j) continue;
			DenseVector ei = DenseVector::Zero(4), ej = DenseVector::Zero(4);
			ei[i] = 1;
			ej[j] = 1;
			const DenseVector both = gae_preactivation(p, x, DenseVector(ei + ej));
			const DenseVector sum = gae_preactivation(p, x, ei) + gae_preactivation(p, x, ej) - zero;
			EXPECT_LT((both - sum).cwiseAbs().maxCoeff(), 1e-12);
		}
	}
}

TEST(Gae, OutputRangesFollowActivations) {
	Rng rng(9);
	for (int trial = 0; trial < 50; ++trial) {
		GaeParams p = random_gae({8, 3, 6, 5}, rng, Activation::ReLU, Activation::Logistic);
		p.Wx *= 20;
		const DenseVector x = random_vector(8, rng), y = random_vector(3, rng);
		const DenseVector h = gae_encode(p, x, y);
		EXPECT_GE(h.minCoeff(), 0.0);
		const DenseVector xhat = gae_reconstruct(p, x, y);
		EXPECT_GT(xhat.minCoeff(), 0.0);
		EXPECT_LT(xhat.maxCoeff(), 1.0);
	}
}

TEST(Gae, ShapeChecks) {
	const GaeParams p = GaeParams::zeros({4, 2, 3, 5}, Activation::ReLU, Activation::Logistic);
	EXPECT_THROW(gae_encode(p, DenseVector::Zero(3), DenseVector::Zero(2)), DimensionError);
	EXPECT_THROW(gae_encode(p, DenseVector::Zero(4), DenseVector::Zero(3)), DimensionError);
	EXPECT_THROW(gae_decode_x(p, DenseVector::Zero(4), DenseVector::Zero(2)), DimensionError);
	GaeParams bad = p;
	bad.Wy = DenseMatrix::Zero(4, 2);
	EXPECT_THROW(bad.validate(), DimensionError);
}

TEST(Gae, InitRangeAndZeroBiases) {
	Rng rng(10);
	const GaeParams p = GaeParams::random({784, 10, 64, 32}, Activation::ReLU, Activation::Logistic, rng);
	EXPECT_LE(p.Wx.cwiseAbs().maxCoeff(), std::sqrt(6.0 / (784 + 64)));
	EXPECT_LE(p.Wy.cwiseAbs().maxCoeff(), std::sqrt(6.0 / (10 + 64)));
	EXPECT_LE(p.Wh.cwiseAbs().maxCoeff(), std::sqrt(6.0 / (32 + 64)));
	EXPECT_GT(p.Wx.cwiseAbs().maxCoeff(), 0.9 * std::sqrt(6.0 / (784 + 64)));
	EXPECT_TRUE(p.b_h.isZero());
	EXPECT_TRUE(p.b_x.isZero());
}
