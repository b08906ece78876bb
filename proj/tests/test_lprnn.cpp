#include <gtest/gtest.h>

#include <filesystem>
#include <random>

#include <lpsnn/lprnn.hpp>
#include <lpsnn/synthetic.hpp>

using namespace lpsnn;

namespace {

LpRnnModel small_model(std::uint64_t seed, int in = 3, int hidden = 5, int classes = 3,
                       double alpha = 0.6)
{
	InitConfig ic;
	ic.inputs = in;
	ic.hidden = hidden;
	ic.classes = classes;
	ic.alphas = {alpha, alpha, alpha, alpha};
	ic.seed = seed;
	ic.gain = 1.5;
	return init_model(ic);
}

Matrix random_input(std::mt19937_64 &rng, int frames, int width)
{
	std::uniform_real_distribution<double> u(0.0, 1.0);
	Matrix x(frames, width);
	for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = u(rng);
	return x;
}

std::vector<Matrix *> params_of(LpRnnModel &m)
{
	std::vector<Matrix *> out;
	for (auto &L : m.layers) {
		out.push_back(&L.W_in);
		if (L.has_rec()) out.push_back(&L.W_rec);
	}
	return out;
}

}  // namespace

TEST(ClampedRelu, Examples)
{
	Vector x(4);
	x << 0.0, -5.0, 3.7, 0.4;
	Vector y = clamped_relu(x, 1.0);
	EXPECT_EQ(y(0), 0.0);
	EXPECT_EQ(y(1), 0.0);
	EXPECT_EQ(y(2), 1.0);
	EXPECT_EQ(y(3), 0.4);
}

TEST(CellForward, IdentityAtAlphaOne)
{
	LpRnnModel m = small_model(1);
	LpRnnLayer L = m.layers[1];
	L.alpha = 1.0;
	Vector y = Vector::LinSpaced(L.size(), 0.1, 0.9);
	EXPECT_EQ(cell_forward(y, Vector::Ones(L.W_in.cols()), L), y);
}

TEST(CellForward, FeedforwardAtAlphaZero)
{
	LpRnnModel m = small_model(2);
	LpRnnLayer L = m.layers[0];
	L.alpha = 0.0;
	Vector x = Vector::LinSpaced(L.W_in.cols(), 0.0, 1.0);
	Vector expect = clamped_relu(L.W_in * x + L.b, 1.0);
	EXPECT_TRUE(cell_forward(Vector::Constant(L.size(), 0.7), x, L).isApprox(expect));
}

TEST(CellForward, MatchesScalarLoop)
{
	std::mt19937_64 rng(9);
	std::uniform_real_distribution<double> u(-1.0, 1.0);
	for (int trial = 0; trial < 50; ++trial) {
		LpRnnModel m = small_model(100 + trial);
		const LpRnnLayer &L = m.layers[1];
		Vector y(L.size()), x(L.W_in.cols());
		for (auto &v : y) v = (u(rng) + 1.0) / 2.0;
		for (auto &v : x) v = (u(rng) + 1.0) / 2.0;
		const double c = 0.8;
		Vector got = cell_forward(y, x, L, c);
		for (Eigen::Index j = 0; j < L.size(); ++j) {
			double z = L.b(j);
			for (Eigen::Index i = 0; i < x.size(); ++i) z += L.W_in(j, i) * x(i);
			for (Eigen::Index i = 0; i < y.size(); ++i) z += L.W_rec(j, i) * y(i);
			double act = z < 0.0 ? 0.0 : (z > c ? c : z);
			EXPECT_NEAR(got(j), L.alpha * y(j) + (1.0 - L.alpha) * act, 1e-14);
		}
	}
}

TEST(ForwardSequence, EqualsCellChaining)
{
	std::mt19937_64 rng(4);
	LpRnnModel m = small_model(7);
	Matrix x = random_input(rng, 20, 3);
	ForwardResult r = forward_sequence(m, x);
	std::vector<Vector> y;
	for (const auto &L : m.layers) y.push_back(Vector::Zero(L.size()));
	for (int t = 0; t < 20; ++t) {
		Vector in = x.row(t).transpose();
		for (size_t k = 0; k < m.layers.size(); ++k) {
			y[k] = cell_forward(y[k], in, m.layers[k], m.clamp_ceiling);
			EXPECT_TRUE(r.trace[k].row(t).transpose().isApprox(y[k], 1e-15) || y[k].isZero());
			in = y[k];
		}
	}
	// Readout: mean over the final ceil(0.25 * 20) = 5 frames.
	Vector mean = r.trace.back().bottomRows(5).colwise().mean().transpose();
	EXPECT_TRUE(r.logits.isApprox(mean));
}

TEST(ForwardSequence, ZeroFeaturesZeroBiasGiveZeroLogits)
{
	LpRnnModel m = small_model(3);
	for (auto &L : m.layers) L.b.setZero();
	EXPECT_TRUE(forward_sequence(m, Matrix::Zero(6, 3)).logits.isZero());
}

TEST(ForwardSequence, RejectsEmptyOrMisshaped)
{
	LpRnnModel m = small_model(3);
	EXPECT_THROW(forward_sequence(m, Matrix(0, 3)), DataError);
	EXPECT_THROW(forward_sequence(m, Matrix::Zero(4, 5)), DataError);
}

TEST(ForwardSequence, StateStaysWithinClamp)
{
	std::mt19937_64 rng(12);
	for (int trial = 0; trial < 20; ++trial) {
		LpRnnModel m = small_model(200 + trial, 3, 6, 3, 0.3);
		m.clamp_ceiling = 0.7;
		for (auto *W : params_of(m)) *W *= 5.0;
		Matrix x = random_input(rng, 30, 3) * 4.0;
		for (const auto &Y : forward_sequence(m, x).trace) {
			EXPECT_GE(Y.minCoeff(), 0.0);
			EXPECT_LE(Y.maxCoeff(), 0.7 + 1e-15);
		}
	}
}

TEST(ForwardSequence, LowPassConvergesMonotonically)
{
	LpRnnModel m = small_model(5);
	LpRnnLayer L = m.layers[0];
	Vector x = Vector::Constant(3, 0.5);
	Vector y = Vector::Zero(L.size());
	Vector target = clamped_relu(L.W_in * x + L.b, 1.0);
	Vector prev_gap = target;
	for (int t = 0; t < 60; ++t) {
		y = cell_forward(y, x, L);
		Vector gap = (target - y).cwiseAbs();
		EXPECT_TRUE((gap.array() <= prev_gap.array() + 1e-15).all());
		prev_gap = gap;
	}
	EXPECT_LT(prev_gap.maxCoeff(), 1e-6);
}

TEST(Quantizer, Examples)
{
	EXPECT_TRUE(ste_quantize(Matrix::Zero(2, 2)).isZero());
	EXPECT_EQ(quant_scale(Matrix::Zero(2, 2)), 1.0);

	const double s = 0.25;
	Matrix grid(1, 7);
	grid << -3 * s, -2 * s, -s, 0, s, 2 * s, 3 * s;
	EXPECT_EQ(ste_quantize(grid), grid);

	// max|W| = 3s pins the scale at s.
	Matrix w(1, 3);
	w << 0.49 * s, 0.51 * s, 3 * s;
	Matrix q = ste_quantize(w);
	EXPECT_EQ(q(0, 0), 0.0);
	EXPECT_DOUBLE_EQ(q(0, 1), s);

	Matrix tie(1, 3);
	tie << 0.5 * s, -0.5 * s, 3 * s;
	Matrix lv = quant_levels(tie);
	EXPECT_EQ(lv(0, 0), 1.0);
	EXPECT_EQ(lv(0, 1), -1.0);
}

TEST(Quantizer, IdempotentAndOnGrid)
{
	std::mt19937_64 rng(2);
	std::normal_distribution<double> n(0.0, 1.0);
	for (int trial = 0; trial < 100; ++trial) {
		Matrix W(6, 5);
		for (Eigen::Index i = 0; i < W.size(); ++i) W(i) = n(rng);
		Matrix q = ste_quantize(W);
		EXPECT_TRUE(ste_quantize(q).isApprox(q, 1e-15));
		Matrix lv = quant_levels(W);
		EXPECT_LE(lv.cwiseAbs().maxCoeff(), 3.0);
		EXPECT_EQ(lv, lv.array().round().matrix());
	}
	EXPECT_THROW(quant_scale(Matrix::Ones(1, 1), 1), ConfigError);
}

TEST(Bptt, MatchesFiniteDifferences)
{
	std::mt19937_64 rng(31);
	for (int trial = 0; trial < 10; ++trial) {
		LpRnnModel m = small_model(300 + trial, 3, 4, 3, 0.5);
		std::vector<Sample> batch{{random_input(rng, 8, 3), 0}, {random_input(rng, 8, 3), 2}};
		Gradients g = bptt_grads(m, batch, false);
		const double h = 1e-6;
		double num = 0.0, den = 0.0;
		for (size_t k = 0; k < m.layers.size(); ++k) {
			auto check = [&](auto &P, const auto &G) {
				for (Eigen::Index i = 0; i < P.size(); ++i) {
					const double keep = P(i);
					P(i) = keep + h;
					double up = batch_loss(m, batch, false);
					P(i) = keep - h;
					double dn = batch_loss(m, batch, false);
					P(i) = keep;
					const double fd = (up - dn) / (2 * h);
					num += (fd - G(i)) * (fd - G(i));
					den += fd * fd;
				}
			};
			check(m.layers[k].W_in, g.layers[k].W_in);
			check(m.layers[k].b, g.layers[k].b);
			if (m.layers[k].has_rec()) check(m.layers[k].W_rec, g.layers[k].W_rec);
		}
		if (den == 0.0) {
			EXPECT_EQ(num, 0.0) << "trial " << trial;  // dead model: both sides zero
		}
		else {
			EXPECT_LT(std::sqrt(num / den), 1e-4) << "trial " << trial;
		}
	}
}

TEST(Bptt, OneFrameAlphaZeroEqualsFeedforwardBackprop)
{
	std::mt19937_64 rng(17);
	LpRnnModel m = small_model(41, 3, 5, 3, 0.0);
	Matrix x = random_input(rng, 1, 3);
	const int label = 1;
	Gradients g = bptt_grads(m, {{x, label}}, false);

	// Plain four-layer MLP with clamped ReLU, coded directly.
	const double c = m.clamp_ceiling;
	std::vector<Vector> a{x.row(0).transpose()}, z;
	for (const auto &L : m.layers) {
		z.push_back(L.W_in * a.back() + L.b);
		a.push_back(clamped_relu(z.back(), c));
	}
	Vector logits = m.logit_scale * a.back();
	Vector p = (logits.array() - logits.maxCoeff()).exp();
	p /= p.sum();
	Vector da = m.logit_scale * p;
	da(label) -= m.logit_scale;
	for (size_t k = m.layers.size(); k-- > 0;) {
		Vector dz = da.array() * (z[k].array() > 0.0 && z[k].array() < c).cast<double>();
		EXPECT_TRUE(g.layers[k].W_in.isApprox(dz * a[k].transpose(), 1e-12) ||
		            (dz * a[k].transpose()).isZero());
		EXPECT_TRUE(g.layers[k].b.isApprox(dz, 1e-12) || dz.isZero());
		if (m.layers[k].has_rec()) EXPECT_TRUE(g.layers[k].W_rec.isZero());
		da = m.layers[k].W_in.transpose() * dz;
	}
}

TEST(Bptt, SymmetricUnitsGetEqualBiasGradients)
{
	LpRnnModel m = small_model(8);
	for (auto &L : m.layers) {
		L.W_in.setZero();
		if (L.has_rec()) L.W_rec.setZero();
		L.b.setConstant(0.2);
	}
	Gradients g = bptt_grads(m, {{Matrix::Constant(4, 3, 0.5), 0}}, false);
	for (size_t k = 0; k + 1 < g.layers.size(); ++k) {
		const auto &G = g.layers[k];
		EXPECT_NEAR((G.b.array() - G.b(0)).abs().maxCoeff(), 0.0, 1e-15);
	}
}

TEST(Bptt, SteBlocksGradientOnlyOutsideClipRange)
{
	LpRnnModel m = small_model(9);
	std::mt19937_64 rng(1);
	Gradients a = bptt_grads(m, {{random_input(rng, 5, 3), 1}}, true);
	// All stored weights lie inside +-max|W|, so nothing is blocked; pruned
	// entries, however, receive no gradient.
	LpRnnModel p = magnitude_prune(m, 0.5);
	Gradients b = bptt_grads(p, {{random_input(rng, 5, 3), 1}}, true);
	for (size_t k = 0; k < p.layers.size(); ++k) {
		EXPECT_TRUE((b.layers[k].W_in.array() * (1.0 - p.layers[k].mask_in.array())).isZero());
	}
	EXPECT_GT(a.layers[0].W_in.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Train, ZeroEpochsOrZeroLrLeaveWeights)
{
	std::mt19937_64 rng(3);
	LpRnnModel m = small_model(10);
	std::vector<Sample> data{{random_input(rng, 6, 3), 0}, {random_input(rng, 6, 3), 1}};
	TrainConfig tc;
	tc.epochs = 0;
	EXPECT_EQ(train(m, data, {}, tc).model.layers[1].W_rec, m.layers[1].W_rec);
	tc.epochs = 3;
	tc.lr = 0.0;
	TrainResult r = train(m, data, {}, tc);
	for (size_t k = 0; k < m.layers.size(); ++k) {
		EXPECT_EQ(r.model.layers[k].W_in, m.layers[k].W_in);
		EXPECT_EQ(r.model.layers[k].b, m.layers[k].b);
	}
}

TEST(Train, DeterministicGivenSeed)
{
	auto clips = sweep_dataset(16, 0, 5, 0.25);
	std::mt19937_64 rng(3);
	std::vector<Sample> data;
	for (const auto &c : clips) data.push_back({random_input(rng, 10, 3), c.label});
	LpRnnModel m = small_model(11, 3, 6, 4);
	TrainConfig tc;
	tc.epochs = 4;
	tc.batch_size = 4;
	tc.seed = 77;
	TrainResult a = train(m, data, {}, tc), b = train(m, data, {}, tc);
	for (size_t k = 0; k < m.layers.size(); ++k) {
		EXPECT_EQ(a.model.layers[k].W_in, b.model.layers[k].W_in);
	}
	EXPECT_EQ(a.history.size(), 4u);
}

TEST(Train, RejectsNonFiniteLoss)
{
	LpRnnModel m = small_model(12);
	m.logit_scale = std::numeric_limits<double>::quiet_NaN();
	EXPECT_THROW(bptt_grads(m, {{Matrix::Constant(3, 3, 0.5), 0}}, false), NumericError);
}

TEST(Prune, HalfOfTenWeights)
{
	LpRnnModel m = small_model(13);
	Matrix W(2, 5);
	W << 0.1, -0.9, 0.3, 0.05, -0.7, 0.6, -0.2, 0.8, 0.4, -0.5;
	m.layers[0].W_in = W;
	m.layers[0].mask_in.resize(0, 0);
	m.layers[0].W_in.conservativeResize(2, 5);
	LpRnnModel p = magnitude_prune(m, 0.5);
	const Matrix &P = p.layers[0].W_in;
	EXPECT_EQ((P.array() == 0.0).count(), 5);
	for (double big : {-0.9, 0.8, -0.7, 0.6, -0.5}) {
		EXPECT_TRUE((P.array() == big).any()) << big;
	}
	EXPECT_TRUE(ste_quantize(P).cwiseProduct(p.layers[0].mask_in).isApprox(ste_quantize(P)));
	EXPECT_EQ(magnitude_prune(m, 0.0).layers[0].W_in, W);
	EXPECT_THROW(magnitude_prune(m, 1.0), ConfigError);
}

TEST(ModelFile, RoundTrip)
{
	LpRnnModel m = magnitude_prune(small_model(14), 0.25);
	m.labels = {"a", "b", "c"};
	m.norm.min = Vector::Constant(3, -2.0);
	m.norm.max = Vector::Constant(3, 1.0);
	m.frontend = {{"n_mels", 3.0}};
	const auto path = (std::filesystem::temp_directory_path() / "lpsnn_model_rt.json").string();
	save_model(path, m);
	LpRnnModel r = load_model(path);
	ASSERT_EQ(r.layers.size(), m.layers.size());
	for (size_t k = 0; k < m.layers.size(); ++k) {
		EXPECT_EQ(r.layers[k].W_in, m.layers[k].W_in);
		EXPECT_EQ(r.layers[k].W_rec, m.layers[k].W_rec);
		EXPECT_EQ(r.layers[k].b, m.layers[k].b);
		EXPECT_EQ(r.layers[k].mask_in, m.layers[k].mask_in);
		EXPECT_EQ(r.layers[k].alpha, m.layers[k].alpha);
	}
	EXPECT_EQ(r.labels, m.labels);
	EXPECT_EQ(r.norm.min, m.norm.min);
	EXPECT_EQ(r.frontend, m.frontend);
	std::filesystem::remove(path);
	EXPECT_THROW(load_model(path), DataError);
}
