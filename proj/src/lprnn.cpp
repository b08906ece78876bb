#include <lpsnn/lprnn.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "json_util.hpp"

namespace lpsnn {

using detail::json;

std::string to_string(LayerKind k)
{
	switch (k) {
	case LayerKind::input_lowpass: return "input_lowpass";
	case LayerKind::recurrent: return "recurrent";
	case LayerKind::output: return "output";
	}
	return "?";
}

LayerKind parse_layer_kind(const std::string &s)
{
	if (s == "input_lowpass") return LayerKind::input_lowpass;
	if (s == "recurrent") return LayerKind::recurrent;
	if (s == "output") return LayerKind::output;
	throw DataError("unknown layer kind '" + s + "'");
}

void LpRnnModel::validate() const
{
	if (layers.empty()) {
		throw DataError("model has no layers");
	}
	if (!(clamp_ceiling > 0.0)) {
		throw ConfigError("clamp ceiling must be positive");
	}
	Eigen::Index prev = layers.front().W_in.cols();
	for (size_t k = 0; k < layers.size(); ++k) {
		const auto &L = layers[k];
		const std::string where = "layer " + std::to_string(k);
		if (L.W_in.cols() != prev) {
			throw DataError(where + ": W_in has " + std::to_string(L.W_in.cols()) +
			                " columns, expected " + std::to_string(prev));
		}
		if (L.b.size() != L.W_in.rows()) {
			throw DataError(where + ": bias size mismatch");
		}
		if (L.has_rec() && (L.W_rec.rows() != L.size() || L.W_rec.cols() != L.size())) {
			throw DataError(where + ": W_rec must be square with the layer width");
		}
		if (!(L.alpha >= 0.0 && L.alpha <= 1.0)) {
			throw ConfigError(where + ": alpha outside [0, 1]");
		}
		if (L.mask_in.size() && (L.mask_in.rows() != L.W_in.rows() ||
		                         L.mask_in.cols() != L.W_in.cols())) {
			throw DataError(where + ": mask_in shape mismatch");
		}
		if (L.mask_rec.size() && (L.mask_rec.rows() != L.W_rec.rows() ||
		                          L.mask_rec.cols() != L.W_rec.cols())) {
			throw DataError(where + ": mask_rec shape mismatch");
		}
		prev = L.size();
	}
	if (!labels.empty() && static_cast<Eigen::Index>(labels.size()) != output_size()) {
		throw DataError("label count does not match output width");
	}
	if (!norm.empty() && (norm.min.size() != input_size() || norm.max.size() != input_size())) {
		throw DataError("normalization statistics do not match input width");
	}
}

Vector clamped_relu(const Vector &x, double ceiling)
{
	if (!(ceiling > 0.0)) {
		throw ConfigError("clamp ceiling must be positive");
	}
	return x.cwiseMax(0.0).cwiseMin(ceiling);
}

Vector cell_forward(const Vector &y_prev, const Vector &x_t,
                    const LpRnnLayer &layer, double ceiling)
{
	Vector z = layer.W_in * x_t + layer.b;
	if (layer.has_rec()) {
		z += layer.W_rec * y_prev;
	}
	return layer.alpha * y_prev + (1.0 - layer.alpha) * clamped_relu(z, ceiling);
}

Eigen::Index readout_frames(Eigen::Index frames, double fraction)
{
	auto n = static_cast<Eigen::Index>(std::ceil(fraction * static_cast<double>(frames)));
	return std::clamp<Eigen::Index>(n, 1, frames);
}

ForwardResult forward_sequence(const LpRnnModel &model, const Matrix &features)
{
	if (features.rows() == 0) {
		throw DataError("empty feature sequence");
	}
	if (features.cols() != model.input_size()) {
		throw DataError("feature width " + std::to_string(features.cols()) +
		                " does not match model input " +
		                std::to_string(model.input_size()));
	}
	ForwardResult res;
	const Matrix *in = &features;
	for (const auto &L : model.layers) {
		Matrix out(features.rows(), L.size());
		Vector y = Vector::Zero(L.size());
		for (Eigen::Index t = 0; t < features.rows(); ++t) {
			y = cell_forward(y, in->row(t).transpose(), L, model.clamp_ceiling);
			out.row(t) = y.transpose();
		}
		res.trace.push_back(std::move(out));
		in = &res.trace.back();
	}
	const Matrix &last = res.trace.back();
	Eigen::Index n = readout_frames(last.rows(), model.readout_fraction);
	res.logits = last.bottomRows(n).colwise().mean().transpose();
	return res;
}

double quant_scale(const Matrix &W, int bits)
{
	if (bits < 2) {
		throw ConfigError("quantizer needs at least 2 bits");
	}
	double m = W.size() ? W.cwiseAbs().maxCoeff() : 0.0;
	if (m == 0.0) {
		return 1.0;
	}
	return m / static_cast<double>((1 << (bits - 1)) - 1);
}

Matrix quant_levels(const Matrix &W, int bits)
{
	const double scale = quant_scale(W, bits);
	const double top = static_cast<double>((1 << (bits - 1)) - 1);
	return W.unaryExpr([&](double w) {
		return std::clamp(round_half_away(w / scale), -top, top);
	});
}

Matrix ste_quantize(const Matrix &W, int bits)
{
	return quant_levels(W, bits) * quant_scale(W, bits);
}

LpRnnModel quantized_view(const LpRnnModel &model)
{
	LpRnnModel q = model;
	if (model.quant_bits == 0) {
		return q;
	}
	for (auto &L : q.layers) {
		L.W_in = ste_quantize(L.W_in, model.quant_bits);
		if (L.has_rec()) {
			L.W_rec = ste_quantize(L.W_rec, model.quant_bits);
		}
	}
	return q;
}

int argmax(const Vector &v)
{
	Eigen::Index i = 0;
	v.maxCoeff(&i);
	return static_cast<int>(i);
}

namespace {

struct SampleGrad {
	double loss;
	bool correct;
};

double softmax_xent(const Vector &logits, int label, Vector *dlogits)
{
	const double m = logits.maxCoeff();
	Vector e = (logits.array() - m).exp();
	const double z = e.sum();
	if (dlogits) {
		*dlogits = e / z;
		(*dlogits)(label) -= 1.0;
	}
	return -(logits(label) - m - std::log(z));
}

/// Forward + backward for one sample; accumulates into grads (unnormalised).
SampleGrad sample_grads(const LpRnnModel &q, const Sample &s, Gradients &g)
{
	const Eigen::Index T = s.features.rows();
	const size_t K = q.layers.size();
	const double c = q.clamp_ceiling;
	std::vector<Matrix> Y(K), Z(K);
	const Matrix *in = &s.features;
	for (size_t k = 0; k < K; ++k) {
		const auto &L = q.layers[k];
		Y[k].resize(T, L.size());
		Z[k].resize(T, L.size());
		Vector y = Vector::Zero(L.size());
		for (Eigen::Index t = 0; t < T; ++t) {
			Vector z = L.W_in * in->row(t).transpose() + L.b;
			if (L.has_rec()) {
				z += L.W_rec * y;
			}
			y = L.alpha * y + (1.0 - L.alpha) * clamped_relu(z, c);
			Z[k].row(t) = z.transpose();
			Y[k].row(t) = y.transpose();
		}
		in = &Y[k];
	}
	const Eigen::Index n = readout_frames(T, q.readout_fraction);
	Vector out = Y.back().bottomRows(n).colwise().mean().transpose();
	if (s.label < 0 || s.label >= out.size()) {
		throw DataError("label " + std::to_string(s.label) + " outside output width");
	}
	Vector dl;
	double loss = softmax_xent(q.logit_scale * out, s.label, &dl);
	if (!std::isfinite(loss)) {
		throw NumericError("non-finite loss in BPTT");
	}
	Matrix gY = Matrix::Zero(T, q.layers.back().size());
	gY.bottomRows(n).rowwise() = (q.logit_scale / static_cast<double>(n)) * dl.transpose();

	for (size_t kk = K; kk-- > 0;) {
		const auto &L = q.layers[kk];
		auto &G = g.layers[kk];
		const Matrix &X = kk == 0 ? s.features : Y[kk - 1];
		Matrix gX = Matrix::Zero(T, X.cols());
		Vector carry = Vector::Zero(L.size());  // dL/dy_t from t+1
		for (Eigen::Index t = T; t-- > 0;) {
			Vector gy = gY.row(t).transpose() + carry;
			Vector delta(L.size());
			for (Eigen::Index j = 0; j < L.size(); ++j) {
				double z = Z[kk](t, j);
				delta(j) = (z > 0.0 && z < c) ? (1.0 - L.alpha) * gy(j) : 0.0;
			}
			G.W_in.noalias() += delta * X.row(t);
			G.b += delta;
			gX.row(t) = (L.W_in.transpose() * delta).transpose();
			carry = L.alpha * gy;
			if (L.has_rec()) {
				if (t > 0) {
					G.W_rec.noalias() += delta * Y[kk].row(t - 1);
				}
				carry.noalias() += L.W_rec.transpose() * delta;
			}
		}
		gY = std::move(gX);
	}
	return {loss, argmax(out) == s.label};
}

Gradients zero_grads(const LpRnnModel &m)
{
	Gradients g;
	for (const auto &L : m.layers) {
		LayerGrads lg;
		lg.W_in = Matrix::Zero(L.W_in.rows(), L.W_in.cols());
		lg.W_rec = Matrix::Zero(L.W_rec.rows(), L.W_rec.cols());
		lg.b = Vector::Zero(L.b.size());
		g.layers.push_back(std::move(lg));
	}
	return g;
}

/// Straight-through: identity inside the clip range, zero outside; pruned
/// entries receive no gradient.
void apply_ste(const Matrix &W, const Matrix &mask, int bits, Matrix &grad)
{
	if (bits > 0) {
		const double lim = quant_scale(W, bits) * ((1 << (bits - 1)) - 1);
		for (Eigen::Index i = 0; i < W.size(); ++i) {
			if (std::abs(W(i)) > lim) {
				grad(i) = 0.0;
			}
		}
	}
	if (mask.size()) {
		grad.array() *= mask.array();
	}
}

}  // namespace

Gradients bptt_grads(const LpRnnModel &model, const std::vector<Sample> &batch,
                     bool quantize)
{
	if (batch.empty()) {
		throw DataError("empty batch");
	}
	LpRnnModel q = quantize ? quantized_view(model) : model;
	Gradients g = zero_grads(model);
	for (const auto &s : batch) {
		auto r = sample_grads(q, s, g);
		g.loss += r.loss;
		g.correct += r.correct ? 1 : 0;
	}
	const double inv = 1.0 / static_cast<double>(batch.size());
	g.loss *= inv;
	const int bits = quantize ? model.quant_bits : 0;
	for (size_t k = 0; k < g.layers.size(); ++k) {
		auto &G = g.layers[k];
		const auto &L = model.layers[k];
		G.W_in *= inv;
		G.W_rec *= inv;
		G.b *= inv;
		apply_ste(L.W_in, L.mask_in, bits, G.W_in);
		if (L.has_rec()) {
			apply_ste(L.W_rec, L.mask_rec, bits, G.W_rec);
		}
	}
	return g;
}

double batch_loss(const LpRnnModel &model, const std::vector<Sample> &batch,
                  bool quantize)
{
	LpRnnModel q = quantize ? quantized_view(model) : model;
	double total = 0.0;
	for (const auto &s : batch) {
		auto r = forward_sequence(q, s.features);
		total += softmax_xent(q.logit_scale * r.logits, s.label, nullptr);
	}
	return total / static_cast<double>(batch.size());
}

double accuracy(const LpRnnModel &model, const std::vector<Sample> &samples)
{
	if (samples.empty()) {
		return 0.0;
	}
	LpRnnModel q = quantized_view(model);
	int ok = 0;
	for (const auto &s : samples) {
		ok += argmax(forward_sequence(q, s.features).logits) == s.label;
	}
	return static_cast<double>(ok) / static_cast<double>(samples.size());
}

namespace {

struct Adam {
	double lr = 1e-3, b1 = 0.9, b2 = 0.999, eps = 1e-8;
	int t = 0;
	std::vector<Matrix> m, v;

	void step(std::vector<Matrix *> params, const std::vector<const Matrix *> &grads)
	{
		if (m.empty()) {
			for (auto *p : params) {
				m.push_back(Matrix::Zero(p->rows(), p->cols()));
				v.push_back(Matrix::Zero(p->rows(), p->cols()));
			}
		}
		++t;
		const double c1 = 1.0 - std::pow(b1, t), c2 = 1.0 - std::pow(b2, t);
		for (size_t i = 0; i < params.size(); ++i) {
			m[i] = b1 * m[i] + (1.0 - b1) * *grads[i];
			v[i] = b2 * v[i] + (1.0 - b2) * grads[i]->cwiseProduct(*grads[i]);
			params[i]->array() -=
			    lr * (m[i].array() / c1) / ((v[i].array() / c2).sqrt() + eps);
		}
	}
};

void enforce_masks(LpRnnModel &m)
{
	for (auto &L : m.layers) {
		if (L.mask_in.size()) L.W_in.array() *= L.mask_in.array();
		if (L.mask_rec.size()) L.W_rec.array() *= L.mask_rec.array();
	}
}

}  // namespace

TrainResult train(const LpRnnModel &model, const std::vector<Sample> &train_set,
                  const std::vector<Sample> &val_set, const TrainConfig &cfg)
{
	model.validate();
	TrainResult res{model, {}, -1};
	if (cfg.epochs <= 0) {
		return res;
	}
	if (train_set.empty()) {
		throw DataError("training split is empty");
	}
	if (cfg.batch_size < 1 || !(cfg.lr >= 0.0)) {
		throw ConfigError("batch_size must be >= 1 and lr >= 0");
	}
	LpRnnModel cur = model;
	std::mt19937_64 rng(cfg.seed);
	std::vector<size_t> order(train_set.size());
	std::iota(order.begin(), order.end(), 0);
	Adam opt;
	opt.lr = cfg.lr;
	double best_score = -1.0, best_loss = 0.0;

	// Column vectors are handled as n x 1 matrices by the optimiser.
	std::vector<Matrix> bias_buf(cur.layers.size());
	for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
		if (cfg.sparsity > 0.0 && epoch == cfg.prune_epoch) {
			cur = magnitude_prune(cur, cfg.sparsity);
		}
		std::shuffle(order.begin(), order.end(), rng);
		double loss_sum = 0.0;
		int correct = 0;
		for (size_t start = 0; start < order.size(); start += static_cast<size_t>(cfg.batch_size)) {
			std::vector<Sample> batch;
			for (size_t i = start; i < std::min(order.size(), start + cfg.batch_size); ++i) {
				batch.push_back(train_set[order[i]]);
			}
			Gradients g = bptt_grads(cur, batch, cur.quant_bits > 0);
			loss_sum += g.loss * static_cast<double>(batch.size());
			correct += g.correct;
			std::vector<Matrix *> params;
			std::vector<const Matrix *> grads;
			std::vector<Matrix> gb(cur.layers.size());
			for (size_t k = 0; k < cur.layers.size(); ++k) {
				auto &L = cur.layers[k];
				params.push_back(&L.W_in);
				grads.push_back(&g.layers[k].W_in);
				if (L.has_rec()) {
					params.push_back(&L.W_rec);
					grads.push_back(&g.layers[k].W_rec);
				}
				bias_buf[k] = L.b;
				gb[k] = g.layers[k].b;
				params.push_back(&bias_buf[k]);
				grads.push_back(&gb[k]);
			}
			opt.step(params, grads);
			for (size_t k = 0; k < cur.layers.size(); ++k) {
				cur.layers[k].b = bias_buf[k].col(0);
			}
			enforce_masks(cur);
		}
		EpochStats st{epoch, loss_sum / static_cast<double>(train_set.size()),
		              static_cast<double>(correct) / static_cast<double>(train_set.size()),
		              val_set.empty() ? -1.0 : accuracy(cur, val_set)};
		if (!std::isfinite(st.train_loss)) {
			throw NumericError("training diverged (non-finite loss) at epoch " +
			                   std::to_string(epoch));
		}
		res.history.push_back(st);
		const double score = val_set.empty() ? accuracy(cur, train_set) : st.val_acc;
		if (score > best_score || (score == best_score && st.train_loss < best_loss)) {
			best_score = score;
			best_loss = st.train_loss;
			res.model = cur;
			res.best_epoch = epoch;
		}
	}
	return res;
}

LpRnnModel magnitude_prune(const LpRnnModel &model, double sparsity)
{
	if (!(sparsity >= 0.0 && sparsity < 1.0)) {
		throw ConfigError("sparsity must lie in [0, 1)");
	}
	LpRnnModel out = model;
	if (sparsity == 0.0) {
		return out;
	}
	auto prune = [&](Matrix &W, Matrix &mask) {
		if (W.size() == 0) {
			return;
		}
		if (mask.size() == 0) {
			mask = Matrix::Ones(W.rows(), W.cols());
		}
		std::vector<Eigen::Index> idx(static_cast<size_t>(W.size()));
		std::iota(idx.begin(), idx.end(), 0);
		std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) {
			return std::abs(W(a)) < std::abs(W(b));
		});
		auto n = static_cast<size_t>(std::floor(sparsity * static_cast<double>(W.size()) + 0.5));
		for (size_t i = 0; i < n; ++i) {
			W(idx[i]) = 0.0;
			mask(idx[i]) = 0.0;
		}
	};
	for (auto &L : out.layers) {
		prune(L.W_in, L.mask_in);
		prune(L.W_rec, L.mask_rec);
	}
	return out;
}

LpRnnModel init_model(const InitConfig &cfg)
{
	if (cfg.alphas.size() != 4) {
		throw ConfigError("init_model expects 4 alpha values");
	}
	std::mt19937_64 rng(cfg.seed);
	auto uni = [&](Eigen::Index r, Eigen::Index c, double lim) {
		std::uniform_real_distribution<double> d(-lim, lim);
		Matrix m(r, c);
		for (Eigen::Index j = 0; j < c; ++j)
			for (Eigen::Index i = 0; i < r; ++i) m(i, j) = d(rng);
		return m;
	};
	LpRnnModel m;
	struct Spec {
		LayerKind kind;
		int out, in;
	};
	const Spec specs[] = {{LayerKind::input_lowpass, cfg.hidden, cfg.inputs},
	                      {LayerKind::recurrent, cfg.hidden, cfg.hidden},
	                      {LayerKind::recurrent, cfg.hidden, cfg.hidden},
	                      {LayerKind::output, cfg.classes, cfg.hidden}};
	for (size_t k = 0; k < 4; ++k) {
		const auto &s = specs[k];
		LpRnnLayer L;
		L.kind = s.kind;
		L.alpha = cfg.alphas[k];
		const double lim = cfg.gain / std::sqrt(static_cast<double>(s.in));
		L.W_in = uni(s.out, s.in, lim);
		if (s.kind == LayerKind::recurrent) {
			L.W_rec = uni(s.out, s.out, cfg.gain / std::sqrt(static_cast<double>(s.out)));
		}
		L.b = (uni(s.out, 1, lim).array() + cfg.bias_offset).matrix();
		m.layers.push_back(std::move(L));
	}
	return m;
}

void save_model(const std::string &path, const LpRnnModel &model)
{
	using namespace detail;
	model.validate();
	json j;
	j["format"] = "lpsnn-model";
	j["version"] = 1;
	json meta;
	meta["T_ANN"] = model.T_ANN;
	meta["clamp_ceiling"] = model.clamp_ceiling;
	meta["quant_bits"] = model.quant_bits;
	meta["readout_fraction"] = model.readout_fraction;
	meta["logit_scale"] = model.logit_scale;
	meta["labels"] = model.labels;
	meta["frontend"] = model.frontend;
	json sizes = json::array({model.input_size()});
	json alphas = json::array();
	for (const auto &L : model.layers) {
		sizes.push_back(L.size());
		alphas.push_back(L.alpha);
	}
	meta["layer_sizes"] = sizes;
	meta["alphas"] = alphas;
	j["metadata"] = meta;
	if (!model.norm.empty()) {
		j["normalization"] = {{"min", vector_to_json(model.norm.min)},
		                      {"max", vector_to_json(model.norm.max)}};
	}
	json layers = json::array();
	auto tensor = [&](const Matrix &W, const Matrix &mask) {
		json t;
		t["float"] = matrix_to_json(W);
		if (model.quant_bits > 0) {
			t["quant_scale"] = quant_scale(W, model.quant_bits);
			t["quant_levels"] = matrix_to_json(quant_levels(W, model.quant_bits).cast<int>());
		}
		if (mask.size()) {
			t["mask"] = matrix_to_json(mask.cast<int>());
		}
		return t;
	};
	for (const auto &L : model.layers) {
		json l;
		l["kind"] = to_string(L.kind);
		l["alpha"] = L.alpha;
		l["W_in"] = tensor(L.W_in, L.mask_in);
		if (L.has_rec()) {
			l["W_rec"] = tensor(L.W_rec, L.mask_rec);
		}
		l["b"] = vector_to_json(L.b);
		layers.push_back(std::move(l));
	}
	j["layers"] = layers;
	write_json_file(path, j);
}

LpRnnModel load_model(const std::string &path)
{
	using namespace detail;
	json j = read_json_file(path);
	LpRnnModel m;
	try {
		if (j.at("format") != "lpsnn-model") {
			throw DataError(path + ": not a model file");
		}
		const json &meta = j.at("metadata");
		m.T_ANN = meta.at("T_ANN").get<double>();
		m.clamp_ceiling = meta.at("clamp_ceiling").get<double>();
		m.quant_bits = meta.at("quant_bits").get<int>();
		m.readout_fraction = meta.at("readout_fraction").get<double>();
		m.logit_scale = meta.at("logit_scale").get<double>();
		m.labels = meta.at("labels").get<std::vector<std::string>>();
		if (meta.contains("frontend")) {
			m.frontend = meta["frontend"].get<std::map<std::string, double>>();
		}
		if (j.contains("normalization")) {
			m.norm.min = vector_from_json<double>(j["normalization"].at("min"));
			m.norm.max = vector_from_json<double>(j["normalization"].at("max"));
		}
		for (const auto &l : j.at("layers")) {
			LpRnnLayer L;
			L.kind = parse_layer_kind(l.at("kind").get<std::string>());
			L.alpha = l.at("alpha").get<double>();
			L.W_in = matrix_from_json<double>(l.at("W_in").at("float"));
			if (l.at("W_in").contains("mask")) {
				L.mask_in = matrix_from_json<double>(l["W_in"]["mask"]);
			}
			if (l.contains("W_rec")) {
				L.W_rec = matrix_from_json<double>(l["W_rec"].at("float"));
				if (l["W_rec"].contains("mask")) {
					L.mask_rec = matrix_from_json<double>(l["W_rec"]["mask"]);
				}
			}
			L.b = vector_from_json<double>(l.at("b"));
			m.layers.push_back(std::move(L));
		}
	}
	catch (const json::exception &e) {
		throw DataError(path + ": " + e.what());
	}
	m.validate();
	return m;
}

}  // namespace lpsnn
