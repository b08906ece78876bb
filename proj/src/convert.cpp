#include <lpsnn/convert.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include <lpsnn/snn_sim.hpp>

#include "json_util.hpp"

namespace lpsnn {

using detail::json;

void TimingConfig::validate() const
{
	if (!(T_ANN > 0.0)) {
		throw ConfigError("T_ANN must be positive");
	}
	if (oversample < 1) {
		throw ConfigError("oversample must be a positive integer");
	}
}

double alpha_to_tau(double alpha, double T_s)
{
	if (!(alpha > 0.0 && alpha < 1.0)) {
		throw ConfigError("alpha must lie in (0, 1) for a finite time constant, got " +
		                  std::to_string(alpha));
	}
	return -T_s / std::log(alpha);
}

double rescale_tau(double tau_ann, const TimingConfig &timing, bool round)
{
	timing.validate();
	// tau_SNN = (T_ANN / T_SNN) * tau_ANN in seconds; in steps that is tau_ANN / T_SNN.
	const double steps = tau_ann / timing.T_SNN();
	const double out = round ? std::round(steps) : steps;
	if (!(out >= 1.0)) {
		throw ConfigError("time constant of " + std::to_string(steps) +
		                  " steps is below one simulator step");
	}
	return out;
}

Matrix map_weights_real(const Matrix &W_ann, double f, double tau_u, double tau_i,
                        double gain)
{
	if (!(f > 0.0)) {
		throw ConfigError("scale factor f must be positive");
	}
	return W_ann * (f / (tau_u * tau_i * gain));
}

IntMatrix map_weights(const Matrix &W_ann, double f, double tau_u, double tau_i,
                      double gain, double limit)
{
	Matrix r = map_weights_real(W_ann, f, tau_u, tau_i, gain);
	IntMatrix out(r.rows(), r.cols());
	std::ostringstream bad;
	int nbad = 0;
	for (Eigen::Index j = 0; j < r.cols(); ++j) {
		for (Eigen::Index i = 0; i < r.rows(); ++i) {
			double v = round_half_away(r(i, j));
			if (std::abs(v) > limit) {
				if (nbad++ < 8) {
					bad << " (" << i << "," << j << ")=" << v;
				}
			}
			out(i, j) = static_cast<std::int64_t>(v);
		}
	}
	if (nbad) {
		throw WeightRangeError(std::to_string(nbad) +
		                       " mapped weights exceed the hardware range " +
		                       std::to_string(limit) + ":" + bad.str());
	}
	return out;
}

IntVector map_bias(const Vector &b_ann, double f, double tau_i, double limit)
{
	if (!(f > 0.0)) {
		throw ConfigError("scale factor f must be positive");
	}
	IntVector out(b_ann.size());
	std::ostringstream bad;
	int nbad = 0;
	for (Eigen::Index i = 0; i < b_ann.size(); ++i) {
		double v = round_half_away(f * b_ann(i) / tau_i);
		if (std::abs(v) > limit) {
			if (nbad++ < 8) {
				bad << " [" << i << "]=" << v;
			}
		}
		out(i) = static_cast<std::int64_t>(v);
	}
	if (nbad) {
		throw WeightRangeError(std::to_string(nbad) + " mapped biases exceed " +
		                       std::to_string(limit) + ":" + bad.str());
	}
	return out;
}

Eigen::Index SnnNetwork::input_size() const
{
	return layers.front().projections.front().weights.cols();
}

void SnnNetwork::validate() const
{
	if (layers.empty()) {
		throw DataError("network has no layers");
	}
	timing.validate();
	for (size_t k = 0; k < layers.size(); ++k) {
		const auto &L = layers[k];
		L.params.validate();
		if (L.projections.empty()) {
			throw DataError("layer " + std::to_string(k) + " has no projections");
		}
		for (const auto &p : L.projections) {
			if (p.source >= static_cast<int>(layers.size()) || p.source < -1) {
				throw DataError("projection source out of range");
			}
			Eigen::Index src = p.source < 0 ? layers.front().projections.front().weights.cols()
			                                : layers[p.source].size();
			if (p.weights.rows() != L.size() || p.weights.cols() != src) {
				throw DataError("layer " + std::to_string(k) + ": projection shape mismatch");
			}
			if (!(p.tau_u >= 1.0)) {
				throw DataError("projection tau_u below one step");
			}
		}
		if (!(L.tau_act >= 1.0)) {
			throw DataError("decoding time constant below one step");
		}
	}
	if (layers.front().projections.front().source != -1) {
		throw DataError("first layer must be driven by the analog input");
	}
}

SnnNetwork compile(const LpRnnModel &model_in, const TimingConfig &timing, double f,
                   const CompileConfig &cfg)
{
	model_in.validate();
	timing.validate();
	if (!(f > 0.0)) {
		throw ConfigError("scale factor f must be positive");
	}
	const LpRnnModel model = quantized_view(model_in);
	const double c = model.clamp_ceiling;
	SnnNetwork net;
	net.f = f;
	net.timing = timing;
	net.clamp_ceiling = c;
	net.weight_gain = cfg.weight_gain;
	net.readout_fraction = model.readout_fraction;
	net.labels = model.labels;
	net.norm = model.norm;
	net.frontend = model.frontend;

	std::vector<double> tau_act;
	for (const auto &L : model.layers) {
		tau_act.push_back(rescale_tau(alpha_to_tau(L.alpha, model.T_ANN), timing, cfg.round_taus));
	}
	const double w_fb = round_half_away(f / cfg.tau_s);
	if (w_fb < 1.0) {
		throw ConfigError("f = " + std::to_string(f) +
		                  " gives a feedback weight below one unit");
	}
	for (size_t k = 0; k < model.layers.size(); ++k) {
		const auto &L = model.layers[k];
		SnnLayer S;
		S.name = to_string(L.kind) + std::to_string(k);
		S.alpha = L.alpha;
		S.tau_act = tau_act[k];
		NeuronParams &p = S.params;
		p.tau_mem = cfg.tau_mem;
		p.tau_s = cfg.tau_s;
		p.tau_i = cfg.tau_i;
		p.tau_u = k == 0 ? cfg.tau_u_input : tau_act[k - 1];
		p.threshold = cfg.threshold;
		p.w_fb = w_fb;
		p.clamp_ceiling = c;
		p.mem_floor = cfg.mem_floor;
		p.rounding = cfg.rounding;
		// Activations are carried in units of the ceiling: the encoder sees
		// x / c and biases are divided by c.
		Projection ff;
		ff.source = static_cast<int>(k) - 1;
		ff.tau_u = p.tau_u;
		const Matrix W_in = k == 0 ? Matrix(L.W_in / c) : L.W_in;
		ff.weights = map_weights(W_in, f, ff.tau_u, cfg.tau_i, cfg.weight_gain, cfg.weight_limit);
		S.projections.push_back(std::move(ff));
		if (L.has_rec()) {
			Projection rec;
			rec.source = static_cast<int>(k);
			rec.tau_u = tau_act[k];
			rec.weights = map_weights(L.W_rec, f, rec.tau_u, cfg.tau_i, cfg.weight_gain,
			                          cfg.weight_limit);
			S.projections.push_back(std::move(rec));
		}
		S.bias = map_bias(L.b / c, f, cfg.tau_i, cfg.bias_limit);
		net.layers.push_back(std::move(S));
	}
	net.validate();
	return net;
}

namespace {

double f_at(int index, int steps) { return std::exp2(static_cast<double>(index) / steps); }

/// Largest f for which every mapped weight and bias stays within range.
double f_weight_cap(const LpRnnModel &model, const TimingConfig &timing,
                    const CompileConfig &cfg)
{
	const LpRnnModel q = quantized_view(model);
	const double c = q.clamp_ceiling;
	double cap = std::numeric_limits<double>::infinity();
	auto limit = [&](double maxabs, double denom, double lim) {
		if (maxabs > 0.0) {
			cap = std::min(cap, (lim + 0.5) * denom / maxabs);
		}
	};
	std::vector<double> tau;
	for (const auto &L : q.layers) {
		tau.push_back(rescale_tau(alpha_to_tau(L.alpha, q.T_ANN), timing, cfg.round_taus));
	}
	for (size_t k = 0; k < q.layers.size(); ++k) {
		const auto &L = q.layers[k];
		const double tu = k == 0 ? cfg.tau_u_input : tau[k - 1];
		const double win = L.W_in.size() ? L.W_in.cwiseAbs().maxCoeff() / (k == 0 ? c : 1.0) : 0.0;
		limit(win, tu * cfg.tau_i * cfg.weight_gain, cfg.weight_limit);
		if (L.has_rec()) {
			limit(L.W_rec.cwiseAbs().maxCoeff(), tau[k] * cfg.tau_i * cfg.weight_gain,
			      cfg.weight_limit);
		}
		if (L.b.size()) {
			limit(L.b.cwiseAbs().maxCoeff() / c, cfg.tau_i, cfg.bias_limit);
		}
	}
	return cap;
}

}  // namespace

ScaleSelection select_scale_factor(const LpRnnModel &model,
                                   const std::vector<Matrix> &probe_inputs,
                                   const TimingConfig &timing, const CompileConfig &cfg,
                                   const ScaleSearchConfig &search)
{
	if (probe_inputs.empty()) {
		throw ConfigError("select_scale_factor needs at least one probe input");
	}
	const int g = search.grid_steps;
	const double target = static_cast<double>(kStateLimit) * search.safety_margin;
	int lo = std::max(search.min_index,
	                  static_cast<int>(std::ceil(g * std::log2(0.5 * cfg.tau_s))));
	int hi = search.max_index;
	const double cap = f_weight_cap(model, timing, cfg);
	if (std::isfinite(cap)) {
		hi = std::min(hi, static_cast<int>(std::floor(g * std::log2(cap))));
	}
	if (hi < lo) {
		throw NumericError("no feasible f: weight range allows at most f = " +
		                   std::to_string(cap));
	}

	std::map<int, std::pair<double, std::vector<double>>> memo;
	auto peak = [&](int k) -> double {
		auto it = memo.find(k);
		if (it != memo.end()) {
			return it->second.first;
		}
		double pk = 0.0;
		std::vector<double> layers;
		try {
			SnnNetwork net = compile(model, timing, f_at(k, g), cfg);
			SimOptions opt;
			opt.record_raster = false;
			layers.assign(net.layers.size(), 0.0);
			for (const auto &x : probe_inputs) {
				auto tr = simulate(net, x, opt);
				pk = std::max(pk, tr.peak_state);
				for (size_t l = 0; l < layers.size(); ++l) {
					layers[l] = std::max(layers[l], tr.layer_peaks[l]);
				}
			}
		}
		catch (const WeightRangeError &) {
			pk = std::numeric_limits<double>::infinity();
		}
		memo[k] = {pk, layers};
		return pk;
	};

	const int k_ref = std::clamp(20 * g, lo, hi);
	const double p_ref = peak(k_ref);
	int k;
	if (p_ref == 0.0) {
		k = hi;
	}
	else if (std::isfinite(p_ref)) {
		double est = std::log2(f_at(k_ref, g) * target / p_ref) * g;
		k = std::clamp(static_cast<int>(std::floor(est)), lo, hi);
	}
	else {
		k = k_ref;
	}
	while (k >= lo && !(peak(k) < target)) {
		--k;
	}
	if (k < lo) {
		throw NumericError("no feasible f: even f = " + std::to_string(f_at(lo, g)) +
		                   " reaches a peak state of " + std::to_string(peak(lo)) +
		                   " (limit " + std::to_string(target) + ")");
	}
	while (k + 1 <= hi && peak(k + 1) < target) {
		++k;
	}
	ScaleSelection sel;
	sel.grid_index = k;
	sel.f = f_at(k, g);
	sel.peak = peak(k);
	sel.layer_peaks = memo[k].second;
	return sel;
}

namespace {

json params_to_json(const NeuronParams &p)
{
	auto tau = [](double t) -> json {
		if (std::isinf(t)) return "inf";
		return t;
	};
	return {{"tau_mem", tau(p.tau_mem)}, {"tau_s", tau(p.tau_s)},
	        {"tau_i", tau(p.tau_i)},     {"tau_u", tau(p.tau_u)},
	        {"threshold", p.threshold},  {"w_fb", p.w_fb},
	        {"clamp_ceiling", p.clamp_ceiling}, {"mem_floor", p.mem_floor},
	        {"rounding", p.rounding == DecayRounding::truncate ? "truncate" : "nearest"}};
}

double tau_from_json(const json &j)
{
	if (j.is_string()) {
		if (j.get<std::string>() == "inf") return kNoDecay;
		throw DataError("bad time constant " + j.dump());
	}
	return j.get<double>();
}

NeuronParams params_from_json(const json &j)
{
	NeuronParams p;
	p.tau_mem = tau_from_json(j.at("tau_mem"));
	p.tau_s = tau_from_json(j.at("tau_s"));
	p.tau_i = tau_from_json(j.at("tau_i"));
	p.tau_u = tau_from_json(j.at("tau_u"));
	p.threshold = j.at("threshold").get<double>();
	p.w_fb = j.at("w_fb").get<double>();
	p.clamp_ceiling = j.at("clamp_ceiling").get<double>();
	p.mem_floor = j.at("mem_floor").get<double>();
	p.rounding = j.at("rounding") == "nearest" ? DecayRounding::nearest : DecayRounding::truncate;
	return p;
}

}  // namespace

void save_network(const std::string &path, const SnnNetwork &net)
{
	using namespace detail;
	json j;
	j["format"] = "lpsnn-network";
	j["version"] = 1;
	j["metadata"] = {{"f", net.f},
	                 {"T_ANN", net.timing.T_ANN},
	                 {"oversample", net.timing.oversample},
	                 {"T_SNN", net.timing.T_SNN()},
	                 {"safety_margin", net.safety_margin},
	                 {"clamp_ceiling", net.clamp_ceiling},
	                 {"weight_gain", net.weight_gain},
	                 {"readout_fraction", net.readout_fraction},
	                 {"probe_peaks", net.probe_peaks},
	                 {"source_model", net.source_model},
	                 {"labels", net.labels},
	                 {"frontend", net.frontend}};
	if (!net.norm.empty()) {
		j["normalization"] = {{"min", vector_to_json(net.norm.min)},
		                      {"max", vector_to_json(net.norm.max)}};
	}
	json layers = json::array();
	for (const auto &L : net.layers) {
		json l;
		l["name"] = L.name;
		l["alpha"] = L.alpha;
		l["tau_act"] = L.tau_act;
		l["params"] = params_to_json(L.params);
		json projs = json::array();
		for (const auto &p : L.projections) {
			projs.push_back({{"source", p.source}, {"tau_u", p.tau_u},
			                 {"weights", matrix_to_json(p.weights)}});
		}
		l["projections"] = projs;
		l["bias"] = vector_to_json(L.bias);
		layers.push_back(std::move(l));
	}
	j["layers"] = layers;
	write_json_file(path, j);
}

SnnNetwork load_network(const std::string &path)
{
	using namespace detail;
	json j = read_json_file(path);
	SnnNetwork net;
	try {
		if (j.at("format") != "lpsnn-network") {
			throw DataError(path + ": not a network file");
		}
		const json &m = j.at("metadata");
		net.f = m.at("f").get<double>();
		net.timing.T_ANN = m.at("T_ANN").get<double>();
		net.timing.oversample = m.at("oversample").get<int>();
		net.safety_margin = m.at("safety_margin").get<double>();
		net.clamp_ceiling = m.at("clamp_ceiling").get<double>();
		net.weight_gain = m.at("weight_gain").get<double>();
		net.readout_fraction = m.at("readout_fraction").get<double>();
		net.probe_peaks = m.at("probe_peaks").get<std::vector<double>>();
		net.source_model = m.at("source_model").get<std::string>();
		net.labels = m.at("labels").get<std::vector<std::string>>();
		net.frontend = m.at("frontend").get<std::map<std::string, double>>();
		if (j.contains("normalization")) {
			net.norm.min = vector_from_json<double>(j["normalization"].at("min"));
			net.norm.max = vector_from_json<double>(j["normalization"].at("max"));
		}
		for (const auto &l : j.at("layers")) {
			SnnLayer L;
			L.name = l.at("name").get<std::string>();
			L.alpha = l.at("alpha").get<double>();
			L.tau_act = l.at("tau_act").get<double>();
			L.params = params_from_json(l.at("params"));
			for (const auto &p : l.at("projections")) {
				Projection P;
				P.source = p.at("source").get<int>();
				P.tau_u = p.at("tau_u").get<double>();
				P.weights = matrix_from_json<std::int64_t>(p.at("weights"));
				L.projections.push_back(std::move(P));
			}
			L.bias = vector_from_json<std::int64_t>(l.at("bias"));
			net.layers.push_back(std::move(L));
		}
	}
	catch (const json::exception &e) {
		throw DataError(path + ": " + e.what());
	}
	net.validate();
	return net;
}

std::string compile_report(const SnnNetwork &net)
{
	std::ostringstream os;
	os << "scale factor f = " << net.f << " (log2 " << std::log2(net.f) << ")\n";
	os << "T_ANN = " << net.timing.T_ANN << " s, oversample = " << net.timing.oversample
	   << ", T_SNN = " << net.timing.T_SNN() << " s\n";
	os << "state limit = " << kStateLimit << ", safety margin = " << net.safety_margin
	   << "\n\n";
	for (size_t k = 0; k < net.layers.size(); ++k) {
		const auto &L = net.layers[k];
		const auto &p = L.params;
		os << "layer " << k << " " << L.name << ": " << L.size() << " neurons, alpha "
		   << L.alpha << ", tau_act " << L.tau_act << " steps\n";
		os << "  tau_s " << p.tau_s << ", tau_i " << p.tau_i << ", tau_mem " << p.tau_mem
		   << ", threshold " << p.threshold << ", w_fb " << p.w_fb << "\n";
		for (const auto &pr : L.projections) {
			os << "  projection from "
			   << (pr.source < 0 ? std::string("analog input") : "layer " + std::to_string(pr.source))
			   << ", tau_u " << pr.tau_u << ", weights " << pr.weights.rows() << "x"
			   << pr.weights.cols() << "\n    histogram:";
			std::map<std::int64_t, int> h;
			for (Eigen::Index i = 0; i < pr.weights.size(); ++i) {
				h[pr.weights(i)]++;
			}
			if (h.size() <= 16) {
				for (auto [v, n] : h) os << " " << v << ":" << n;
			}
			else {
				os << " " << h.size() << " distinct values in [" << h.begin()->first << ", "
				   << h.rbegin()->first << "]";
			}
			os << "\n";
		}
		if (L.bias.size()) {
			os << "  bias range [" << L.bias.minCoeff() << ", " << L.bias.maxCoeff() << "]\n";
		}
		if (k < net.probe_peaks.size()) {
			os << "  predicted peak state " << net.probe_peaks[k] << " ("
			   << 100.0 * net.probe_peaks[k] / static_cast<double>(kStateLimit)
			   << "% of limit)\n";
		}
	}
	return os.str();
}

}  // namespace lpsnn
