#include <lpsnn/snn_sim.hpp>

#include <algorithm>
#include <cmath>
#include <type_traits>

namespace lpsnn {

std::int64_t SimulationTrace::total_spikes() const
{
	std::int64_t n = 0;
	for (const auto &c : counts) {
		for (auto v : c) n += v;
	}
	return n;
}

namespace {

double full_scale(const SnnLayer &L, SimMode mode)
{
	if (mode == SimMode::fixed_point) {
		auto fp = to_fixed(L.params);
		return static_cast<double>(fp.w_fb) * static_cast<double>(fp.tau_s);
	}
	return L.params.full_scale();
}

inline double value(double x) { return x; }
inline double value(const FixedState &x) { return static_cast<double>(x.value); }

template <bool Fixed>
struct Engine {
	using S = std::conditional_t<Fixed, FixedState, double>;
	using Soma = std::conditional_t<Fixed, FixedNeuronState, NeuronState>;
	using Acc = std::conditional_t<Fixed, std::int64_t, double>;

	struct ProjRT {
		int source;
		double tau;
		std::int64_t tau_fix;
		DecayRounding rounding;
		Matrix Wd;           // weights as reals
		std::vector<S> u;
		std::vector<Acc> in;
	};

	struct LayerRT {
		const SnnLayer *def;
		std::vector<ProjRT> proj;
		std::vector<Soma> soma;
		FixedNeuronParams fp;
		std::vector<double> act;
		double scale;
		std::vector<char> spiked;
		double peak = 0.0;
	};

	const SnnNetwork &net;
	const SimOptions &opt;
	std::vector<LayerRT> layers;
	SimulationTrace tr;

	Engine(const SnnNetwork &n, const SimOptions &o) : net(n), opt(o)
	{
		net.validate();
		tr.mode = Fixed ? SimMode::fixed_point : SimMode::reference;
		for (const auto &L : net.layers) {
			LayerRT rt;
			rt.def = &L;
			const size_t n_units = static_cast<size_t>(L.size());
			for (const auto &p : L.projections) {
				ProjRT pr;
				pr.source = p.source;
				pr.tau = p.tau_u;
				pr.tau_fix = Fixed ? fixed_tau(p.tau_u) : 0;
				pr.rounding = L.params.rounding;
				pr.Wd = p.weights.cast<double>() * net.weight_gain;
				pr.u.assign(n_units, S{});
				pr.in.assign(n_units, Acc{});
				rt.proj.push_back(std::move(pr));
			}
			rt.soma.assign(n_units, Soma{});
			if constexpr (Fixed) {
				rt.fp = to_fixed(L.params);
			}
			rt.act.assign(n_units, 0.0);
			rt.scale = full_scale(L, tr.mode);
			rt.spiked.assign(n_units, 0);
			layers.push_back(std::move(rt));
		}
		const size_t K = layers.size();
		tr.rasters.resize(K);
		tr.counts.resize(K);
		tr.layer_peaks.assign(K, 0.0);
		for (size_t k = 0; k < K; ++k) {
			tr.counts[k].assign(static_cast<size_t>(net.layers[k].size()), 0);
			tr.rasters[k].population = static_cast<int>(net.layers[k].size());
			tr.rasters[k].dt = net.timing.T_SNN();
		}
		for (auto [l, n] : opt.probes) {
			if (l < 0 || l >= static_cast<int>(K) || n < 0 || n >= net.layers[l].size()) {
				throw ConfigError("probe (" + std::to_string(l) + "," + std::to_string(n) +
				                  ") outside the network");
			}
			tr.probes.push_back({l, n, Matrix()});
		}
	}

	S decay(const S &x, const ProjRT &p) const
	{
		if constexpr (Fixed) {
			return decay_step(x, p.tau_fix, p.rounding);
		}
		else {
			return decay_step(x, p.tau);
		}
	}

	void note_saturation(std::int64_t t, int k, int n, const char *var)
	{
		tr.saturation_count++;
		if (tr.saturation_events.size() < opt.max_saturation_log) {
			tr.saturation_events.push_back({t, k, n, var});
		}
	}

	/// Analog drive of the encoder projection for one frame.
	void set_analog(ProjRT &p, const Vector &x)
	{
		Vector v = p.Wd * x;
		for (Eigen::Index n = 0; n < v.size(); ++n) {
			if constexpr (Fixed) {
				p.in[n] = std::llround(v(n));
			}
			else {
				p.in[n] = v(n);
			}
		}
	}

	void run(const Matrix *features, const SpikeRaster *replay, Eigen::Index frames)
	{
		const int os = net.timing.oversample;
		const std::int64_t steps = frames * os;
		tr.duration = steps;
		for (auto &r : tr.rasters) r.duration = steps;
		for (auto &p : tr.probes) p.states = Matrix::Zero(steps, 4);
		tr.decoded.clear();
		for (const auto &L : layers) {
			tr.decoded.push_back(Matrix::Zero(frames, static_cast<Eigen::Index>(L.soma.size())));
		}
		std::vector<std::vector<char>> prev(layers.size());
		for (size_t k = 0; k < layers.size(); ++k) prev[k] = layers[k].spiked;
		size_t replay_pos = 0;
		std::vector<std::pair<std::int64_t, int>> replay_events;
		if (replay) {
			replay_events = replay->events;
			std::sort(replay_events.begin(), replay_events.end());
		}
		const double ceiling = net.clamp_ceiling;

		for (Eigen::Index f = 0; f < frames; ++f) {
			if (features) {
				set_analog(layers[0].proj[0], features->row(f).transpose());
			}
			for (int sub = 0; sub < os; ++sub) {
				const std::int64_t t = f * os + sub;
				for (size_t k = 0; k < layers.size(); ++k) {
					LayerRT &L = layers[k];
					const size_t n_units = L.soma.size();
					if (k == 0 && replay) {
						step_replay(L, t, replay_events, replay_pos);
						continue;
					}
					for (auto &p : L.proj) {
						if (p.source >= 0) {
							std::fill(p.in.begin(), p.in.end(), Acc{});
							const auto &src = prev[static_cast<size_t>(p.source)];
							for (size_t j = 0; j < src.size(); ++j) {
								if (!src[j]) continue;
								for (size_t n = 0; n < n_units; ++n) {
									if constexpr (Fixed) {
										p.in[n] += static_cast<std::int64_t>(p.Wd(n, j));
									}
									else {
										p.in[n] += p.Wd(n, j);
									}
								}
							}
						}
					}
					for (size_t n = 0; n < n_units; ++n) {
						Acc drive{};
						for (auto &p : L.proj) {
							if constexpr (Fixed) {
								p.u[n] = sat_add(decay(p.u[n], p), p.in[n]);
								if (p.u[n].saturated) {
									note_saturation(t, static_cast<int>(k), static_cast<int>(n), "u");
									p.u[n].saturated = false;
								}
							}
							else {
								p.u[n] = decay(p.u[n], p) + p.in[n];
							}
							drive += static_cast<Acc>(value(p.u[n]));
							L.peak = std::max(L.peak, std::abs(value(p.u[n])));
						}
						auto &st = L.soma[n];
						bool spike;
						if constexpr (Fixed) {
							spike = soma_step(st, drive + L.def->bias(n), L.fp);
							const char *vars[] = {"i", "s", "mem"};
							FixedState *fs[] = {&st.i, &st.s, &st.mem};
							for (int v = 0; v < 3; ++v) {
								if (fs[v]->saturated) {
									note_saturation(t, static_cast<int>(k), static_cast<int>(n), vars[v]);
									fs[v]->saturated = false;
								}
							}
						}
						else {
							spike = soma_step(st, drive + static_cast<double>(L.def->bias(n)),
							                  L.def->params);
						}
						L.peak = std::max({L.peak, std::abs(value(st.i)), std::abs(value(st.s)),
						                   std::abs(value(st.mem))});
						L.spiked[n] = spike;
						if (spike) {
							tr.counts[k][n]++;
							if (opt.record_raster) {
								tr.rasters[k].events.emplace_back(t, static_cast<int>(n));
							}
						}
						L.act[n] += (value(st.s) / L.scale - L.act[n]) / L.def->tau_act;
					}
				}
				for (auto &p : tr.probes) {
					auto &L = layers[static_cast<size_t>(p.layer)];
					const auto &st = L.soma[static_cast<size_t>(p.neuron)];
					double u = 0.0;
					for (const auto &pr : L.proj) u += value(pr.u[static_cast<size_t>(p.neuron)]);
					p.states(t, 0) = u;
					p.states(t, 1) = value(st.i);
					p.states(t, 2) = value(st.s);
					p.states(t, 3) = value(st.mem);
				}
				for (size_t k = 0; k < layers.size(); ++k) prev[k] = layers[k].spiked;
			}
			for (size_t k = 0; k < layers.size(); ++k) {
				for (size_t n = 0; n < layers[k].act.size(); ++n) {
					tr.decoded[k](f, static_cast<Eigen::Index>(n)) = layers[k].act[n] * ceiling;
				}
			}
		}
		for (size_t k = 0; k < layers.size(); ++k) {
			tr.layer_peaks[k] = layers[k].peak;
			tr.peak_state = std::max(tr.peak_state, layers[k].peak);
		}
	}

	/// Encoder spikes come from a recorded raster; only s is replayed so the
	/// layer can still be decoded.
	void step_replay(LayerRT &L, std::int64_t t,
	                 const std::vector<std::pair<std::int64_t, int>> &ev, size_t &pos)
	{
		std::vector<char> now(L.soma.size(), 0);
		for (; pos < ev.size() && ev[pos].first == t; ++pos) {
			now[static_cast<size_t>(ev[pos].second)] = 1;
		}
		for (size_t n = 0; n < L.soma.size(); ++n) {
			auto &st = L.soma[n];
			if constexpr (Fixed) {
				st.s = sat_add(decay_step(st.s, L.fp.tau_s, L.fp.rounding), st.spiked ? L.fp.w_fb : 0);
			}
			else {
				st.s = decay_step(st.s, L.def->params.tau_s) + (st.spiked ? L.def->params.w_fb : 0.0);
			}
			st.spiked = now[n];
			L.spiked[n] = now[n];
			if (now[n]) {
				tr.counts[0][n]++;
				if (opt.record_raster) tr.rasters[0].events.emplace_back(t, static_cast<int>(n));
			}
			L.act[n] += (value(st.s) / L.scale - L.act[n]) / L.def->tau_act;
		}
	}
};

template <bool Fixed>
SimulationTrace run_engine(const SnnNetwork &net, const Matrix *features,
                           const SpikeRaster *replay, Eigen::Index frames,
                           const SimOptions &opt)
{
	Engine<Fixed> e(net, opt);
	e.run(features, replay, frames);
	return std::move(e.tr);
}

}  // namespace

SimulationTrace simulate(const SnnNetwork &net, const Matrix &features, const SimOptions &opt)
{
	if (features.cols() != net.input_size()) {
		throw DataError("input width " + std::to_string(features.cols()) +
		                " does not match network input " + std::to_string(net.input_size()));
	}
	if (opt.mode == SimMode::fixed_point) {
		return run_engine<true>(net, &features, nullptr, features.rows(), opt);
	}
	return run_engine<false>(net, &features, nullptr, features.rows(), opt);
}

SimulationTrace simulate(const SnnNetwork &net, const SpikeRaster &encoder_spikes,
                         const SimOptions &opt)
{
	encoder_spikes.validate();
	if (encoder_spikes.population != net.layers.front().size()) {
		throw DataError("raster population does not match the encoder layer");
	}
	const int os = net.timing.oversample;
	if (encoder_spikes.duration % os != 0) {
		throw DataError("raster duration is not a whole number of frames");
	}
	const Eigen::Index frames = encoder_spikes.duration / os;
	if (opt.mode == SimMode::fixed_point) {
		return run_engine<true>(net, nullptr, &encoder_spikes, frames, opt);
	}
	return run_engine<false>(net, nullptr, &encoder_spikes, frames, opt);
}

Matrix decode_layer(const SpikeRaster &raster, const SnnLayer &layer, SimMode mode)
{
	Matrix s = reconstruct(raster, layer.params, mode);
	const double scale = full_scale(layer, mode);
	Matrix out(s.rows(), s.cols());
	for (Eigen::Index n = 0; n < s.cols(); ++n) {
		double a = 0.0;
		for (Eigen::Index t = 0; t < s.rows(); ++t) {
			a += (s(t, n) / scale - a) / layer.tau_act;
			out(t, n) = a;
		}
	}
	return out;
}

Vector readout(const SimulationTrace &trace, const SnnNetwork &net)
{
	const SpikeRaster &r = trace.rasters.back();
	const SnnLayer &L = net.layers.back();
	const int os = net.timing.oversample;
	const Eigen::Index frames = r.duration / os;
	if (frames == 0) {
		return Vector::Zero(L.size());
	}
	Matrix a = decode_layer(r, L, trace.mode);
	const Eigen::Index n = readout_frames(frames, net.readout_fraction) * os;
	return a.bottomRows(n).colwise().mean().transpose() * net.clamp_ceiling;
}

double relative_mse(const Matrix &a, const Matrix &b)
{
	const double num = (a - b).squaredNorm();
	const double den = a.squaredNorm();
	if (num == 0.0) return 0.0;
	return den > 0.0 ? num / den : std::numeric_limits<double>::infinity();
}

double ComparisonReport::mean_rel_mse() const
{
	double s = 0.0;
	for (const auto &l : layers) s += l.rel_mse;
	return layers.empty() ? 0.0 : s / static_cast<double>(layers.size());
}

double ComparisonReport::max_rel_mse() const
{
	double m = 0.0;
	for (const auto &l : layers) m = std::max(m, l.rel_mse);
	return m;
}

ComparisonReport compare_activations(const std::vector<Matrix> &ann_trace,
                                     const SimulationTrace &snn_trace, const SnnNetwork &net)
{
	if (ann_trace.size() != snn_trace.decoded.size() || ann_trace.size() != net.layers.size()) {
		throw DataError("ANN and SNN traces have different layer counts");
	}
	ComparisonReport rep;
	for (size_t k = 0; k < ann_trace.size(); ++k) {
		const Matrix &a = ann_trace[k];
		const Matrix &s = snn_trace.decoded[k];
		if (a.rows() != s.rows() || a.cols() != s.cols()) {
			throw DataError("layer " + std::to_string(k) + ": trace shapes differ");
		}
		LayerComparison c;
		c.rel_mse = relative_mse(a, s);
		c.max_abs = a.size() ? (a - s).cwiseAbs().maxCoeff() : 0.0;
		for (auto v : snn_trace.counts[k]) c.spikes += v;
		rep.layers.push_back(c);
	}
	return rep;
}

}  // namespace lpsnn
