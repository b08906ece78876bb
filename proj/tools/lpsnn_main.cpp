// lpsnn command-line entry point: features, train, convert, evaluate, compare.
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include <lpsnn/audio_frontend.hpp>
#include <lpsnn/convert.hpp>
#include <lpsnn/lprnn.hpp>
#include <lpsnn/snn_sim.hpp>
#include <lpsnn/synthetic.hpp>

using namespace lpsnn;
using nlohmann::json;

namespace {

enum ExitCode { kOk = 0, kOther = 1, kConfig = 2, kData = 3, kNumeric = 4 };

struct MelOpts {
	MelConfig cfg;
	void add(CLI::App *app)
	{
		app->add_option("--sample-rate", cfg.sample_rate, "Expected WAV sample rate (Hz)");
		app->add_option("--n-fft", cfg.n_fft, "FFT size (power of two)");
		app->add_option("--hop", cfg.hop_length, "Hop length in samples (sets T_ANN)");
		app->add_option("--n-mels", cfg.n_mels, "Number of mel bins");
		app->add_option("--f-min", cfg.f_min, "Lowest mel edge (Hz)");
		app->add_option("--f-max", cfg.f_max, "Highest mel edge (Hz)");
		app->add_option("--log-floor", cfg.log_floor, "Offset inside log()");
	}
};

struct Common {
	std::string cache_dir = FeatureCache::default_dir(".lpsnn_cache");
	int workers = 1;
	void add(CLI::App *app)
	{
		app->add_option("--cache-dir", cache_dir, "Feature cache directory (env LPSNN_CACHE_DIR)");
		app->add_option("--workers", workers, "Parallel workers")->check(CLI::PositiveNumber);
	}
};

/// Runs fn(i) for i in [0, n) on `workers` threads; output order is the
/// caller's responsibility (results are indexed by i).
void parallel_for(size_t n, int workers, const std::function<void(size_t)> &fn)
{
	std::atomic<size_t> next{0};
	std::exception_ptr err;
	std::mutex err_mu;
	auto body = [&] {
		for (size_t i; (i = next++) < n;) {
			try {
				fn(i);
			}
			catch (...) {
				std::lock_guard<std::mutex> lock(err_mu);
				if (!err) err = std::current_exception();
			}
		}
	};
	std::vector<std::thread> pool;
	for (int w = 1; w < workers; ++w) pool.emplace_back(body);
	body();
	for (auto &t : pool) t.join();
	if (err) std::rethrow_exception(err);
}

struct Loaded {
	std::vector<Sample> samples;
	std::vector<std::string> paths;
};

std::vector<ManifestEntry> split_entries(const std::vector<ManifestEntry> &all, const std::string &split)
{
	std::vector<ManifestEntry> out;
	for (const auto &e : all) {
		if (e.split == split) out.push_back(e);
	}
	return out;
}

int label_index(const std::vector<std::string> &labels, const std::string &l)
{
	auto it = std::find(labels.begin(), labels.end(), l);
	if (it == labels.end()) {
		throw DataError("label '" + l + "' is not known to the model");
	}
	return static_cast<int>(it - labels.begin());
}

Loaded load_entries(const std::vector<ManifestEntry> &entries, const std::vector<std::string> &labels,
                    const MelConfig &mc, FeatureCache &cache, int workers, const FeatureNorm &norm)
{
	Loaded out;
	out.samples.resize(entries.size());
	std::vector<std::string> errors(entries.size());
	parallel_for(entries.size(), workers, [&](size_t i) {
		try {
			Matrix raw = cache.get(entries[i].path, mc);
			out.samples[i].features = norm.empty() ? raw : apply_normalization(raw, norm);
			out.samples[i].label = label_index(labels, entries[i].label);
		}
		catch (const DataError &e) {
			errors[i] = e.what();
		}
	});
	std::string report;
	int n = 0;
	for (size_t i = 0; i < entries.size(); ++i) {
		if (!errors[i].empty()) {
			report += "\n  " + errors[i];
			++n;
		}
		out.paths.push_back(entries[i].path);
	}
	if (n) {
		throw DataError(std::to_string(n) + " file(s) failed:" + report);
	}
	return out;
}

void write_text(const std::string &path, const std::string &text)
{
	std::ofstream os(path);
	if (!os) throw DataError("cannot write " + path);
	os << text;
}

void emit(const json &result, const std::string &resolved, const std::string &out_base)
{
	json doc = result;
	doc["resolved_config"] = resolved;
	if (!out_base.empty()) {
		write_text(out_base + ".config.toml", resolved);
	}
	std::cout << doc.dump(2) << std::endl;
}

std::vector<double> expand_alphas(const std::vector<double> &a)
{
	if (a.size() == 1) return std::vector<double>(4, a[0]);
	if (a.size() == 4) return a;
	throw ConfigError("--alpha takes one value or four (one per layer)");
}

}  // namespace

int main(int argc, char **argv)
{
	CLI::App app{"lpsnn: low-pass RNN training, sigma-delta SNN conversion and simulation"};
	app.set_config("--config", "", "Replay a resolved-config TOML file");
	app.require_subcommand(1);
	app.option_defaults()->always_capture_default();

	// features
	auto *features = app.add_subcommand("features", "Extract and cache mel features for a manifest");
	features->configurable();
	std::string f_manifest, f_out;
	MelOpts f_mel;
	Common f_common;
	features->add_option("--manifest", f_manifest, "CSV manifest path,label,split")->required();
	features->add_option("--out", f_out, "Summary JSON path");
	f_mel.add(features);
	f_common.add(features);

	// train
	auto *train_cmd = app.add_subcommand("train", "Train a quantization-aware lpRNN");
	train_cmd->configurable();
	std::string t_manifest, t_out, t_csv;
	MelOpts t_mel;
	Common t_common;
	TrainConfig tc;
	int t_hidden = 64, t_quant = 3;
	std::vector<double> t_alpha{0.9};
	double t_bias = 0.1, t_logit = 10.0, t_clamp = 1.0;
	train_cmd->add_option("--manifest", t_manifest, "CSV manifest with train (and optional val) split")->required();
	train_cmd->add_option("--out", t_out, "Model file to write")->required();
	train_cmd->add_option("--csv", t_csv, "Per-epoch history CSV");
	train_cmd->add_option("--epochs", tc.epochs);
	train_cmd->add_option("--lr", tc.lr);
	train_cmd->add_option("--batch-size", tc.batch_size);
	train_cmd->add_option("--seed", tc.seed);
	train_cmd->add_option("--sparsity", tc.sparsity, "Magnitude pruning fraction");
	train_cmd->add_option("--prune-epoch", tc.prune_epoch, "Epoch at which pruning is applied");
	train_cmd->add_option("--hidden", t_hidden, "Units per hidden layer");
	train_cmd->add_option("--alpha", t_alpha, "Low-pass coefficient, one or four values");
	train_cmd->add_option("--bias-offset", t_bias, "Initial bias offset");
	train_cmd->add_option("--quant-bits", t_quant, "Weight bits (0 disables quantization)");
	train_cmd->add_option("--logit-scale", t_logit);
	train_cmd->add_option("--clamp", t_clamp, "Clamped-ReLU ceiling");
	t_mel.add(train_cmd);
	t_common.add(train_cmd);

	// convert
	auto *convert_cmd = app.add_subcommand("convert", "Compile a model into a sigma-delta SNN");
	convert_cmd->configurable();
	std::string c_model, c_out, c_manifest, c_report;
	Common c_common;
	TimingConfig c_timing;
	CompileConfig cc;
	ScaleSearchConfig sc;
	double c_f = 0.0;
	int c_probes = 8;
	convert_cmd->add_option("--model", c_model)->required();
	convert_cmd->add_option("--out", c_out, "Network file to write")->required();
	convert_cmd->add_option("--manifest", c_manifest, "Manifest whose train split provides probe inputs");
	convert_cmd->add_option("--probes", c_probes, "Number of probe samples");
	convert_cmd->add_option("--f", c_f, "Scale factor override (skips the search)");
	convert_cmd->add_option("--oversample", c_timing.oversample, "T_ANN / T_SNN");
	convert_cmd->add_option("--tau-s", cc.tau_s);
	convert_cmd->add_option("--tau-i", cc.tau_i);
	convert_cmd->add_option("--tau-u-input", cc.tau_u_input);
	convert_cmd->add_option("--threshold", cc.threshold);
	convert_cmd->add_option("--mem-floor", cc.mem_floor, "I_mem floor in units of w_fb");
	convert_cmd->add_option("--weight-gain", cc.weight_gain);
	convert_cmd->add_option("--margin", sc.safety_margin, "Fraction of the state range usable by f");
	convert_cmd->add_option("--report", c_report, "Compile report path (default <out>.report.txt)");
	c_common.add(convert_cmd);

	// evaluate
	auto *eval_cmd = app.add_subcommand("evaluate", "Accuracy and spike metrics on a manifest split");
	eval_cmd->configurable();
	std::string e_model, e_net, e_manifest, e_split = "test", e_mode = "reference", e_out, e_csv;
	int e_limit = 0;
	Common e_common;
	eval_cmd->add_option("--model", e_model, "ANN model file");
	eval_cmd->add_option("--net", e_net, "SNN network file");
	eval_cmd->add_option("--manifest", e_manifest)->required();
	eval_cmd->add_option("--split", e_split);
	eval_cmd->add_option("--mode", e_mode, "reference or fixed_point");
	eval_cmd->add_option("--limit", e_limit, "Evaluate at most this many samples (0 = all)");
	eval_cmd->add_option("--out", e_out, "Metrics JSON path");
	eval_cmd->add_option("--csv", e_csv, "Per-sample CSV");
	e_common.add(eval_cmd);

	// compare
	auto *cmp_cmd = app.add_subcommand("compare", "Per-layer ANN vs SNN tracking on one sample");
	cmp_cmd->configurable();
	std::string k_model, k_net, k_manifest, k_split = "test", k_wav, k_mode = "reference", k_out, k_csv, k_rasters;
	int k_index = 0;
	Common k_common;
	cmp_cmd->add_option("--model", k_model)->required();
	cmp_cmd->add_option("--net", k_net)->required();
	cmp_cmd->add_option("--manifest", k_manifest);
	cmp_cmd->add_option("--split", k_split);
	cmp_cmd->add_option("--index", k_index, "Sample index within the split");
	cmp_cmd->add_option("--wav", k_wav, "Compare on this WAV instead of a manifest sample");
	cmp_cmd->add_option("--mode", k_mode);
	cmp_cmd->add_option("--out", k_out, "Report JSON path");
	cmp_cmd->add_option("--csv", k_csv, "Per-frame activation CSV");
	cmp_cmd->add_option("--raster-dir", k_rasters, "Write one spike raster file per layer here");
	k_common.add(cmp_cmd);

	// synth
	auto *synth_cmd = app.add_subcommand("synth", "Write the four-class chirp corpus (WAVs + manifest)");
	synth_cmd->configurable();
	std::string s_dir;
	int s_train = 32, s_test = 16;
	std::uint64_t s_seed = 1;
	synth_cmd->add_option("--dir", s_dir, "Output directory")->required();
	synth_cmd->add_option("--train", s_train, "Training clips");
	synth_cmd->add_option("--test", s_test, "Test clips");
	synth_cmd->add_option("--seed", s_seed);

	try {
		app.parse(argc, argv);
	}
	catch (const CLI::ParseError &e) {
		int rc = app.exit(e);
		return rc == 0 ? kOk : kConfig;
	}
	// Only the chosen subcommand, with every default filled in, so the block
	// replays through --config.
	CLI::App *chosen = app.get_subcommands().front();
	const std::string resolved = "[" + chosen->get_name() + "]\n" + chosen->config_to_str(true, false);

	try {
		if (*synth_cmd) {
			const std::string manifest = write_sweep_corpus(s_dir, sweep_dataset(s_train, s_test, s_seed));
			emit({{"command", "synth"}, {"manifest", manifest}, {"clips", s_train + s_test}}, resolved, "");
			return kOk;
		}
		if (*features) {
			f_mel.cfg.validate();
			auto entries = read_manifest(f_manifest);
			FeatureCache cache(f_common.cache_dir);
			std::vector<std::string> errors(entries.size());
			parallel_for(entries.size(), f_common.workers, [&](size_t i) {
				try {
					cache.get(entries[i].path, f_mel.cfg);
				}
				catch (const DataError &e) {
					errors[i] = e.what();
				}
			});
			json errs = json::array();
			for (size_t i = 0; i < entries.size(); ++i) {
				if (!errors[i].empty()) errs.push_back({{"path", entries[i].path}, {"error", errors[i]}});
			}
			json res = {{"command", "features"}, {"files", entries.size()}, {"cache_hits", cache.hits()},
			            {"cache_misses", cache.misses()}, {"cache_dir", cache.dir()}, {"errors", errs}};
			if (!f_out.empty()) write_text(f_out, res.dump(2) + "\n");
			emit(res, resolved, f_out);
			return errs.empty() ? kOk : kData;
		}

		if (*train_cmd) {
			t_mel.cfg.validate();
			auto entries = read_manifest(t_manifest);
			auto labels = manifest_labels(entries);
			auto train_e = split_entries(entries, "train");
			auto val_e = split_entries(entries, "val");
			if (train_e.empty()) throw DataError("manifest has no 'train' split");
			FeatureCache cache(t_common.cache_dir);
			Loaded tr = load_entries(train_e, labels, t_mel.cfg, cache, t_common.workers, {});
			std::vector<Matrix> raw;
			for (const auto &s : tr.samples) raw.push_back(s.features);
			FeatureNorm norm = fit_normalization(raw);
			for (auto &s : tr.samples) s.features = apply_normalization(s.features, norm);
			Loaded va = load_entries(val_e, labels, t_mel.cfg, cache, t_common.workers, norm);

			InitConfig ic;
			ic.inputs = t_mel.cfg.n_mels;
			ic.hidden = t_hidden;
			ic.classes = static_cast<int>(labels.size());
			ic.alphas = expand_alphas(t_alpha);
			ic.bias_offset = t_bias;
			ic.seed = tc.seed;
			LpRnnModel model = init_model(ic);
			model.T_ANN = t_mel.cfg.hop_length / static_cast<double>(t_mel.cfg.sample_rate);
			model.quant_bits = t_quant;
			model.logit_scale = t_logit;
			model.clamp_ceiling = t_clamp;
			model.labels = labels;
			model.norm = norm;
			model.frontend = t_mel.cfg.to_map();
			TrainResult r = train(model, tr.samples, va.samples, tc);
			save_model(t_out, r.model);
			json hist = json::array();
			std::string csv = "epoch,train_loss,train_acc,val_acc\n";
			for (const auto &h : r.history) {
				hist.push_back({{"epoch", h.epoch}, {"train_loss", h.train_loss},
				                {"train_acc", h.train_acc}, {"val_acc", h.val_acc}});
				csv += std::to_string(h.epoch) + "," + std::to_string(h.train_loss) + "," +
				       std::to_string(h.train_acc) + "," + std::to_string(h.val_acc) + "\n";
			}
			if (!t_csv.empty()) write_text(t_csv, csv);
			json res = {{"command", "train"}, {"model", t_out}, {"labels", labels},
			            {"train_samples", tr.samples.size()}, {"val_samples", va.samples.size()},
			            {"best_epoch", r.best_epoch},
			            {"train_accuracy", accuracy(r.model, tr.samples)}, {"history", hist}};
			emit(res, resolved, t_out);
			return kOk;
		}

		if (*convert_cmd) {
			LpRnnModel model = load_model(c_model);
			c_timing.T_ANN = model.T_ANN;
			ScaleSelection sel;
			if (c_f > 0.0) {
				sel.f = c_f;
			}
			else {
				if (c_manifest.empty()) {
					throw ConfigError("convert needs --manifest (probe inputs) or an explicit --f");
				}
				auto entries = split_entries(read_manifest(c_manifest), "train");
				if (entries.empty()) throw DataError("probe manifest has no 'train' split");
				entries.resize(std::min(entries.size(), static_cast<size_t>(std::max(1, c_probes))));
				FeatureCache cache(c_common.cache_dir);
				Loaded probes = load_entries(entries, model.labels, MelConfig::from_map(model.frontend),
				                             cache, c_common.workers, model.norm);
				std::vector<Matrix> x;
				for (const auto &s : probes.samples) x.push_back(s.features);
				sel = select_scale_factor(model, x, c_timing, cc, sc);
			}
			SnnNetwork net = compile(model, c_timing, sel.f, cc);
			net.safety_margin = sc.safety_margin;
			net.probe_peaks = sel.layer_peaks;
			net.source_model = std::filesystem::absolute(c_model).string();
			save_network(c_out, net);
			const std::string report_path = c_report.empty() ? c_out + ".report.txt" : c_report;
			write_text(report_path, compile_report(net));
			json res = {{"command", "convert"}, {"network", c_out}, {"report", report_path},
			            {"f", sel.f}, {"peak_state", sel.peak}, {"oversample", c_timing.oversample}};
			emit(res, resolved, c_out);
			return kOk;
		}

		if (*eval_cmd) {
			if (e_model.empty() && e_net.empty()) {
				throw ConfigError("evaluate needs --model and/or --net");
			}
			const SimMode mode = parse_sim_mode(e_mode);
			std::optional<LpRnnModel> model;
			std::optional<SnnNetwork> net;
			if (!e_model.empty()) model = quantized_view(load_model(e_model));
			if (!e_net.empty()) net = load_network(e_net);
			const auto &labels = model ? model->labels : net->labels;
			const FeatureNorm &norm = model ? model->norm : net->norm;
			const MelConfig mc = MelConfig::from_map(model ? model->frontend : net->frontend);
			auto entries = split_entries(read_manifest(e_manifest), e_split);
			if (entries.empty()) throw DataError("split '" + e_split + "' is not present in the manifest");
			if (e_limit > 0 && entries.size() > static_cast<size_t>(e_limit)) entries.resize(static_cast<size_t>(e_limit));
			FeatureCache cache(e_common.cache_dir);
			Loaded data = load_entries(entries, labels, mc, cache, e_common.workers, norm);
			const size_t n = data.samples.size();
			std::vector<int> ann_pred(n, -1), snn_pred(n, -1);
			std::vector<double> spikes(n, 0.0), enc_spikes(n, 0.0), track(n, 0.0);
			SimOptions opt;
			opt.mode = mode;
			parallel_for(n, e_common.workers, [&](size_t i) {
				const Matrix &x = data.samples[i].features;
				std::optional<ForwardResult> fr;
				if (model) {
					fr = forward_sequence(*model, x);
					ann_pred[i] = argmax(fr->logits);
				}
				if (net) {
					auto tr = simulate(*net, x, opt);
					snn_pred[i] = argmax(readout(tr, *net));
					spikes[i] = static_cast<double>(tr.total_spikes());
					for (auto c : tr.counts.front()) enc_spikes[i] += static_cast<double>(c);
					if (fr) track[i] = compare_activations(fr->trace, tr, *net).mean_rel_mse();
				}
			});
			auto acc = [&](const std::vector<int> &pred) {
				json per_class = json::object();
				std::vector<int> hit(labels.size(), 0), tot(labels.size(), 0);
				int ok = 0;
				for (size_t i = 0; i < n; ++i) {
					const int y = data.samples[i].label;
					tot[y]++;
					if (pred[i] == y) {
						hit[y]++;
						ok++;
					}
				}
				for (size_t c = 0; c < labels.size(); ++c) {
					if (tot[c]) per_class[labels[c]] = static_cast<double>(hit[c]) / tot[c];
				}
				return json{{"accuracy", static_cast<double>(ok) / static_cast<double>(n)}, {"per_class", per_class}};
			};
			auto mean = [&](const std::vector<double> &v) {
				double s = 0.0;
				for (double x : v) s += x;
				return s / static_cast<double>(n);
			};
			json res = {{"command", "evaluate"}, {"split", e_split}, {"samples", n}, {"mode", to_string(mode)}};
			if (model) res["ann"] = acc(ann_pred);
			if (net) {
				res["snn"] = acc(snn_pred);
				res["snn"]["mean_spikes_per_sample"] = mean(spikes);
				res["snn"]["mean_encoder_spikes_per_sample"] = mean(enc_spikes);
			}
			if (model && net) {
				int agree = 0;
				for (size_t i = 0; i < n; ++i) agree += ann_pred[i] == snn_pred[i];
				res["agreement"] = static_cast<double>(agree) / static_cast<double>(n);
				res["mean_tracking_rel_mse"] = mean(track);
			}
			if (!e_csv.empty()) {
				std::string csv = "index,path,label,ann_pred,snn_pred,spikes,encoder_spikes,tracking_rel_mse\n";
				for (size_t i = 0; i < n; ++i) {
					csv += std::to_string(i) + "," + data.paths[i] + "," + std::to_string(data.samples[i].label) +
					       "," + std::to_string(ann_pred[i]) + "," + std::to_string(snn_pred[i]) + "," +
					       std::to_string(spikes[i]) + "," + std::to_string(enc_spikes[i]) + "," +
					       std::to_string(track[i]) + "\n";
				}
				write_text(e_csv, csv);
			}
			if (!e_out.empty()) write_text(e_out, res.dump(2) + "\n");
			emit(res, resolved, e_out);
			return kOk;
		}

		if (*cmp_cmd) {
			const SimMode mode = parse_sim_mode(k_mode);
			LpRnnModel model = quantized_view(load_model(k_model));
			SnnNetwork net = load_network(k_net);
			const MelConfig mc = MelConfig::from_map(model.frontend);
			Matrix x;
			std::string source;
			if (!k_wav.empty()) {
				x = mel_spectrogram(load_wav(k_wav), mc, model.norm);
				source = k_wav;
			}
			else {
				if (k_manifest.empty()) throw ConfigError("compare needs --manifest or --wav");
				auto entries = split_entries(read_manifest(k_manifest), k_split);
				if (entries.empty()) throw DataError("split '" + k_split + "' is not present in the manifest");
				if (k_index < 0 || static_cast<size_t>(k_index) >= entries.size()) {
					throw ConfigError("--index outside the split");
				}
				FeatureCache cache(k_common.cache_dir);
				x = apply_normalization(cache.get(entries[static_cast<size_t>(k_index)].path, mc), model.norm);
				source = entries[static_cast<size_t>(k_index)].path;
			}
			auto fr = forward_sequence(model, x);
			SimOptions opt;
			opt.mode = mode;
			auto tr = simulate(net, x, opt);
			auto rep = compare_activations(fr.trace, tr, net);
			json layers = json::array();
			for (size_t k = 0; k < rep.layers.size(); ++k) {
				layers.push_back({{"layer", net.layers[k].name}, {"rel_mse", rep.layers[k].rel_mse},
				                  {"max_abs", rep.layers[k].max_abs}, {"spikes", rep.layers[k].spikes}});
			}
			json res = {{"command", "compare"}, {"sample", source}, {"mode", to_string(mode)},
			            {"layers", layers}, {"saturation_events", tr.saturation_count},
			            {"ann_scores", std::vector<double>(fr.logits.data(), fr.logits.data() + fr.logits.size())}};
			Vector sc_snn = readout(tr, net);
			res["snn_scores"] = std::vector<double>(sc_snn.data(), sc_snn.data() + sc_snn.size());
			if (!k_csv.empty()) {
				std::ostringstream os;
				os.precision(9);
				os << "frame,layer,neuron,ann,snn\n";
				for (size_t k = 0; k < fr.trace.size(); ++k) {
					for (Eigen::Index t = 0; t < fr.trace[k].rows(); ++t) {
						for (Eigen::Index j = 0; j < fr.trace[k].cols(); ++j) {
							os << t << ',' << k << ',' << j << ',' << fr.trace[k](t, j) << ','
							   << tr.decoded[k](t, j) << '\n';
						}
					}
				}
				write_text(k_csv, os.str());
			}
			if (!k_rasters.empty()) {
				std::filesystem::create_directories(k_rasters);
				json files = json::array();
				for (size_t k = 0; k < tr.rasters.size(); ++k) {
					const auto path = (std::filesystem::path(k_rasters) / (net.layers[k].name + ".raster")).string();
					save_raster(path, tr.rasters[k]);
					files.push_back(path);
				}
				res["rasters"] = files;
			}
			if (!k_out.empty()) write_text(k_out, res.dump(2) + "\n");
			emit(res, resolved, k_out);
			return kOk;
		}
	}
	catch (const ConfigError &e) {
		std::cerr << "config error: " << e.what() << '\n';
		return kConfig;
	}
	catch (const DataError &e) {
		std::cerr << "data error: " << e.what() << '\n';
		return kData;
	}
	catch (const NumericError &e) {
		std::cerr << "numeric error: " << e.what() << '\n';
		return kNumeric;
	}
	catch (const std::exception &e) {
		std::cerr << "error: " << e.what() << '\n';
		return kOther;
	}
	return kOk;
}
