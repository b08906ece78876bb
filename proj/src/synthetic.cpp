#include <lpsnn/synthetic.hpp>

#include <cmath>
#include <filesystem>
#include <numbers>

namespace lpsnn {

std::vector<SweepClip> sweep_dataset(int n_train, int n_test, std::uint64_t seed,
                                     double duration, int sample_rate)
{
	std::mt19937_64 rng(seed);
	std::uniform_real_distribution<double> u01(0.0, 1.0);
	auto jitter = [&](double v, double rel) { return v * (1.0 + rel * (2.0 * u01(rng) - 1.0)); };
	const struct {
		double f0, f1;
	} bands[] = {{300.0, 1500.0}, {1500.0, 300.0}, {1500.0, 4500.0}, {4500.0, 1500.0}};
	std::normal_distribution<double> noise(0.0, 1.0);
	const int n = static_cast<int>(duration * sample_rate);
	std::vector<SweepClip> out;
	for (int idx = 0; idx < n_train + n_test; ++idx) {
		SweepClip c;
		c.label = idx % 4;
		c.split = idx < n_train ? "train" : "test";
		c.clip.sample_rate = sample_rate;
		c.clip.samples.assign(static_cast<size_t>(n), 0.0);
		const double f0 = jitter(bands[c.label].f0, 0.15);
		const double f1 = jitter(bands[c.label].f1, 0.15);
		const double amp = 0.2 + 0.5 * u01(rng);
		const double onset = 0.1 * duration * u01(rng);
		const double len = duration * (0.6 + 0.3 * u01(rng));
		const double noise_amp = 0.01 + 0.02 * u01(rng);
		double phase = 2.0 * std::numbers::pi * u01(rng);
		for (int i = 0; i < n; ++i) {
			const double t = static_cast<double>(i) / sample_rate;
			double s = noise_amp * noise(rng);
			if (t >= onset && t < onset + len) {
				const double r = (t - onset) / len;
				// Exponential sweep with raised-cosine edges.
				const double f = f0 * std::pow(f1 / f0, r);
				phase += 2.0 * std::numbers::pi * f / sample_rate;
				const double edge = std::min({1.0, r / 0.05, (1.0 - r) / 0.05});
				s += amp * edge * std::sin(phase);
			}
			c.clip.samples[static_cast<size_t>(i)] = std::clamp(s, -1.0, 1.0);
		}
		out.push_back(std::move(c));
	}
	return out;
}

std::string write_sweep_corpus(const std::string &dir, const std::vector<SweepClip> &clips)
{
	namespace fs = std::filesystem;
	fs::create_directories(dir);
	std::vector<ManifestEntry> entries;
	for (size_t i = 0; i < clips.size(); ++i) {
		const std::string name = "clip_" + std::to_string(i) + ".wav";
		save_wav((fs::path(dir) / name).string(), clips[i].clip);
		entries.push_back({name, sweep_labels()[static_cast<size_t>(clips[i].label)], clips[i].split});
	}
	const std::string manifest = (fs::path(dir) / "manifest.csv").string();
	write_manifest(manifest, entries);
	return manifest;
}

Matrix smooth_input(std::mt19937_64 &rng, int frames, int channels, double max_freq)
{
	std::uniform_real_distribution<double> u01(0.0, 1.0);
	Matrix x(frames, channels);
	for (int c = 0; c < channels; ++c) {
		const double f1 = 0.01 + (max_freq - 0.01) * u01(rng);
		const double f2 = 0.01 + (0.05 - 0.01) * u01(rng);
		const double p1 = 6.0 * u01(rng), p2 = 6.0 * u01(rng);
		for (int t = 0; t < frames; ++t) {
			const double v = 0.5 + 0.25 * std::sin(2.0 * std::numbers::pi * f1 * t + p1) +
			                 0.2 * std::sin(2.0 * std::numbers::pi * f2 * t + p2);
			x(t, c) = std::clamp(v, 0.0, 1.0);
		}
	}
	return x;
}

std::vector<double> layer_activity(const LpRnnModel &model, const Matrix &x)
{
	auto r = forward_sequence(quantized_view(model), x);
	std::vector<double> a;
	for (const auto &m : r.trace) a.push_back(m.mean());
	return a;
}

ModelDraw draw_active_model(std::mt19937_64 &rng, const ModelDrawConfig &cfg)
{
	ModelDraw d;
	while (d.attempts < cfg.max_attempts) {
		++d.attempts;
		InitConfig ic;
		ic.inputs = cfg.inputs;
		ic.hidden = cfg.hidden;
		ic.classes = cfg.classes;
		ic.alphas.assign(4, cfg.alpha);
		ic.bias_offset = cfg.bias_offset;
		ic.seed = rng();
		d.model = init_model(ic);
		d.inputs.clear();
		bool ok = true;
		for (int s = 0; s < cfg.samples && ok; ++s) {
			d.inputs.push_back(smooth_input(rng, cfg.frames, cfg.inputs));
			for (double a : layer_activity(d.model, d.inputs.back())) {
				ok = ok && a >= cfg.min_activity;
			}
		}
		if (ok) {
			return d;
		}
	}
	throw NumericError("no sufficiently active model after " +
	                   std::to_string(cfg.max_attempts) + " draws");
}

}  // namespace lpsnn
