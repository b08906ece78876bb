#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <lpsnn/audio_frontend.hpp>
#include <lpsnn/lprnn.hpp>

namespace lpsnn {

struct SweepClip {
	AudioClip clip;
	int label;
	std::string split;
};

/**
 * Four-class chirp task: rising or falling sweeps in a low (300-1500 Hz) or
 * high (1500-4500 Hz) band with jittered endpoints, onset, level and noise.
 * Deterministic in seed.
 */
std::vector<SweepClip> sweep_dataset(int n_train, int n_test, std::uint64_t seed,
                                     double duration = 0.5, int sample_rate = 16000);

inline const std::vector<std::string> &sweep_labels()
{
	static const std::vector<std::string> l{"low_up", "low_down", "high_up", "high_down"};
	return l;
}

/// Writes the clips as WAV files plus a manifest; returns the manifest path.
std::string write_sweep_corpus(const std::string &dir, const std::vector<SweepClip> &clips);

/// Smooth inputs in [0, 1]: 0.5 + two random sinusoids per channel, clipped.
Matrix smooth_input(std::mt19937_64 &rng, int frames, int channels,
                    double max_freq = 0.04);

/// Mean activation of every layer of the (quantized) model on one input.
std::vector<double> layer_activity(const LpRnnModel &model, const Matrix &x);

struct ModelDraw {
	LpRnnModel model;
	std::vector<Matrix> inputs;
	int attempts = 0;
};

struct ModelDrawConfig {
	int inputs = 16;
	int hidden = 32;
	int classes = 4;
	int frames = 40;
	int samples = 4;  ///< smooth inputs drawn per model
	double alpha = 0.9;
	double bias_offset = 0.1;
	double min_activity = 0.05;
	int max_attempts = 1000;
};

/**
 * Random 3-bit model plus smooth inputs. Draws are repeated until every
 * layer's mean activation is at least min_activity on every input.
 */
ModelDraw draw_active_model(std::mt19937_64 &rng, const ModelDrawConfig &cfg = {});

}  // namespace lpsnn
