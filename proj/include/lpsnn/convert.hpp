#pragma once

#include <map>
#include <string>
#include <vector>

#include <lpsnn/lprnn.hpp>
#include <lpsnn/sigma_delta.hpp>

namespace lpsnn {

/// Raised when a mapped weight or bias exceeds the hardware range.
struct WeightRangeError : ConfigError {
	using ConfigError::ConfigError;
};

struct TimingConfig {
	double T_ANN = 0.01;
	int oversample = 100;

	double T_SNN() const { return T_ANN / oversample; }
	void validate() const;
};

/// Compiler knobs. Time constants in simulator steps.
struct CompileConfig {
	double tau_u_input = 2.0;  ///< u constant of the analog encoder projection
	double tau_i = 1.0;
	double tau_mem = kNoDecay;
	double tau_s = 32.0;
	double threshold = 0.0;
	double mem_floor = 4.0;
	double weight_gain = 64.0;  ///< hardware normalisation constant
	double weight_limit = 131072.0;
	double bias_limit = 8388608.0;
	bool round_taus = false;  ///< store integer-rounded time constants
	DecayRounding rounding = DecayRounding::truncate;
};

/// One weighted projection into a layer. source == -1 is the analog input.
struct Projection {
	int source = -1;
	double tau_u = 2.0;
	IntMatrix weights;
};

struct SnnLayer {
	std::string name;
	NeuronParams params;
	std::vector<Projection> projections;
	IntVector bias;
	double alpha = 0.0;
	double tau_act = 1.0;  ///< decoding low-pass, tau of the layer's alpha
	Eigen::Index size() const { return bias.size(); }
};

struct SnnNetwork {
	std::vector<SnnLayer> layers;
	double f = 1.0;
	TimingConfig timing;
	double safety_margin = 0.5;
	double clamp_ceiling = 1.0;
	double weight_gain = 64.0;
	double readout_fraction = 0.25;
	std::vector<double> probe_peaks;  ///< per layer, from f selection
	std::string source_model;
	std::vector<std::string> labels;
	FeatureNorm norm;
	std::map<std::string, double> frontend;

	Eigen::Index input_size() const;
	void validate() const;
};

double alpha_to_tau(double alpha, double T_s);

/// ANN time constant (seconds) to simulator steps.
double rescale_tau(double tau_ann, const TimingConfig &timing, bool round = false);

IntMatrix map_weights(const Matrix &W_ann, double f, double tau_u, double tau_i,
                      double gain = 64.0, double limit = 131072.0);
Matrix map_weights_real(const Matrix &W_ann, double f, double tau_u, double tau_i,
                        double gain = 64.0);
IntVector map_bias(const Vector &b_ann, double f, double tau_i,
                   double limit = 8388608.0);

SnnNetwork compile(const LpRnnModel &model, const TimingConfig &timing, double f,
                   const CompileConfig &cfg = {});

struct ScaleSelection {
	double f = 0.0;
	double peak = 0.0;  ///< peak |state| at the selected f
	int grid_index = 0; ///< f = 2^(grid_index / grid_steps)
	std::vector<double> layer_peaks;
};

struct ScaleSearchConfig {
	double safety_margin = 0.5;
	int grid_steps = 8;  ///< grid points per octave
	int min_index = 0;
	int max_index = 320;  ///< f <= 2^40 with 8 steps per octave
};

ScaleSelection select_scale_factor(const LpRnnModel &model,
                                   const std::vector<Matrix> &probe_inputs,
                                   const TimingConfig &timing,
                                   const CompileConfig &cfg = {},
                                   const ScaleSearchConfig &search = {});

void save_network(const std::string &path, const SnnNetwork &net);
SnnNetwork load_network(const std::string &path);

/// Human-readable per-layer summary: time constants, weight histograms, peaks.
std::string compile_report(const SnnNetwork &net);

}  // namespace lpsnn
