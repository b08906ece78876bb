#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <lpsnn/numerics.hpp>

namespace lpsnn {

enum class LayerKind { input_lowpass, recurrent, output };

std::string to_string(LayerKind k);
LayerKind parse_layer_kind(const std::string &s);

/**
 * One low-pass layer. W_rec is empty (0x0) for feed-forward kinds. Masks are
 * empty unless the layer was pruned; a zero mask entry pins the weight at 0.
 */
struct LpRnnLayer {
	LayerKind kind = LayerKind::recurrent;
	Matrix W_in;
	Matrix W_rec;
	Vector b;
	double alpha = 0.9;
	Matrix mask_in;
	Matrix mask_rec;

	bool has_rec() const { return W_rec.size() > 0; }
	Eigen::Index size() const { return W_in.rows(); }
};

/// Per-feature min-max statistics computed on the training split.
struct FeatureNorm {
	Vector min;
	Vector max;
	bool empty() const { return min.size() == 0; }
};

struct LpRnnModel {
	std::vector<LpRnnLayer> layers;
	double T_ANN = 0.01;
	double clamp_ceiling = 1.0;
	int quant_bits = 3;  ///< 0 disables quantization
	double readout_fraction = 0.25;
	double logit_scale = 10.0;
	std::vector<std::string> labels;
	FeatureNorm norm;
	/// Feature-extraction settings the model was trained with (name -> value).
	std::map<std::string, double> frontend;

	Eigen::Index input_size() const { return layers.front().W_in.cols(); }
	Eigen::Index output_size() const { return layers.back().W_in.rows(); }
	void validate() const;
};

/// Per-sample time-major features (frames x features) and class label.
struct Sample {
	Matrix features;
	int label = 0;
};

Vector clamped_relu(const Vector &x, double ceiling);

Vector cell_forward(const Vector &y_prev, const Vector &x_t,
                    const LpRnnLayer &layer, double ceiling = 1.0);

struct ForwardResult {
	Vector logits;               ///< readout average of the output layer
	std::vector<Matrix> trace;   ///< per layer, frames x units
};

/// Runs the model on the weights as stored (see quantized_view).
ForwardResult forward_sequence(const LpRnnModel &model, const Matrix &features);

/// Quantization scale: max|W| / (2^(bits-1) - 1), 1.0 for an all-zero tensor.
double quant_scale(const Matrix &W, int bits = 3);

/// Integer levels round(W / scale) clipped to +-(2^(bits-1) - 1).
Matrix quant_levels(const Matrix &W, int bits = 3);

Matrix ste_quantize(const Matrix &W, int bits = 3);

/// Copy of the model whose weights are replaced by their quantized values
/// (identity when quant_bits == 0).
LpRnnModel quantized_view(const LpRnnModel &model);

/// Number of frames averaged by the readout.
Eigen::Index readout_frames(Eigen::Index frames, double fraction);

struct LayerGrads {
	Matrix W_in;
	Matrix W_rec;
	Vector b;
};

struct Gradients {
	double loss = 0.0;
	int correct = 0;
	std::vector<LayerGrads> layers;
};

/**
 * Mean cross-entropy over the batch and its exact BPTT gradients. With
 * quantize set the forward pass uses quantized weights and the gradient
 * passes straight through the quantizer.
 */
Gradients bptt_grads(const LpRnnModel &model, const std::vector<Sample> &batch,
                     bool quantize = true);

/// Loss only; same conventions as bptt_grads.
double batch_loss(const LpRnnModel &model, const std::vector<Sample> &batch,
                  bool quantize = true);

struct TrainConfig {
	int epochs = 30;
	double lr = 1e-3;
	int batch_size = 16;
	std::uint64_t seed = 1;
	double sparsity = 0.0;
	int prune_epoch = -1;  ///< epoch at which to prune; -1 means never
	bool verbose = false;
};

struct EpochStats {
	int epoch;
	double train_loss;
	double train_acc;
	double val_acc;
};

struct TrainResult {
	LpRnnModel model;
	std::vector<EpochStats> history;
	int best_epoch = -1;
};

/**
 * Adam on quantization-aware BPTT gradients. Returns the checkpoint with the
 * best validation accuracy, or best training accuracy when val is empty.
 */
TrainResult train(const LpRnnModel &model, const std::vector<Sample> &train_set,
                  const std::vector<Sample> &val_set, const TrainConfig &cfg);

LpRnnModel magnitude_prune(const LpRnnModel &model, double sparsity);

/// Accuracy of the (quantized) model on a sample set.
double accuracy(const LpRnnModel &model, const std::vector<Sample> &samples);

int argmax(const Vector &v);

struct InitConfig {
	int inputs = 40;
	int hidden = 64;
	int classes = 4;
	std::vector<double> alphas{0.9, 0.9, 0.9, 0.9};
	double bias_offset = 0.1;
	double gain = 1.0;
	std::uint64_t seed = 1;
};

/**
 * Four-layer stack: input low-pass, two recurrent, output. Weights
 * U(+-gain/sqrt(fan_in)), biases bias_offset + U(+-gain/sqrt(fan_in)).
 */
LpRnnModel init_model(const InitConfig &cfg);

void save_model(const std::string &path, const LpRnnModel &model);
LpRnnModel load_model(const std::string &path);

}  // namespace lpsnn
