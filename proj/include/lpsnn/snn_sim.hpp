#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <lpsnn/convert.hpp>

namespace lpsnn {

struct SimOptions {
	SimMode mode = SimMode::reference;
	/// (layer, neuron) pairs whose per-step states are recorded.
	std::vector<std::pair<int, int>> probes;
	bool record_raster = true;
	size_t max_saturation_log = 1000;
};

/// Per-step states of one probed neuron: columns u (sum over projections),
/// i, s, I_mem.
struct ProbeTrace {
	int layer = 0;
	int neuron = 0;
	Matrix states;
};

struct SaturationEvent {
	std::int64_t step;
	int layer;
	int neuron;
	std::string variable;
};

struct SimulationTrace {
	SimMode mode = SimMode::reference;
	std::int64_t duration = 0;
	std::vector<SpikeRaster> rasters;                ///< one per layer
	std::vector<std::vector<std::int64_t>> counts;   ///< spikes per neuron
	std::vector<Matrix> decoded;                     ///< frames x units, ANN units
	std::vector<ProbeTrace> probes;
	std::int64_t saturation_count = 0;
	std::vector<SaturationEvent> saturation_events;
	std::vector<double> layer_peaks;                 ///< peak |state| per layer
	double peak_state = 0.0;

	std::int64_t total_spikes() const;
};

/// Drives the encoder layer with analog features (frames x inputs).
SimulationTrace simulate(const SnnNetwork &net, const Matrix &features,
                         const SimOptions &opt = {});

/// Replays a recorded encoder raster instead of simulating the encoder layer.
SimulationTrace simulate(const SnnNetwork &net, const SpikeRaster &encoder_spikes,
                         const SimOptions &opt = {});

/// Decoded activation of one layer at every step, from its raster: the s
/// trace divided by the full-scale drive, low-passed with the layer's tau.
Matrix decode_layer(const SpikeRaster &raster, const SnnLayer &layer, SimMode mode);

/// Output-layer scores: decoded activation averaged over the final readout
/// window, in ANN units.
Vector readout(const SimulationTrace &trace, const SnnNetwork &net);

struct LayerComparison {
	double rel_mse = 0.0;
	double max_abs = 0.0;
	std::int64_t spikes = 0;
};

struct ComparisonReport {
	std::vector<LayerComparison> layers;
	double mean_rel_mse() const;
	double max_rel_mse() const;
};

ComparisonReport compare_activations(const std::vector<Matrix> &ann_trace,
                                     const SimulationTrace &snn_trace,
                                     const SnnNetwork &net);

/// Relative MSE sum((a - b)^2) / sum(a^2); 0 when both are zero.
double relative_mse(const Matrix &a, const Matrix &b);

}  // namespace lpsnn
