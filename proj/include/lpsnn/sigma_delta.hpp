#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include <lpsnn/numerics.hpp>

namespace lpsnn {

enum class SimMode { reference, fixed_point };

SimMode parse_sim_mode(const std::string &name);
std::string to_string(SimMode mode);

/**
 * Parameters of one population of sigma-delta neurons. Time constants are in
 * simulator steps; kNoDecay disables a leak. Threshold, w_fb and mem_floor
 * are in simulator state units except mem_floor, which is a multiple of w_fb.
 */
struct NeuronParams {
	double tau_mem = kNoDecay;
	double tau_s = 32.0;
	double tau_i = 1.0;
	double tau_u = 2.0;
	double threshold = 0.0;
	double w_fb = 1.0 / 32.0;
	double clamp_ceiling = 1.0;
	/// I_mem is clamped from below at -mem_floor * w_fb (0 disables).
	double mem_floor = 4.0;
	DecayRounding rounding = DecayRounding::truncate;

	/// Drive level that corresponds to the clamp ceiling: w_fb * tau_s.
	double full_scale() const { return w_fb * tau_s; }
	void validate() const;
};

/// Integer view of NeuronParams used by the fixed-point path.
struct FixedNeuronParams {
	std::int64_t tau_mem, tau_s, tau_i, tau_u;
	std::int64_t threshold, w_fb, floor;
	DecayRounding rounding;
};

FixedNeuronParams to_fixed(const NeuronParams &p);

struct NeuronState {
	double u = 0.0, i = 0.0, s = 0.0, mem = 0.0;
	bool spiked = false;
};

struct FixedNeuronState {
	FixedState u, i, s, mem;
	bool spiked = false;

	bool saturated() const
	{
		return u.saturated || i.saturated || s.saturated || mem.saturated;
	}
};

/**
 * Somatic part of one step, shared by neuron_step and the network simulator:
 * i integrates the dendritic drive, s decays and receives the feedback of the
 * previous step's spike, I_mem integrates i - s and is tested against the
 * threshold. Returns the new spike.
 */
bool soma_step(NeuronState &st, double drive, const NeuronParams &p);
bool soma_step(FixedNeuronState &st, std::int64_t drive,
               const FixedNeuronParams &p);

/**
 * One full neuron step: u decays by tau_u and adds both inputs, then the
 * soma step runs with drive u. Only one input is nonzero per layer role.
 */
std::pair<NeuronState, bool> neuron_step(NeuronState state,
                                         double weighted_spike_input,
                                         double analog_input,
                                         const NeuronParams &params);
std::pair<FixedNeuronState, bool> neuron_step(FixedNeuronState state,
                                              std::int64_t weighted_spike_input,
                                              double analog_input,
                                              const NeuronParams &params);

/**
 * Sparse spike record. Events are (timestep, neuron id), sorted by time then
 * id when produced by this library.
 */
struct SpikeRaster {
	std::int64_t duration = 0;
	int population = 0;
	double dt = 0.0;
	std::vector<std::pair<std::int64_t, int>> events;

	std::vector<std::int64_t> counts() const;
	void validate() const;
	friend bool operator==(const SpikeRaster &, const SpikeRaster &) = default;
};

void write_raster(std::ostream &os, const SpikeRaster &r);
SpikeRaster read_raster(std::istream &is);
void save_raster(const std::string &path, const SpikeRaster &r);
SpikeRaster load_raster(const std::string &path);

/// Per-step analog drive that makes a standalone neuron settle at i = v *
/// full_scale / clamp_ceiling for an input value v.
double analog_gain(const NeuronParams &p);

/**
 * Encodes every column of a time-major signal (frames x channels) with an
 * independent neuron, holding each frame for `oversample` steps.
 */
SpikeRaster encode_analog(const Matrix &signal, const NeuronParams &params,
                          int oversample, double dt = 0.0,
                          SimMode mode = SimMode::reference);

/**
 * Replays the s dynamics for a raster: steps x population matrix of s values
 * after each step. Feedback lands one step after the spike, as in the neuron.
 */
Matrix reconstruct(const SpikeRaster &raster, const NeuronParams &params,
                   SimMode mode = SimMode::reference);

}  // namespace lpsnn
