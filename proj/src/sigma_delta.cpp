#include <lpsnn/sigma_delta.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace lpsnn {

SimMode parse_sim_mode(const std::string &name)
{
	if (name == "reference") {
		return SimMode::reference;
	}
	if (name == "fixed" || name == "fixed_point") {
		return SimMode::fixed_point;
	}
	throw ConfigError("unknown simulation mode '" + name +
	                  "' (expected reference or fixed_point)");
}

std::string to_string(SimMode mode)
{
	return mode == SimMode::reference ? "reference" : "fixed_point";
}

void NeuronParams::validate() const
{
	for (double t : {tau_mem, tau_s, tau_i, tau_u}) {
		if (!(t >= 1.0)) {
			throw ConfigError("neuron decay constants must be >= 1 step");
		}
	}
	if (!(w_fb > 0.0) || !(threshold >= 0.0) || !(clamp_ceiling > 0.0) ||
	    !(mem_floor >= 0.0)) {
		throw ConfigError(
		    "neuron parameters need w_fb > 0, threshold >= 0, clamp_ceiling > 0");
	}
}

FixedNeuronParams to_fixed(const NeuronParams &p)
{
	FixedNeuronParams f{};
	f.tau_mem = fixed_tau(p.tau_mem);
	f.tau_s = fixed_tau(p.tau_s);
	f.tau_i = fixed_tau(p.tau_i);
	f.tau_u = fixed_tau(p.tau_u);
	f.threshold = std::llround(p.threshold);
	f.w_fb = std::llround(p.w_fb);
	f.floor = std::llround(p.mem_floor * p.w_fb);
	f.rounding = p.rounding;
	if (f.w_fb < 1) {
		throw ConfigError("w_fb rounds to zero in fixed-point mode");
	}
	return f;
}

bool soma_step(NeuronState &st, double drive, const NeuronParams &p)
{
	st.i = decay_step(st.i, p.tau_i) + drive;
	st.s = decay_step(st.s, p.tau_s) + (st.spiked ? p.w_fb : 0.0);
	st.mem = decay_step(st.mem, p.tau_mem) + st.i - st.s;
	if (p.mem_floor > 0.0) {
		st.mem = std::max(st.mem, -p.mem_floor * p.w_fb);
	}
	st.spiked = st.mem > p.threshold;
	if (st.spiked) {
		st.mem = 0.0;
	}
	return st.spiked;
}

bool soma_step(FixedNeuronState &st, std::int64_t drive,
               const FixedNeuronParams &p)
{
	st.i = sat_add(decay_step(st.i, p.tau_i, p.rounding), drive);
	st.s = sat_add(decay_step(st.s, p.tau_s, p.rounding),
	               st.spiked ? p.w_fb : 0);
	st.mem = sat_add(decay_step(st.mem, p.tau_mem, p.rounding),
	                 st.i.value - st.s.value);
	if (p.floor > 0 && st.mem.value < -p.floor) {
		st.mem.value = -p.floor;
	}
	st.spiked = st.mem.value > p.threshold;
	if (st.spiked) {
		st.mem.value = 0;
	}
	return st.spiked;
}

std::pair<NeuronState, bool> neuron_step(NeuronState state,
                                         double weighted_spike_input,
                                         double analog_input,
                                         const NeuronParams &params)
{
	state.u = decay_step(state.u, params.tau_u) + weighted_spike_input +
	          analog_input;
	bool spike = soma_step(state, state.u, params);
	return {state, spike};
}

std::pair<FixedNeuronState, bool> neuron_step(FixedNeuronState state,
                                              std::int64_t weighted_spike_input,
                                              double analog_input,
                                              const NeuronParams &params)
{
	FixedNeuronParams fp = to_fixed(params);
	state.u = sat_add(decay_step(state.u, fp.tau_u, fp.rounding),
	                  weighted_spike_input + std::llround(analog_input));
	bool spike = soma_step(state, state.u.value, fp);
	return {state, spike};
}

std::vector<std::int64_t> SpikeRaster::counts() const
{
	std::vector<std::int64_t> c(static_cast<size_t>(population), 0);
	for (const auto &[t, n] : events) {
		c.at(static_cast<size_t>(n))++;
	}
	return c;
}

void SpikeRaster::validate() const
{
	for (const auto &[t, n] : events) {
		if (t < 0 || t >= duration || n < 0 || n >= population) {
			throw DataError("raster event (" + std::to_string(t) + "," +
			                std::to_string(n) + ") outside duration " +
			                std::to_string(duration) + " / population " +
			                std::to_string(population));
		}
	}
}

void write_raster(std::ostream &os, const SpikeRaster &r)
{
	os.precision(17);
	os << "# duration=" << r.duration << " population=" << r.population
	   << " dt=" << r.dt << '\n';
	for (const auto &[t, n] : r.events) {
		os << t << ',' << n << '\n';
	}
}

SpikeRaster read_raster(std::istream &is)
{
	SpikeRaster r;
	std::string line;
	if (!std::getline(is, line) || line.rfind("# ", 0) != 0) {
		throw DataError("raster: missing header line");
	}
	std::istringstream hs(line.substr(2));
	std::string kv;
	bool got_d = false, got_p = false;
	while (hs >> kv) {
		auto eq = kv.find('=');
		if (eq == std::string::npos) {
			throw DataError("raster: malformed header field '" + kv + "'");
		}
		std::string key = kv.substr(0, eq), val = kv.substr(eq + 1);
		if (key == "duration") {
			r.duration = std::stoll(val);
			got_d = true;
		}
		else if (key == "population") {
			r.population = std::stoi(val);
			got_p = true;
		}
		else if (key == "dt") {
			r.dt = std::stod(val);
		}
	}
	if (!got_d || !got_p) {
		throw DataError("raster: header needs duration and population");
	}
	while (std::getline(is, line)) {
		if (line.empty() || line[0] == '#') {
			continue;
		}
		auto comma = line.find(',');
		if (comma == std::string::npos) {
			throw DataError("raster: malformed event line '" + line + "'");
		}
		r.events.emplace_back(std::stoll(line.substr(0, comma)),
		                      std::stoi(line.substr(comma + 1)));
	}
	r.validate();
	return r;
}

void save_raster(const std::string &path, const SpikeRaster &r)
{
	std::ofstream os(path);
	if (!os) {
		throw DataError("cannot write " + path);
	}
	write_raster(os, r);
}

SpikeRaster load_raster(const std::string &path)
{
	std::ifstream is(path);
	if (!is) {
		throw DataError("cannot open " + path);
	}
	return read_raster(is);
}

double analog_gain(const NeuronParams &p)
{
	return p.full_scale() / (p.clamp_ceiling * p.tau_u * p.tau_i);
}

SpikeRaster encode_analog(const Matrix &signal, const NeuronParams &params,
                          int oversample, double dt, SimMode mode)
{
	params.validate();
	if (oversample < 1) {
		throw ConfigError("oversample must be a positive integer");
	}
	if (signal.size() > 0 && signal.minCoeff() < 0.0) {
		throw DataError("encode_analog: signal has negative values");
	}
	const int channels = static_cast<int>(signal.cols());
	SpikeRaster r;
	r.duration = signal.rows() * oversample;
	r.population = channels;
	r.dt = dt;
	const double gain = analog_gain(params);
	std::vector<NeuronState> ref(static_cast<size_t>(channels));
	std::vector<FixedNeuronState> fix(static_cast<size_t>(channels));
	for (Eigen::Index f = 0; f < signal.rows(); ++f) {
		for (int k = 0; k < oversample; ++k) {
			std::int64_t t = f * oversample + k;
			for (int n = 0; n < channels; ++n) {
				double drive = gain * signal(f, n);
				bool spike;
				if (mode == SimMode::reference) {
					std::tie(ref[n], spike) = neuron_step(ref[n], 0.0, drive, params);
				}
				else {
					std::tie(fix[n], spike) = neuron_step(fix[n], 0, drive, params);
				}
				if (spike) {
					r.events.emplace_back(t, n);
				}
			}
		}
	}
	return r;
}

Matrix reconstruct(const SpikeRaster &raster, const NeuronParams &params,
                   SimMode mode)
{
	raster.validate();
	Matrix out = Matrix::Zero(raster.duration, raster.population);
	std::vector<char> spiked(static_cast<size_t>(raster.population), 0);
	std::vector<char> next(spiked.size(), 0);
	size_t e = 0;
	auto events = raster.events;
	std::sort(events.begin(), events.end());
	if (mode == SimMode::reference) {
		std::vector<double> s(spiked.size(), 0.0);
		for (std::int64_t t = 0; t < raster.duration; ++t) {
			std::fill(next.begin(), next.end(), 0);
			for (; e < events.size() && events[e].first == t; ++e) {
				next[events[e].second] = 1;
			}
			for (int n = 0; n < raster.population; ++n) {
				s[n] = decay_step(s[n], params.tau_s) + (spiked[n] ? params.w_fb : 0.0);
				out(t, n) = s[n];
			}
			spiked.swap(next);
		}
	}
	else {
		FixedNeuronParams fp = to_fixed(params);
		std::vector<FixedState> s(spiked.size());
		for (std::int64_t t = 0; t < raster.duration; ++t) {
			std::fill(next.begin(), next.end(), 0);
			for (; e < events.size() && events[e].first == t; ++e) {
				next[events[e].second] = 1;
			}
			for (int n = 0; n < raster.population; ++n) {
				s[n] = sat_add(decay_step(s[n], fp.tau_s, fp.rounding),
				               spiked[n] ? fp.w_fb : 0);
				out(t, n) = static_cast<double>(s[n].value);
			}
			spiked.swap(next);
		}
	}
	return out;
}

}  // namespace lpsnn
