#include <lpsnn/numerics.hpp>

#include <cmath>
#include <cstdlib>

namespace lpsnn {

FixedState sat_add(FixedState a, std::int64_t b)
{
	std::int64_t v = a.value + b;
	if (v > kStateLimit) {
		return {kStateLimit, true};
	}
	if (v < -kStateLimit) {
		return {-kStateLimit, true};
	}
	return {v, a.saturated};
}

double decay_step(double x, double tau)
{
	if (std::isinf(tau)) {
		return x;
	}
	return x - x / tau;
}

FixedState decay_step(FixedState x, std::int64_t tau, DecayRounding rounding)
{
	if (tau < 1) {
		throw ConfigError("fixed-point decay constant must be >= 1, got " +
		                  std::to_string(tau));
	}
	std::int64_t q;
	if (rounding == DecayRounding::truncate) {
		q = x.value / tau;  // C++ division truncates toward zero
	}
	else {
		std::int64_t mag = (std::llabs(x.value) * 2 + tau) / (2 * tau);
		q = x.value < 0 ? -mag : mag;
	}
	return {x.value - q, x.saturated};
}

std::int64_t fixed_tau(double tau)
{
	if (std::isinf(tau)) {
		return std::numeric_limits<std::int64_t>::max();
	}
	if (!(tau >= 0.5)) {
		throw ConfigError("decay constant below one simulator step: " +
		                  std::to_string(tau));
	}
	return std::llround(tau);
}

}  // namespace lpsnn
