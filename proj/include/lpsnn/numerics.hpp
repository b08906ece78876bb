#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace lpsnn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using IntMatrix = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>;
using IntVector = Eigen::Matrix<std::int64_t, Eigen::Dynamic, 1>;

/// Semantic state range of every compartment variable (24 bit signed).
inline constexpr std::int64_t kStateLimit = std::int64_t{1} << 23;

/// Decay constant meaning "no leak".
inline constexpr double kNoDecay = std::numeric_limits<double>::infinity();

/// Error classes shared by all modules; the CLI maps them to exit codes.
struct ConfigError : std::runtime_error {
	using std::runtime_error::runtime_error;
};
struct DataError : std::runtime_error {
	using std::runtime_error::runtime_error;
};
struct NumericError : std::runtime_error {
	using std::runtime_error::runtime_error;
};

/**
 * A saturating 24-bit state value. The flag is sticky: once any operation
 * clipped the value it stays set.
 */
struct FixedState {
	std::int64_t value = 0;
	bool saturated = false;

	friend bool operator==(const FixedState &, const FixedState &) = default;
};

/// Rounding applied to the quotient x/tau in fixed-point decay.
enum class DecayRounding { truncate, nearest };

FixedState sat_add(FixedState a, std::int64_t b);

/// Reference decay: x - x/tau. An infinite tau leaves x unchanged.
double decay_step(double x, double tau);

/**
 * Fixed-point decay: x - q(x/tau) with q truncating toward zero (default) or
 * rounding half away from zero. tau must be >= 1; tau == 0 is rejected.
 */
FixedState decay_step(FixedState x, std::int64_t tau,
                      DecayRounding rounding = DecayRounding::truncate);

/// Converts a real decay constant to the integer used in fixed-point mode.
/// Infinite maps to the largest representable integer (a null decay).
std::int64_t fixed_tau(double tau);

/// Round half away from zero.
inline double round_half_away(double x) { return std::round(x); }

}  // namespace lpsnn
