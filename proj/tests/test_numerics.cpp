#include <gtest/gtest.h>

#include <random>

#include <lpsnn/numerics.hpp>

using namespace lpsnn;

TEST(SatAdd, Examples)
{
	EXPECT_EQ(sat_add({0, false}, 0), (FixedState{0, false}));
	EXPECT_EQ(sat_add({kStateLimit, false}, 1), (FixedState{kStateLimit, true}));
	EXPECT_EQ(sat_add({5000, false}, -12000), (FixedState{-7000, false}));
	EXPECT_EQ(sat_add({-kStateLimit, false}, -5), (FixedState{-kStateLimit, true}));
}

TEST(SatAdd, FlagIsSticky)
{
	FixedState a = sat_add({kStateLimit, false}, 10);
	a = sat_add(a, -100);
	EXPECT_TRUE(a.saturated);
	EXPECT_EQ(a.value, kStateLimit - 100);
}

TEST(SatAdd, CommutativeAndIdempotentAtRails)
{
	std::mt19937_64 rng(3);
	std::uniform_int_distribution<std::int64_t> d(-kStateLimit, kStateLimit);
	for (int n = 0; n < 2000; ++n) {
		std::int64_t a = d(rng), b = d(rng);
		EXPECT_EQ(sat_add({a, false}, b), sat_add({b, false}, a));
		FixedState hi = sat_add({kStateLimit, false}, std::abs(b) + 1);
		EXPECT_EQ(sat_add(hi, std::abs(b) + 1).value, kStateLimit);
		EXPECT_LE(std::abs(sat_add({a, false}, b).value), kStateLimit);
	}
}

TEST(DecayStep, Examples)
{
	EXPECT_EQ(decay_step(FixedState{0, false}, 7).value, 0);
	EXPECT_EQ(decay_step(FixedState{4096, false}, 1).value, 0);
	EXPECT_EQ(decay_step(FixedState{4096, false}, 4).value, 3072);
	EXPECT_DOUBLE_EQ(decay_step(4096.0, 4.0), 3072.0);
	EXPECT_DOUBLE_EQ(decay_step(3.5, kNoDecay), 3.5);
}

TEST(DecayStep, TruncatesTowardZero)
{
	EXPECT_EQ(decay_step(FixedState{7, false}, 4).value, 6);
	EXPECT_EQ(decay_step(FixedState{-7, false}, 4).value, -6);
	EXPECT_EQ(decay_step(FixedState{3, false}, 4).value, 3);
	EXPECT_EQ(decay_step(FixedState{7, false}, 4, DecayRounding::nearest).value, 5);
}

TEST(DecayStep, RejectsTauBelowOne) { EXPECT_THROW(decay_step(FixedState{5, false}, 0), ConfigError); }

TEST(DecayStep, ContractionProperty)
{
	std::mt19937_64 rng(11);
	std::uniform_int_distribution<std::int64_t> dx(-kStateLimit, kStateLimit);
	std::uniform_int_distribution<std::int64_t> dt(1, 5000);
	for (auto rounding : {DecayRounding::truncate, DecayRounding::nearest}) {
		for (int n = 0; n < 5000; ++n) {
			std::int64_t x = dx(rng), tau = dt(rng);
			std::int64_t y = decay_step(FixedState{x, false}, tau, rounding).value;
			EXPECT_LE(std::abs(y), std::abs(x));
			EXPECT_TRUE(y == 0 || (y > 0) == (x > 0));
		}
	}
	std::uniform_real_distribution<double> rx(-1e6, 1e6), rt(1.0, 1e4);
	for (int n = 0; n < 5000; ++n) {
		double x = rx(rng), y = decay_step(x, rt(rng));
		EXPECT_LE(std::abs(y), std::abs(x));
		EXPECT_TRUE(y == 0.0 || (y > 0) == (x > 0));
	}
}

TEST(DecayStep, SettlesInFiniteSteps)
{
	// Truncating x/tau leaves |x| < tau untouched, so iteration ends in that
	// dead zone (exactly 0 for tau == 1) and stays there.
	std::mt19937_64 rng(5);
	std::uniform_int_distribution<std::int64_t> dx(-kStateLimit, kStateLimit);
	std::uniform_int_distribution<std::int64_t> dt(1, 64);
	for (int n = 0; n < 200; ++n) {
		FixedState x{dx(rng), false};
		const std::int64_t tau = dt(rng);
		int steps = 0;
		while (std::abs(x.value) >= tau && steps < 100000) {
			x = decay_step(x, tau);
			++steps;
		}
		EXPECT_LT(std::abs(x.value), tau);
		EXPECT_EQ(decay_step(x, tau), x);
		if (tau == 1) EXPECT_EQ(x.value, 0);
	}
}

TEST(FixedTau, RoundsAndMapsInfinity)
{
	EXPECT_EQ(fixed_tau(949.12), 949);
	EXPECT_EQ(fixed_tau(2.5), 3);
	EXPECT_EQ(fixed_tau(kNoDecay), std::numeric_limits<std::int64_t>::max());
	EXPECT_EQ(decay_step(FixedState{kStateLimit, false}, fixed_tau(kNoDecay)).value, kStateLimit);
}

TEST(RoundHalfAway, Ties)
{
	EXPECT_EQ(round_half_away(0.5), 1.0);
	EXPECT_EQ(round_half_away(-0.5), -1.0);
	EXPECT_EQ(round_half_away(2.49), 2.0);
}
