#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>

#include <lpsnn/audio_frontend.hpp>

using namespace lpsnn;
namespace fs = std::filesystem;

namespace {

std::vector<std::uint8_t> pcm16_wav(const std::vector<std::int16_t> &s, int channels = 1, int rate = 16000,
                                    int bits = 16, int format = 1)
{
	std::vector<std::uint8_t> b;
	auto put = [&](std::uint32_t v, int n) {
		for (int i = 0; i < n; ++i) b.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
	};
	auto tag = [&](const char *t) { b.insert(b.end(), t, t + 4); };
	const auto data = static_cast<std::uint32_t>(s.size() * 2);
	tag("RIFF");
	put(36 + data, 4);
	tag("WAVE");
	tag("fmt ");
	put(16, 4);
	put(static_cast<std::uint32_t>(format), 2);
	put(static_cast<std::uint32_t>(channels), 2);
	put(static_cast<std::uint32_t>(rate), 4);
	put(static_cast<std::uint32_t>(rate * channels * bits / 8), 4);
	put(static_cast<std::uint32_t>(channels * bits / 8), 2);
	put(static_cast<std::uint32_t>(bits), 2);
	tag("data");
	put(data, 4);
	for (auto v : s) put(static_cast<std::uint16_t>(v), 2);
	return b;
}

AudioClip sine(double hz, double seconds = 0.25, int rate = 16000)
{
	AudioClip c;
	c.sample_rate = rate;
	c.samples.resize(static_cast<size_t>(seconds * rate));
	for (size_t n = 0; n < c.samples.size(); ++n) {
		c.samples[n] = 0.5 * std::sin(2.0 * std::numbers::pi * hz * static_cast<double>(n) / rate);
	}
	return c;
}

fs::path scratch(const std::string &name)
{
	fs::path p = fs::temp_directory_path() / ("lpsnn_af_" + name);
	fs::remove_all(p);
	fs::create_directories(p);
	return p;
}

}  // namespace

TEST(Wav, SilenceAndSquareWave)
{
	AudioClip z = parse_wav(pcm16_wav(std::vector<std::int16_t>(100, 0)));
	EXPECT_EQ(z.samples.size(), 100u);
	for (double v : z.samples) EXPECT_EQ(v, 0.0);

	std::vector<std::int16_t> sq;
	for (int i = 0; i < 64; ++i) sq.push_back(i % 2 ? -32767 : 32767);
	AudioClip c = parse_wav(pcm16_wav(sq));
	for (int i = 0; i < 64; ++i) EXPECT_EQ(c.samples[static_cast<size_t>(i)], (i % 2 ? -1.0 : 1.0) * 32767.0 / 32768.0);
}

TEST(Wav, RejectsUnsupported)
{
	EXPECT_THROW(parse_wav(pcm16_wav({1, 2, 3, 4}, 2)), DataError);
	EXPECT_THROW(parse_wav(pcm16_wav({1, 2}, 1, 16000, 16, 3)), DataError);
	EXPECT_THROW(parse_wav(pcm16_wav({1, 2}, 1, 16000, 8)), DataError);
	auto truncated = pcm16_wav({1, 2, 3, 4});
	truncated.resize(30);
	EXPECT_THROW(parse_wav(truncated), DataError);
	EXPECT_THROW(parse_wav({'n', 'o', 'p', 'e'}), DataError);
}

TEST(Wav, EncodeParseRoundTrip)
{
	AudioClip c = sine(440.0, 0.05);
	AudioClip r = parse_wav(encode_wav(c));
	ASSERT_EQ(r.samples.size(), c.samples.size());
	for (size_t i = 0; i < c.samples.size(); ++i) EXPECT_NEAR(r.samples[i], c.samples[i], 1.0 / 32768.0);
}

TEST(Fft, ImpulseAndRoundTrip)
{
	std::vector<std::complex<double>> imp(64, 0.0);
	imp[0] = 1.0;
	for (auto v : fft(imp)) EXPECT_NEAR(std::abs(v - std::complex<double>(1.0, 0.0)), 0.0, 1e-15);

	std::mt19937_64 rng(1);
	std::normal_distribution<double> n;
	for (int len = 2; len <= 4096; len *= 2) {
		std::vector<std::complex<double>> x(static_cast<size_t>(len));
		for (auto &v : x) v = {n(rng), n(rng)};
		auto y = ifft(fft(x));
		double num = 0.0, den = 0.0;
		for (size_t i = 0; i < x.size(); ++i) {
			num += std::norm(y[i] - x[i]);
			den += std::norm(x[i]);
		}
		EXPECT_LT(std::sqrt(num / den), 1e-10) << len;
	}
	EXPECT_THROW(fft(std::vector<std::complex<double>>(6)), ConfigError);
}

TEST(Fft, MatchesDirectDft)
{
	std::mt19937_64 rng(2);
	std::normal_distribution<double> n;
	std::vector<std::complex<double>> x(32);
	for (auto &v : x) v = {n(rng), 0.0};
	auto X = fft(x);
	for (size_t k = 0; k < 32; ++k) {
		std::complex<double> s = 0.0;
		for (size_t j = 0; j < 32; ++j) s += x[j] * std::polar(1.0, -2.0 * std::numbers::pi * double(j * k) / 32.0);
		EXPECT_LT(std::abs(s - X[k]), 1e-12);
	}
}

TEST(Mel, FilterbankRowsNonnegativeUnitSum)
{
	for (MelConfig cfg : {MelConfig{}, MelConfig{16000, 1024, 160, 64, 50.0, 7600.0, 1e-6}}) {
		Matrix fb = mel_filterbank(cfg);
		EXPECT_GE(fb.minCoeff(), 0.0);
		for (Eigen::Index m = 0; m < fb.rows(); ++m) EXPECT_NEAR(fb.row(m).sum(), 1.0, 1e-12);
	}
	EXPECT_NEAR(mel_to_hz(hz_to_mel(1234.5)), 1234.5, 1e-9);
	EXPECT_NEAR(hz_to_mel(1000.0), 2595.0 * std::log10(1.0 + 1000.0 / 700.0), 1e-12);
}

TEST(Mel, SineAtCentreLandsInItsBin)
{
	MelConfig cfg{16000, 1024, 160, 64, 50.0, 7600.0, 1e-6};
	Matrix fb = mel_filterbank(cfg);
	auto centres = mel_centers(cfg);
	for (int k = 0; k < cfg.n_mels; ++k) {
		Matrix spec = stft_magnitude(sine(centres[static_cast<size_t>(k)]), cfg);
		Vector energy = (spec.array().square().matrix() * fb.transpose()).colwise().mean().transpose();
		Eigen::Index best = 0;
		energy.maxCoeff(&best);
		EXPECT_EQ(best, k);
	}
}

TEST(Mel, ParsevalBeforeMel)
{
	MelConfig cfg;
	std::mt19937_64 rng(3);
	std::uniform_real_distribution<double> u(-1.0, 1.0);
	AudioClip c;
	c.samples.resize(4000);
	for (auto &v : c.samples) v = u(rng);
	Matrix mag = stft_magnitude(c, cfg);
	auto w = hann_window(cfg.n_fft);
	const int N = cfg.n_fft;
	for (Eigen::Index f = 0; f < mag.rows(); ++f) {
		double time = 0.0;
		for (int i = 0; i < N; ++i) {
			double v = c.samples[static_cast<size_t>(f * cfg.hop_length + i)] * w[static_cast<size_t>(i)];
			time += v * v;
		}
		double spec = mag(f, 0) * mag(f, 0) + mag(f, N / 2) * mag(f, N / 2);
		for (int k = 1; k < N / 2; ++k) spec += 2.0 * mag(f, k) * mag(f, k);
		EXPECT_NEAR(spec / N, time, 1e-6 * time);
	}
}

TEST(Mel, SilenceNormalizesToZero)
{
	MelConfig cfg;
	AudioClip quiet;
	quiet.samples.assign(4000, 0.0);
	Matrix lm = log_mel(quiet, cfg);
	EXPECT_NEAR(lm.maxCoeff(), std::log(cfg.log_floor), 1e-12);
	EXPECT_NEAR(lm.minCoeff(), std::log(cfg.log_floor), 1e-12);
	FeatureNorm norm = fit_normalization({lm, log_mel(sine(1000.0), cfg)});
	Matrix x = apply_normalization(lm, norm);
	EXPECT_TRUE(x.isZero());
}

TEST(Mel, NormalizationMapsTrainingRangeToUnit)
{
	MelConfig cfg;
	std::vector<Matrix> train{log_mel(sine(300.0), cfg), log_mel(sine(3000.0), cfg)};
	FeatureNorm norm = fit_normalization(train);
	for (const auto &m : train) {
		Matrix x = apply_normalization(m, norm);
		EXPECT_GE(x.minCoeff(), 0.0);
		EXPECT_LE(x.maxCoeff(), 1.0);
	}
	Matrix loud = apply_normalization(log_mel(sine(300.0), cfg).array() + 5.0, norm);
	EXPECT_LE(loud.maxCoeff(), 1.0);
	EXPECT_THROW(fit_normalization({}), DataError);
}

TEST(Mel, RejectsShortClipAndBadConfig)
{
	MelConfig cfg;
	AudioClip c;
	c.samples.assign(100, 0.0);
	EXPECT_THROW(log_mel(c, cfg), DataError);
	MelConfig bad = cfg;
	bad.n_fft = 500;
	EXPECT_THROW(bad.validate(), ConfigError);
	bad = cfg;
	bad.f_max = 9000.0;
	EXPECT_THROW(bad.validate(), ConfigError);
}

TEST(Mel, DeterministicFromBytes)
{
	MelConfig cfg;
	auto bytes = encode_wav(sine(777.0));
	Matrix a = log_mel(parse_wav(bytes), cfg), b = log_mel(parse_wav(bytes), cfg);
	EXPECT_EQ(a, b);
	EXPECT_EQ(MelConfig::from_map(cfg.to_map()).key(), cfg.key());
}

TEST(Manifest, ReadWriteAndRelativePaths)
{
	fs::path dir = scratch("manifest");
	std::vector<ManifestEntry> e{{"a.wav", "yes", "train"}, {"sub/b.wav", "no", "test"}};
	write_manifest((dir / "m.csv").string(), e);
	auto r = read_manifest((dir / "m.csv").string());
	ASSERT_EQ(r.size(), 2u);
	EXPECT_EQ(fs::path(r[1].path), dir / "sub/b.wav");
	EXPECT_EQ(r[0].label, "yes");
	EXPECT_EQ(manifest_labels(r), (std::vector<std::string>{"no", "yes"}));
	std::ofstream(dir / "bad.csv") << "path,label,split\nonly_two,fields\n";
	EXPECT_THROW(read_manifest((dir / "bad.csv").string()), DataError);
	EXPECT_THROW(read_manifest((dir / "missing.csv").string()), DataError);
}

TEST(Cache, HitAfterMissAndKeyedByConfig)
{
	fs::path dir = scratch("cache");
	const std::string wav = (dir / "x.wav").string();
	save_wav(wav, sine(500.0));
	MelConfig cfg;
	FeatureCache cache((dir / "c").string());
	Matrix a = cache.get(wav, cfg);
	Matrix b = cache.get(wav, cfg);
	EXPECT_EQ(a, b);
	EXPECT_EQ(cache.misses(), 1);
	EXPECT_EQ(cache.hits(), 1);
	MelConfig other = cfg;
	other.n_mels = 20;
	EXPECT_EQ(cache.get(wav, other).cols(), 20);
	EXPECT_EQ(cache.misses(), 2);
	// A fresh cache object reuses files on disk.
	FeatureCache again((dir / "c").string());
	EXPECT_EQ(again.get(wav, cfg), a);
	EXPECT_EQ(again.hits(), 1);
	EXPECT_EQ(sha256_hex({'a', 'b', 'c'}), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Cache, DirectoryFromEnvironment)
{
	::setenv("LPSNN_CACHE_DIR", "/tmp/lpsnn_env_cache", 1);
	EXPECT_EQ(FeatureCache::default_dir("fallback"), "/tmp/lpsnn_env_cache");
	::unsetenv("LPSNN_CACHE_DIR");
	EXPECT_EQ(FeatureCache::default_dir("fallback"), "fallback");
}
