#pragma once

#include <atomic>
#include <complex>
#include <map>
#include <cstdint>
#include <string>
#include <vector>

#include <lpsnn/lprnn.hpp>

namespace lpsnn {

struct AudioClip {
	std::vector<double> samples;
	int sample_rate = 16000;
};

struct MelConfig {
	int sample_rate = 16000;
	int n_fft = 512;
	int hop_length = 160;
	int n_mels = 40;
	double f_min = 20.0;
	double f_max = 8000.0;
	double log_floor = 1e-6;

	void validate() const;
	/// Stable text form used for cache keys and manifests.
	std::string key() const;
	std::map<std::string, double> to_map() const;
	static MelConfig from_map(const std::map<std::string, double> &m);
};

/// 16-bit PCM mono only.
AudioClip load_wav(const std::string &path);
AudioClip parse_wav(const std::vector<std::uint8_t> &bytes, const std::string &name = "<memory>");
void save_wav(const std::string &path, const AudioClip &clip);
std::vector<std::uint8_t> encode_wav(const AudioClip &clip);

/// Forward DFT (unnormalised) of a power-of-two length vector.
std::vector<std::complex<double>> fft(const std::vector<std::complex<double>> &x);
/// Inverse DFT including the 1/n factor.
std::vector<std::complex<double>> ifft(const std::vector<std::complex<double>> &X);

std::vector<double> hann_window(int n);

double hz_to_mel(double hz);
double mel_to_hz(double mel);

/// Centre frequencies (Hz) of the n_mels triangular filters.
std::vector<double> mel_centers(const MelConfig &cfg);

/// n_mels x (n_fft/2 + 1) filterbank; every row is scaled to sum to 1.
Matrix mel_filterbank(const MelConfig &cfg);

/// One-sided magnitude STFT, frames x (n_fft/2 + 1). Frames start at
/// multiples of hop_length; no padding.
Matrix stft_magnitude(const AudioClip &clip, const MelConfig &cfg);

/// log(mel energy + log_floor), frames x n_mels, before normalization.
Matrix log_mel(const AudioClip &clip, const MelConfig &cfg);

FeatureNorm fit_normalization(const std::vector<Matrix> &train_features);
Matrix apply_normalization(const Matrix &features, const FeatureNorm &norm);

/// Full pipeline; normalizes with `norm` when it is non-empty.
Matrix mel_spectrogram(const AudioClip &clip, const MelConfig &cfg,
                       const FeatureNorm &norm = {});

struct ManifestEntry {
	std::string path;
	std::string label;
	std::string split;
};

/// Reads `path,label,split` rows; an optional header row is skipped.
/// Relative paths are resolved against the manifest's directory.
std::vector<ManifestEntry> read_manifest(const std::string &path);
void write_manifest(const std::string &path, const std::vector<ManifestEntry> &entries);

/// Sorted unique labels of a manifest.
std::vector<std::string> manifest_labels(const std::vector<ManifestEntry> &entries);

std::string sha256_hex(const std::vector<std::uint8_t> &bytes);
std::vector<std::uint8_t> read_file_bytes(const std::string &path);

/**
 * On-disk cache of raw log-mel features keyed by (file hash, MelConfig key).
 */
class FeatureCache {
public:
	explicit FeatureCache(std::string dir);

	/// Cache directory: LPSNN_CACHE_DIR if set, else `fallback`.
	static std::string default_dir(const std::string &fallback);

	/// Returns raw log-mel features, computing and storing them on a miss.
	Matrix get(const std::string &wav_path, const MelConfig &cfg);

	int hits() const { return hits_; }
	int misses() const { return misses_; }
	const std::string &dir() const { return dir_; }

private:
	std::string dir_;
	std::atomic<int> hits_{0};
	std::atomic<int> misses_{0};
};

}  // namespace lpsnn
