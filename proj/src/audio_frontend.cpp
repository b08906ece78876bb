#include <lpsnn/audio_frontend.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <numbers>
#include <set>
#include <sstream>
#include <thread>

#include <fftw3.h>
#include <openssl/evp.h>

namespace lpsnn {

namespace fs = std::filesystem;

void MelConfig::validate() const
{
	if (n_fft < 2 || (n_fft & (n_fft - 1)) != 0) {
		throw ConfigError("n_fft must be a power of two, got " + std::to_string(n_fft));
	}
	if (hop_length < 1 || n_mels < 1 || sample_rate < 1) {
		throw ConfigError("hop_length, n_mels and sample_rate must be positive");
	}
	if (!(f_min >= 0.0 && f_min < f_max) || f_max > sample_rate / 2.0) {
		throw ConfigError("mel band needs 0 <= f_min < f_max <= sample_rate / 2");
	}
	if (!(log_floor > 0.0)) {
		throw ConfigError("log_floor must be positive");
	}
}

std::string MelConfig::key() const
{
	std::ostringstream os;
	os << std::setprecision(17) << "sr=" << sample_rate << ";n_fft=" << n_fft
	   << ";hop=" << hop_length << ";n_mels=" << n_mels << ";fmin=" << f_min
	   << ";fmax=" << f_max << ";floor=" << log_floor << ";mel=htk;norm=sum";
	return os.str();
}

std::map<std::string, double> MelConfig::to_map() const
{
	return {{"sample_rate", sample_rate}, {"n_fft", n_fft}, {"hop_length", hop_length},
	        {"n_mels", n_mels},           {"f_min", f_min}, {"f_max", f_max},
	        {"log_floor", log_floor}};
}

MelConfig MelConfig::from_map(const std::map<std::string, double> &m)
{
	MelConfig c;
	auto get = [&](const char *k, double def) {
		auto it = m.find(k);
		return it == m.end() ? def : it->second;
	};
	c.sample_rate = static_cast<int>(get("sample_rate", c.sample_rate));
	c.n_fft = static_cast<int>(get("n_fft", c.n_fft));
	c.hop_length = static_cast<int>(get("hop_length", c.hop_length));
	c.n_mels = static_cast<int>(get("n_mels", c.n_mels));
	c.f_min = get("f_min", c.f_min);
	c.f_max = get("f_max", c.f_max);
	c.log_floor = get("log_floor", c.log_floor);
	c.validate();
	return c;
}

namespace {

std::uint32_t le32(const std::uint8_t *p)
{
	return p[0] | (p[1] << 8) | (p[2] << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}
std::uint16_t le16(const std::uint8_t *p) { return static_cast<std::uint16_t>(p[0] | (p[1] << 8)); }

void put32(std::vector<std::uint8_t> &b, std::uint32_t v)
{
	for (int i = 0; i < 4; ++i) b.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}
void put16(std::vector<std::uint8_t> &b, std::uint16_t v)
{
	b.push_back(static_cast<std::uint8_t>(v));
	b.push_back(static_cast<std::uint8_t>(v >> 8));
}

}  // namespace

std::vector<std::uint8_t> read_file_bytes(const std::string &path)
{
	std::ifstream is(path, std::ios::binary);
	if (!is) {
		throw DataError("cannot open " + path);
	}
	return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

AudioClip parse_wav(const std::vector<std::uint8_t> &b, const std::string &name)
{
	auto fail = [&](const std::string &why) -> DataError {
		return DataError(name + ": " + why);
	};
	if (b.size() < 12 || std::memcmp(b.data(), "RIFF", 4) != 0 ||
	    std::memcmp(b.data() + 8, "WAVE", 4) != 0) {
		throw fail("not a RIFF/WAVE file");
	}
	AudioClip clip;
	bool have_fmt = false;
	size_t pos = 12;
	while (pos + 8 <= b.size()) {
		const std::uint8_t *h = b.data() + pos;
		const std::uint32_t size = le32(h + 4);
		const size_t body = pos + 8;
		if (body + size > b.size()) {
			throw fail("truncated chunk");
		}
		if (std::memcmp(h, "fmt ", 4) == 0) {
			if (size < 16) throw fail("short fmt chunk");
			const std::uint16_t format = le16(b.data() + body);
			const std::uint16_t channels = le16(b.data() + body + 2);
			clip.sample_rate = static_cast<int>(le32(b.data() + body + 4));
			const std::uint16_t bits = le16(b.data() + body + 14);
			if (format != 1) throw fail("unsupported encoding (only PCM is accepted)");
			if (channels != 1) throw fail("expected mono, got " + std::to_string(channels) + " channels");
			if (bits != 16) throw fail("expected 16-bit samples, got " + std::to_string(bits));
			have_fmt = true;
		}
		else if (std::memcmp(h, "data", 4) == 0) {
			if (!have_fmt) throw fail("data chunk before fmt chunk");
			const size_t n = size / 2;
			clip.samples.resize(n);
			for (size_t i = 0; i < n; ++i) {
				auto v = static_cast<std::int16_t>(le16(b.data() + body + 2 * i));
				clip.samples[i] = static_cast<double>(v) / 32768.0;
			}
			return clip;
		}
		pos = body + size + (size & 1);
	}
	throw fail(have_fmt ? "missing data chunk" : "missing fmt chunk");
}

AudioClip load_wav(const std::string &path) { return parse_wav(read_file_bytes(path), path); }

std::vector<std::uint8_t> encode_wav(const AudioClip &clip)
{
	std::vector<std::uint8_t> b;
	const auto data_bytes = static_cast<std::uint32_t>(clip.samples.size() * 2);
	b.insert(b.end(), {'R', 'I', 'F', 'F'});
	put32(b, 36 + data_bytes);
	b.insert(b.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
	put32(b, 16);
	put16(b, 1);
	put16(b, 1);
	put32(b, static_cast<std::uint32_t>(clip.sample_rate));
	put32(b, static_cast<std::uint32_t>(clip.sample_rate * 2));
	put16(b, 2);
	put16(b, 16);
	b.insert(b.end(), {'d', 'a', 't', 'a'});
	put32(b, data_bytes);
	for (double s : clip.samples) {
		double v = std::clamp(std::round(s * 32768.0), -32768.0, 32767.0);
		put16(b, static_cast<std::uint16_t>(static_cast<std::int16_t>(v)));
	}
	return b;
}

void save_wav(const std::string &path, const AudioClip &clip)
{
	auto b = encode_wav(clip);
	std::ofstream os(path, std::ios::binary);
	if (!os) throw DataError("cannot write " + path);
	os.write(reinterpret_cast<const char *>(b.data()), static_cast<std::streamsize>(b.size()));
}

namespace {

std::mutex fftw_planner_mutex;

std::vector<std::complex<double>> run_dft(const std::vector<std::complex<double>> &x, int sign)
{
	const int n = static_cast<int>(x.size());
	if (n == 0 || (n & (n - 1)) != 0) {
		throw ConfigError("FFT length must be a power of two, got " + std::to_string(n));
	}
	std::vector<std::complex<double>> in(x), out(x.size());
	auto *pi = reinterpret_cast<fftw_complex *>(in.data());
	auto *po = reinterpret_cast<fftw_complex *>(out.data());
	fftw_plan plan;
	{
		std::lock_guard<std::mutex> lock(fftw_planner_mutex);
		plan = fftw_plan_dft_1d(n, pi, po, sign, FFTW_ESTIMATE);
	}
	fftw_execute(plan);
	{
		std::lock_guard<std::mutex> lock(fftw_planner_mutex);
		fftw_destroy_plan(plan);
	}
	return out;
}

}  // namespace

std::vector<std::complex<double>> fft(const std::vector<std::complex<double>> &x)
{
	return run_dft(x, FFTW_FORWARD);
}

std::vector<std::complex<double>> ifft(const std::vector<std::complex<double>> &X)
{
	auto out = run_dft(X, FFTW_BACKWARD);
	const double inv = 1.0 / static_cast<double>(X.size());
	for (auto &v : out) v *= inv;
	return out;
}

std::vector<double> hann_window(int n)
{
	std::vector<double> w(static_cast<size_t>(n));
	for (int i = 0; i < n; ++i) {
		w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / n);
	}
	return w;
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

namespace {

std::vector<double> mel_edges(const MelConfig &cfg)
{
	const double lo = hz_to_mel(cfg.f_min), hi = hz_to_mel(cfg.f_max);
	std::vector<double> e(static_cast<size_t>(cfg.n_mels + 2));
	for (size_t i = 0; i < e.size(); ++i) {
		e[i] = mel_to_hz(lo + (hi - lo) * static_cast<double>(i) / (cfg.n_mels + 1));
	}
	return e;
}

}  // namespace

std::vector<double> mel_centers(const MelConfig &cfg)
{
	auto e = mel_edges(cfg);
	return {e.begin() + 1, e.end() - 1};
}

Matrix mel_filterbank(const MelConfig &cfg)
{
	cfg.validate();
	const int bins = cfg.n_fft / 2 + 1;
	const auto e = mel_edges(cfg);
	Matrix fb = Matrix::Zero(cfg.n_mels, bins);
	for (int m = 0; m < cfg.n_mels; ++m) {
		const double l = e[m], c = e[m + 1], r = e[m + 2];
		for (int k = 0; k < bins; ++k) {
			const double f = static_cast<double>(k) * cfg.sample_rate / cfg.n_fft;
			fb(m, k) = std::max(0.0, std::min((f - l) / (c - l), (r - f) / (r - c)));
		}
		const double s = fb.row(m).sum();
		if (!(s > 0.0)) {
			throw ConfigError("mel filter " + std::to_string(m) +
			                  " covers no FFT bin; increase n_fft or reduce n_mels");
		}
		fb.row(m) /= s;
	}
	return fb;
}

Matrix stft_magnitude(const AudioClip &clip, const MelConfig &cfg)
{
	cfg.validate();
	const auto n = static_cast<size_t>(cfg.n_fft);
	if (clip.samples.size() < n) {
		throw DataError("clip of " + std::to_string(clip.samples.size()) +
		                " samples is shorter than n_fft");
	}
	const size_t frames = 1 + (clip.samples.size() - n) / static_cast<size_t>(cfg.hop_length);
	const auto w = hann_window(cfg.n_fft);
	Matrix out(static_cast<Eigen::Index>(frames), cfg.n_fft / 2 + 1);
	std::vector<std::complex<double>> buf(n);
	for (size_t f = 0; f < frames; ++f) {
		const size_t start = f * static_cast<size_t>(cfg.hop_length);
		for (size_t i = 0; i < n; ++i) buf[i] = clip.samples[start + i] * w[i];
		auto X = fft(buf);
		for (int k = 0; k <= cfg.n_fft / 2; ++k) {
			out(static_cast<Eigen::Index>(f), k) = std::abs(X[static_cast<size_t>(k)]);
		}
	}
	return out;
}

Matrix log_mel(const AudioClip &clip, const MelConfig &cfg)
{
	if (clip.sample_rate != cfg.sample_rate) {
		throw DataError("clip sample rate " + std::to_string(clip.sample_rate) +
		                " differs from the configured " + std::to_string(cfg.sample_rate));
	}
	Matrix mag = stft_magnitude(clip, cfg);
	Matrix mel = mag * mel_filterbank(cfg).transpose();
	return (mel.array() + cfg.log_floor).log().matrix();
}

FeatureNorm fit_normalization(const std::vector<Matrix> &train_features)
{
	if (train_features.empty()) {
		throw DataError("cannot fit normalization on an empty training split");
	}
	FeatureNorm n;
	const Eigen::Index d = train_features.front().cols();
	n.min = Vector::Constant(d, std::numeric_limits<double>::infinity());
	n.max = Vector::Constant(d, -std::numeric_limits<double>::infinity());
	for (const auto &m : train_features) {
		if (m.cols() != d) throw DataError("feature widths differ within the training split");
		n.min = n.min.cwiseMin(m.colwise().minCoeff().transpose());
		n.max = n.max.cwiseMax(m.colwise().maxCoeff().transpose());
	}
	return n;
}

Matrix apply_normalization(const Matrix &features, const FeatureNorm &norm)
{
	if (norm.min.size() != features.cols()) {
		throw DataError("normalization width does not match features");
	}
	Matrix out(features.rows(), features.cols());
	for (Eigen::Index j = 0; j < features.cols(); ++j) {
		const double span = norm.max(j) - norm.min(j);
		for (Eigen::Index t = 0; t < features.rows(); ++t) {
			const double v = span > 0.0 ? (features(t, j) - norm.min(j)) / span : 0.0;
			out(t, j) = std::clamp(v, 0.0, 1.0);
		}
	}
	return out;
}

Matrix mel_spectrogram(const AudioClip &clip, const MelConfig &cfg, const FeatureNorm &norm)
{
	Matrix raw = log_mel(clip, cfg);
	return norm.empty() ? raw : apply_normalization(raw, norm);
}

std::vector<ManifestEntry> read_manifest(const std::string &path)
{
	std::ifstream is(path);
	if (!is) {
		throw DataError("cannot open manifest " + path);
	}
	const fs::path base = fs::path(path).parent_path();
	std::vector<ManifestEntry> out;
	std::string line;
	int lineno = 0;
	while (std::getline(is, line)) {
		++lineno;
		if (!line.empty() && line.back() == '\r') line.pop_back();
		if (line.empty() || line[0] == '#') continue;
		if (lineno == 1 && line == "path,label,split") continue;
		std::vector<std::string> f;
		std::stringstream ss(line);
		std::string cell;
		while (std::getline(ss, cell, ',')) f.push_back(cell);
		if (f.size() != 3) {
			throw DataError(path + ":" + std::to_string(lineno) + ": expected path,label,split");
		}
		fs::path p(f[0]);
		if (p.is_relative()) p = base / p;
		out.push_back({p.string(), f[1], f[2]});
	}
	return out;
}

void write_manifest(const std::string &path, const std::vector<ManifestEntry> &entries)
{
	std::ofstream os(path);
	if (!os) throw DataError("cannot write " + path);
	os << "path,label,split\n";
	for (const auto &e : entries) os << e.path << ',' << e.label << ',' << e.split << '\n';
}

std::vector<std::string> manifest_labels(const std::vector<ManifestEntry> &entries)
{
	std::set<std::string> s;
	for (const auto &e : entries) s.insert(e.label);
	return {s.begin(), s.end()};
}

std::string sha256_hex(const std::vector<std::uint8_t> &bytes)
{
	unsigned char md[EVP_MAX_MD_SIZE];
	unsigned int len = 0;
	if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1) {
		throw NumericError("SHA-256 failed");
	}
	std::ostringstream os;
	for (unsigned int i = 0; i < len; ++i) {
		os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
	}
	return os.str();
}

FeatureCache::FeatureCache(std::string dir) : dir_(std::move(dir))
{
	fs::create_directories(dir_);
}

std::string FeatureCache::default_dir(const std::string &fallback)
{
	const char *env = std::getenv("LPSNN_CACHE_DIR");
	return env && *env ? std::string(env) : fallback;
}

Matrix FeatureCache::get(const std::string &wav_path, const MelConfig &cfg)
{
	const auto bytes = read_file_bytes(wav_path);
	const std::string k = cfg.key();
	const std::string cfg_hash = sha256_hex({k.begin(), k.end()}).substr(0, 16);
	const fs::path file = fs::path(dir_) / (sha256_hex(bytes) + "_" + cfg_hash + ".feat");
	if (fs::exists(file)) {
		std::ifstream is(file, std::ios::binary);
		char magic[4];
		std::int64_t rows = 0, cols = 0;
		is.read(magic, 4);
		is.read(reinterpret_cast<char *>(&rows), sizeof rows);
		is.read(reinterpret_cast<char *>(&cols), sizeof cols);
		if (is && std::memcmp(magic, "LPSF", 4) == 0 && rows >= 0 && cols >= 0) {
			Matrix m(rows, cols);
			is.read(reinterpret_cast<char *>(m.data()),
			        static_cast<std::streamsize>(sizeof(double) * m.size()));
			if (is) {
				++hits_;
				return m;
			}
		}
	}
	Matrix m = log_mel(parse_wav(bytes, wav_path), cfg);
	// Per-thread temp name: duplicate manifest rows may race on one entry.
	const fs::path tmp = file.string() + ".tmp" +
	                     std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id()));
	{
		std::ofstream os(tmp, std::ios::binary);
		if (!os) throw DataError("cannot write cache entry " + tmp.string());
		std::int64_t rows = m.rows(), cols = m.cols();
		os.write("LPSF", 4);
		os.write(reinterpret_cast<const char *>(&rows), sizeof rows);
		os.write(reinterpret_cast<const char *>(&cols), sizeof cols);
		os.write(reinterpret_cast<const char *>(m.data()),
		         static_cast<std::streamsize>(sizeof(double) * m.size()));
	}
	fs::rename(tmp, file);
	++misses_;
	return m;
}

}  // namespace lpsnn
