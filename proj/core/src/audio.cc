// Copyright 2026 The sadsid Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "sadsid/audio.h"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstring>
#include <map>
#include <numbers>

#include "sadsid/error.h"
#include "sadsid/io.h"
#include "sadsid/parallel.h"
#include "sadsid/rng.h"
#include "sadsid/segments.h"

namespace sadsid {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

uint32_t le32(std::span<const uint8_t> b, size_t at) {
  return uint32_t{b[at]} | uint32_t{b[at + 1]} << 8 |
         uint32_t{b[at + 2]} << 16 | uint32_t{b[at + 3]} << 24;
}

uint16_t le16(std::span<const uint8_t> b, size_t at) {
  return static_cast<uint16_t>(b[at] | b[at + 1] << 8);
}

bool tag_is(std::span<const uint8_t> b, size_t at, const char* tag) {
  return std::memcmp(b.data() + at, tag, 4) == 0;
}

int16_t quantize(double x) {
  const double scaled = std::nearbyint(x * 32768.0);
  return static_cast<int16_t>(std::clamp(scaled, -32768.0, 32767.0));
}

double rms(const std::vector<double>& x) {
  double sum = 0.0;
  for (double v : x) sum += v * v;
  return x.empty() ? 0.0 : std::sqrt(sum / static_cast<double>(x.size()));
}

void scale_to_unit_rms(std::vector<double>& x) {
  const double r = rms(x);
  if (r > 0.0) {
    for (double& v : x) v /= r;
  }
}

// Two-pole resonator y[n] = x[n] + 2 r cos(w) y[n-1] - r^2 y[n-2].
void resonate(std::vector<double>& x, double center_hz, double bandwidth_hz,
              int sample_rate_hz) {
  const double r = std::exp(-std::numbers::pi * bandwidth_hz / sample_rate_hz);
  const double a1 = 2.0 * r * std::cos(kTwoPi * center_hz / sample_rate_hz);
  const double a2 = r * r;
  double y1 = 0.0, y2 = 0.0;
  for (double& v : x) {
    const double y = v + a1 * y1 - a2 * y2;
    y2 = y1;
    y1 = y;
    v = y;
  }
}

// Milliseconds drawn uniformly from [lo_s, hi_s].
int64_t draw_ms(Rng& rng, double lo_s, double hi_s) {
  return std::llround(rng.uniform(lo_s, hi_s) * 1000.0);
}

size_t ms_to_samples(int64_t ms, int sample_rate_hz) {
  return static_cast<size_t>((ms * sample_rate_hz + 500) / 1000);
}

struct SadPlan {
  std::string file_id;
  Role role;
  uint64_t seed;
};

struct SidPlan {
  std::string file_id;
  Role role;
  int speaker;
  int64_t duration_ms;
  uint64_t seed;
};

std::string speaker_name(int k) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "spk%02d", k);
  return buf;
}

std::string indexed(std::string_view prefix, int i, int width) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%0*d", width, i);
  return std::string(prefix) + buf;
}

// Alternating speech / non-speech layout of one SAD file in whole ms.
std::vector<std::pair<int64_t, int64_t>> plan_sad_layout(
    const SynthSpec& spec, Rng& rng, std::vector<SpeechLabel>& labels) {
  const int64_t total = std::llround(spec.sad_file_seconds * 1000.0);
  std::vector<std::pair<int64_t, int64_t>> spans;
  SpeechLabel label =
      rng.uniform() < 0.5 ? SpeechLabel::kSpeech : SpeechLabel::kNonSpeech;
  int64_t t = 0;
  while (t < total) {
    const int64_t d = label == SpeechLabel::kSpeech
                          ? draw_ms(rng, spec.burst_min_s, spec.burst_max_s)
                          : draw_ms(rng, spec.gap_min_s, spec.gap_max_s);
    const int64_t end = std::min(t + std::max<int64_t>(d, 1), total);
    if (label == SpeechLabel::kNonSpeech && spec.short_burst_prob > 0.0 &&
        end - t >= 500 && rng.uniform() < spec.short_burst_prob) {
      const int64_t burst = draw_ms(rng, 0.05, 0.19);
      const int64_t lead = 150 + static_cast<int64_t>(rng.below(
                                     static_cast<uint64_t>(end - t - burst - 300 + 1)));
      spans.push_back({t, t + lead});
      labels.push_back(SpeechLabel::kNonSpeech);
      spans.push_back({t + lead, t + lead + burst});
      labels.push_back(SpeechLabel::kSpeech);
      spans.push_back({t + lead + burst, end});
      labels.push_back(SpeechLabel::kNonSpeech);
    } else {
      spans.push_back({t, end});
      labels.push_back(label);
    }
    t = end;
    label = opposite(label);
  }
  return spans;
}

SegmentList generate_sad_file(const SynthSpec& spec,
                              const std::vector<Voice>& voices,
                              const SadPlan& plan, AudioBuffer& audio) {
  Rng rng(plan.seed);
  std::vector<SpeechLabel> labels;
  const auto spans = plan_sad_layout(spec, rng, labels);
  const int sr = spec.sample_rate_hz;
  const int64_t total_ms = spans.back().second;
  const size_t n = ms_to_samples(total_ms, sr);

  std::vector<double> speech(n, 0.0);
  std::vector<double> events(n, 0.0);
  std::vector<char> is_speech(n, 0);
  SegmentList ref{plan.file_id, {}, total_ms / 1000.0};
  for (size_t i = 0; i < spans.size(); ++i) {
    const auto [a_ms, b_ms] = spans[i];
    ref.segments.push_back({a_ms / 1000.0, b_ms / 1000.0, labels[i]});
    const size_t a = ms_to_samples(a_ms, sr);
    const size_t b = ms_to_samples(b_ms, sr);
    if (labels[i] == SpeechLabel::kSpeech) {
      const Voice& voice = voices[rng.below(voices.size())];
      const double gain = rng.uniform(0.6, 1.4);
      const auto burst = synth_speech(voice, b - a, sr, rng.next());
      for (size_t j = 0; j < burst.size(); ++j) {
        speech[a + j] = gain * burst[j];
        is_speech[a + j] = 1;
      }
    } else if (rng.uniform() < spec.noise_event_prob && b - a > 0) {
      // Band-limited noise event somewhere inside the gap.
      const size_t len = std::max<size_t>(
          1, static_cast<size_t>((b - a) * rng.uniform(0.2, 0.8)));
      const size_t start = a + rng.below(b - a - len + 1);
      Rng event_rng(rng.next());
      std::vector<double> ev(len);
      for (double& v : ev) v = event_rng.normal();
      resonate(ev, rng.uniform(300.0, 0.45 * sr), rng.uniform(100.0, 600.0), sr);
      scale_to_unit_rms(ev);
      const double gain = rng.uniform(0.2, 0.6);
      const size_t ramp = std::min<size_t>(len / 2, sr / 100);
      for (size_t j = 0; j < len; ++j) {
        double w = 1.0;
        if (j < ramp) w = static_cast<double>(j) / ramp;
        if (len - 1 - j < ramp) w = static_cast<double>(len - 1 - j) / ramp;
        events[start + j] = gain * w * ev[j];
      }
    }
  }

  double speech_power = 0.0;
  size_t speech_count = 0;
  for (size_t i = 0; i < n; ++i) {
    if (is_speech[i]) {
      speech_power += speech[i] * speech[i];
      ++speech_count;
    }
  }
  speech_power = speech_count > 0 ? speech_power / speech_count : 1.0;
  const double snr_db = rng.uniform(spec.snr_min_db, spec.snr_max_db);
  const double noise_rms = std::sqrt(speech_power / std::pow(10.0, snr_db / 10.0));
  const auto noise = pink_noise(n, rng.next());
  const double speech_rms = std::sqrt(speech_power);

  audio.id = plan.file_id;
  audio.sample_rate_hz = sr;
  audio.samples.resize(n);
  double peak = 0.0;
  for (size_t i = 0; i < n; ++i) {
    audio.samples[i] = speech[i] + noise_rms * noise[i] + speech_rms * events[i];
    peak = std::max(peak, std::abs(audio.samples[i]));
  }
  const double scale = peak > 0.0 ? std::min(0.1, 0.95 / peak) : 0.1;
  for (double& v : audio.samples) v *= scale;
  return ref;
}

void generate_sid_utterance(const SynthSpec& spec,
                            const std::vector<Voice>& voices,
                            const SidPlan& plan, AudioBuffer& audio) {
  Rng rng(plan.seed);
  const int sr = spec.sample_rate_hz;
  const size_t n = ms_to_samples(plan.duration_ms, sr);
  const auto speech = synth_speech(voices[plan.speaker], n, sr, rng.next());
  const double snr_db = rng.uniform(spec.snr_min_db, spec.snr_max_db);
  const double noise_rms = std::pow(10.0, -snr_db / 20.0);
  const auto noise = pink_noise(n, rng.next());
  audio.id = plan.file_id;
  audio.sample_rate_hz = sr;
  audio.samples.resize(n);
  double peak = 0.0;
  for (size_t i = 0; i < n; ++i) {
    audio.samples[i] = speech[i] + noise_rms * noise[i];
    peak = std::max(peak, std::abs(audio.samples[i]));
  }
  const double scale = peak > 0.0 ? std::min(0.1, 0.95 / peak) : 0.1;
  for (double& v : audio.samples) v *= scale;
}

// Durations (ms) of one speaker's training utterances summing to total_ms.
std::vector<int64_t> split_duration(int64_t total_ms, int64_t min_ms,
                                    int64_t max_ms, Rng& rng) {
  std::vector<int64_t> out;
  int64_t remaining = total_ms;
  while (remaining > 0) {
    int64_t d;
    if (remaining <= max_ms) {
      d = remaining;
    } else {
      d = min_ms + static_cast<int64_t>(rng.below(max_ms - min_ms + 1));
      d = std::min(d, remaining - min_ms);
    }
    out.push_back(d);
    remaining -= d;
  }
  return out;
}

}  // namespace

AudioBuffer decode_wav(std::span<const uint8_t> bytes, std::string id) {
  if (bytes.size() < 12) {
    throw Error(ErrorKind::kFormat, id + ": RIFF header shorter than 12 bytes");
  }
  if (!tag_is(bytes, 0, "RIFF")) {
    throw Error(ErrorKind::kFormat, id + ": bad RIFF chunk id");
  }
  if (!tag_is(bytes, 8, "WAVE")) {
    throw Error(ErrorKind::kFormat, id + ": bad WAVE format tag");
  }

  bool have_fmt = false;
  AudioBuffer audio;
  audio.id = std::move(id);
  size_t at = 12;
  while (at + 8 <= bytes.size()) {
    const uint32_t size = le32(bytes, at + 4);
    const size_t body = at + 8;
    if (tag_is(bytes, at, "fmt ")) {
      if (size < 16 || body + 16 > bytes.size()) {
        throw Error(ErrorKind::kFormat, audio.id + ": bad fmt chunk size " +
                                            std::to_string(size));
      }
      const uint16_t format = le16(bytes, body);
      const uint16_t channels = le16(bytes, body + 2);
      const uint32_t rate = le32(bytes, body + 4);
      const uint16_t block_align = le16(bytes, body + 12);
      const uint16_t bits = le16(bytes, body + 14);
      if (format != 1) {
        throw Error(ErrorKind::kUnsupportedFormat,
                    audio.id + ": audio_format=" + std::to_string(format) +
                        " (only PCM=1 is supported)");
      }
      if (channels != 1) {
        throw Error(ErrorKind::kUnsupportedFormat,
                    audio.id + ": channels=" + std::to_string(channels) +
                        " (only mono is supported)");
      }
      if (bits != 16) {
        throw Error(ErrorKind::kUnsupportedFormat,
                    audio.id + ": bits_per_sample=" + std::to_string(bits) +
                        " (only 16 is supported)");
      }
      if (rate == 0) {
        throw Error(ErrorKind::kFormat, audio.id + ": sample_rate is 0");
      }
      if (block_align != 2) {
        throw Error(ErrorKind::kFormat, audio.id + ": block_align=" +
                                            std::to_string(block_align));
      }
      audio.sample_rate_hz = static_cast<int>(rate);
      have_fmt = true;
    } else if (tag_is(bytes, at, "data")) {
      if (!have_fmt) {
        throw Error(ErrorKind::kFormat, audio.id + ": data chunk before fmt chunk");
      }
      if (body + size > bytes.size()) {
        throw Error(ErrorKind::kTruncation,
                    audio.id + ": data chunk truncated at byte offset " +
                        std::to_string(bytes.size()) + " (declared " +
                        std::to_string(size) + " bytes from offset " +
                        std::to_string(body) + ")");
      }
      if (size % 2 != 0) {
        throw Error(ErrorKind::kFormat, audio.id + ": data chunk size " +
                                            std::to_string(size) +
                                            " is not a multiple of block_align");
      }
      audio.samples.resize(size / 2);
      for (size_t i = 0; i < audio.samples.size(); ++i) {
        const auto v = static_cast<int16_t>(le16(bytes, body + 2 * i));
        audio.samples[i] = v / 32768.0;
      }
      return audio;
    }
    at = body + size + (size & 1);
  }
  throw Error(ErrorKind::kFormat,
              audio.id + (have_fmt ? ": missing data chunk" : ": missing fmt chunk"));
}

AudioBuffer read_wav(const std::filesystem::path& path) {
  return decode_wav(read_file_bytes(path), path.stem().string());
}

std::vector<uint8_t> encode_wav(const AudioBuffer& audio) {
  const uint32_t data_bytes = static_cast<uint32_t>(audio.samples.size() * 2);
  ByteWriter w;
  w.raw(std::span(reinterpret_cast<const uint8_t*>("RIFF"), 4));
  w.u32(36 + data_bytes);
  w.raw(std::span(reinterpret_cast<const uint8_t*>("WAVEfmt "), 8));
  w.u32(16);
  w.u8(1), w.u8(0);  // PCM
  w.u8(1), w.u8(0);  // mono
  w.u32(static_cast<uint32_t>(audio.sample_rate_hz));
  w.u32(static_cast<uint32_t>(audio.sample_rate_hz) * 2);
  w.u8(2), w.u8(0);   // block align
  w.u8(16), w.u8(0);  // bits
  w.raw(std::span(reinterpret_cast<const uint8_t*>("data"), 4));
  w.u32(data_bytes);
  auto& out = w.bytes();
  out.reserve(out.size() + data_bytes);
  for (double x : audio.samples) {
    const auto v = static_cast<uint16_t>(quantize(x));
    out.push_back(static_cast<uint8_t>(v & 0xff));
    out.push_back(static_cast<uint8_t>(v >> 8));
  }
  return out;
}

void write_wav(const std::filesystem::path& path, const AudioBuffer& audio) {
  write_file_bytes(path, encode_wav(audio));
}

std::string_view role_name(Role role) {
  switch (role) {
    case Role::kTrain: return "train";
    case Role::kDev: return "dev";
    case Role::kEval: return "eval";
  }
  return "train";
}

Role parse_role(std::string_view text) {
  if (text == "train") return Role::kTrain;
  if (text == "dev") return Role::kDev;
  if (text == "eval") return Role::kEval;
  throw Error(ErrorKind::kFormat, "role must be train|dev|eval, got '" +
                                      std::string(text) + "'");
}

void write_manifest(const std::filesystem::path& path,
                    const Manifest& manifest) {
  std::string text;
  for (const auto& e : manifest) {
    text += e.file_id + '\t' + e.path + '\t' + format_fixed(e.duration_s, 3) +
            '\t' + std::string(role_name(e.role)) + '\n';
  }
  write_text_file(path, text);
}

Manifest read_manifest(const std::filesystem::path& path) {
  Manifest manifest;
  for (const TextLine& line : read_text_lines(path)) {
    const auto fields = split_tabs(line.text);
    const std::string where =
        path.filename().string() + ":" + std::to_string(line.number);
    if (fields.size() != 4) {
      throw Error(ErrorKind::kFormat, where + ": expected 4 tab-separated fields");
    }
    manifest.push_back({std::string(fields[0]), std::string(fields[1]),
                        parse_double(fields[2], where + " duration_s"),
                        parse_role(fields[3])});
  }
  return manifest;
}

void SynthSpec::validate() const {
  auto fail = [](const std::string& what) {
    throw Error(ErrorKind::kConfig, "synth: " + what);
  };
  if (sample_rate_hz < 1000) fail("sample_rate_hz must be >= 1000");
  if (snr_min_db > snr_max_db) fail("snr range is empty");
  if (make_sid) {
    if (n_speakers < 2) fail("n_speakers must be >= 2");
    if (!per_speaker_train_seconds.empty() &&
        per_speaker_train_seconds.size() != static_cast<size_t>(n_speakers)) {
      fail("per_speaker_train_seconds needs one value per speaker");
    }
    // Shorter utterances are wrap-padded at feature time, but must still hold
    // the shortest chunk of any task.
    if (utterance_min_s < 0.32) fail("utterance_min_s must be >= 0.32");
    if (utterance_min_s > utterance_max_s) fail("utterance range is empty");
    if (train_seconds_min <= 0.0 || train_seconds_min > train_seconds_max) {
      fail("train seconds range is empty");
    }
    for (double s : train_seconds()) {
      if (s <= 0.0) fail("per-speaker train seconds must be positive");
    }
  }
  if (make_sad) {
    if (sad_speakers < 1) fail("sad_speakers must be >= 1");
    if (sad_file_seconds < 0.32) fail("sad_file_seconds must be >= 0.32");
    if (burst_min_s <= 0.0 || burst_min_s > burst_max_s) fail("burst range");
    if (gap_min_s <= 0.0 || gap_min_s > gap_max_s) fail("gap range");
    if (sad_train_files < 0 || sad_dev_files < 0 || sad_eval_files < 0) {
      fail("file counts must be >= 0");
    }
  }
}

std::vector<double> SynthSpec::train_seconds() const {
  if (!per_speaker_train_seconds.empty()) return per_speaker_train_seconds;
  std::vector<double> out(n_speakers);
  for (int k = 0; k < n_speakers; ++k) {
    out[k] = n_speakers == 1
                 ? train_seconds_min
                 : train_seconds_min + (train_seconds_max - train_seconds_min) *
                                           k / (n_speakers - 1);
  }
  return out;
}

std::vector<Voice> make_voices(int n, uint64_t seed) {
  Rng rng(seed);
  std::vector<int> f0_slot(n), res_slot(n);
  for (int k = 0; k < n; ++k) f0_slot[k] = res_slot[k] = k;
  rng.shuffle(f0_slot);
  rng.shuffle(res_slot);
  std::vector<Voice> voices(n);
  for (int k = 0; k < n; ++k) {
    Voice& v = voices[k];
    v.f0_hz = 80.0 + 220.0 * (f0_slot[k] + rng.uniform(0.25, 0.75)) / n;
    v.resonance_hz = 400.0 + 2100.0 * (res_slot[k] + rng.uniform(0.25, 0.75)) / n;
    v.tilt = rng.uniform(0.5, 1.5);
    v.bandwidth_hz = rng.uniform(80.0, 200.0);
  }
  return voices;
}

std::vector<double> synth_speech(const Voice& voice, size_t n_samples,
                                 int sample_rate_hz, uint64_t seed) {
  Rng rng(seed);
  const double sr = sample_rate_hz;
  const double f0 = voice.f0_hz * rng.uniform(0.95, 1.05);
  const double drift_rate = rng.uniform(0.3, 1.0);
  const double drift_phase = rng.uniform(0.0, kTwoPi);
  const double jitter_rate = rng.uniform(2.0, 4.0);
  const double jitter_phase = rng.uniform(0.0, kTwoPi);
  const double syllable_rate = rng.uniform(3.0, 6.0);
  const double syllable_phase = rng.uniform(0.0, kTwoPi);
  const int n_harmonics =
      std::max(1, static_cast<int>(0.45 * sr / (f0 * 1.07)));

  std::vector<std::complex<double>> harmonic(n_harmonics);
  for (int h = 0; h < n_harmonics; ++h) {
    harmonic[h] = std::polar(std::pow(h + 1.0, -voice.tilt),
                             rng.uniform(0.0, kTwoPi));
  }

  std::vector<double> source(n_samples);
  double phase = 0.0;
  for (size_t i = 0; i < n_samples; ++i) {
    const double t = i / sr;
    const double f = f0 * (1.0 + 0.04 * std::sin(kTwoPi * drift_rate * t + drift_phase) +
                           0.015 * std::sin(kTwoPi * jitter_rate * t + jitter_phase));
    phase = std::fmod(phase + kTwoPi * f / sr, kTwoPi);
    const std::complex<double> step = std::polar(1.0, phase);
    std::complex<double> z = step;
    double x = 0.0;
    for (int h = 0; h < n_harmonics; ++h) {
      x += (harmonic[h] * z).imag();
      z *= step;
    }
    source[i] = x;
  }
  scale_to_unit_rms(source);

  std::vector<double> shaped = source;
  resonate(shaped, voice.resonance_hz, voice.bandwidth_hz, sample_rate_hz);
  scale_to_unit_rms(shaped);

  std::vector<double> out(n_samples);
  const size_t ramp = std::min(n_samples / 2, static_cast<size_t>(sr * 0.005));
  for (size_t i = 0; i < n_samples; ++i) {
    const double t = i / sr;
    double env = 0.3 + 0.7 * (0.5 - 0.5 * std::cos(kTwoPi * syllable_rate * t +
                                                   syllable_phase));
    if (i < ramp) env *= static_cast<double>(i) / ramp;
    if (n_samples - 1 - i < ramp) env *= static_cast<double>(n_samples - 1 - i) / ramp;
    out[i] = env * (shaped[i] + 0.4 * source[i]);
  }
  scale_to_unit_rms(out);
  return out;
}

std::vector<double> pink_noise(size_t n_samples, uint64_t seed) {
  Rng rng(seed);
  std::vector<double> out(n_samples);
  double b0 = 0.0, b1 = 0.0, b2 = 0.0;
  for (double& v : out) {
    const double w = rng.normal();
    b0 = 0.99765 * b0 + w * 0.0990460;
    b1 = 0.96300 * b1 + w * 0.2965164;
    b2 = 0.57000 * b2 + w * 1.0526913;
    v = b0 + b1 + b2 + w * 0.1848;
  }
  scale_to_unit_rms(out);
  return out;
}

SynthResult synth_corpus(const SynthSpec& spec,
                         const std::filesystem::path& out_dir) {
  spec.validate();
  namespace fs = std::filesystem;
  SynthResult result;
  auto ensure_dir = [](const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error(ErrorKind::kIo, "cannot create " + dir.string() + ": " + ec.message());
  };

  if (spec.make_sad) {
    const fs::path dir = out_dir / "sad";
    ensure_dir(dir / "wav");
    const auto voices = make_voices(spec.sad_speakers, Rng::derive(spec.seed, 2));
    std::vector<SadPlan> plans;
    auto add = [&](Role role, int count) {
      for (int i = 0; i < count; ++i) {
        const std::string id = indexed(
            "sad_" + std::string(role_name(role)) + "_", i, 3);
        plans.push_back({id, role, Rng::derive(spec.seed, 1000 + plans.size())});
      }
    };
    add(Role::kTrain, spec.sad_train_files);
    add(Role::kDev, spec.sad_dev_files);
    add(Role::kEval, spec.sad_eval_files);

    std::vector<SegmentList> refs(plans.size());
    std::vector<double> durations(plans.size());
    parallel_for(plans.size(), spec.workers, [&](size_t i) {
      AudioBuffer audio;
      refs[i] = generate_sad_file(spec, voices, plans[i], audio);
      durations[i] = refs[i].file_duration_s;
      write_wav(dir / "wav" / (plans[i].file_id + ".wav"), audio);
    });
    std::map<std::string, SegmentList> ref_map;
    for (size_t i = 0; i < plans.size(); ++i) {
      result.sad_manifest.push_back({plans[i].file_id,
                                     "wav/" + plans[i].file_id + ".wav",
                                     durations[i], plans[i].role});
      ref_map[plans[i].file_id] = refs[i];
    }
    write_manifest(dir / "manifest.tsv", result.sad_manifest);
    write_segments_tsv(dir / "ref.tsv", ref_map);
  }

  if (spec.make_sid) {
    const fs::path dir = out_dir / "sid";
    ensure_dir(dir / "wav");
    const auto voices = make_voices(spec.n_speakers, Rng::derive(spec.seed, 1));
    Rng plan_rng(Rng::derive(spec.seed, 3));
    const int64_t min_ms = std::llround(spec.utterance_min_s * 1000.0);
    const int64_t max_ms = std::llround(spec.utterance_max_s * 1000.0);
    const auto train_seconds = spec.train_seconds();
    std::vector<SidPlan> plans;
    auto next_seed = [&] { return Rng::derive(spec.seed, 100000 + plans.size()); };
    for (int k = 0; k < spec.n_speakers; ++k) {
      const auto parts = split_duration(std::llround(train_seconds[k] * 1000.0),
                                        min_ms, max_ms, plan_rng);
      for (size_t j = 0; j < parts.size(); ++j) {
        plans.push_back({"sid_train_" + speaker_name(k) + indexed("_", static_cast<int>(j), 3),
                         Role::kTrain, k, parts[j], next_seed()});
      }
    }
    auto add_test = [&](Role role, int per_speaker) {
      int index = 0;
      for (int j = 0; j < per_speaker; ++j) {
        for (int k = 0; k < spec.n_speakers; ++k) {
          const int64_t d = min_ms + static_cast<int64_t>(
                                         plan_rng.below(max_ms - min_ms + 1));
          plans.push_back({indexed("sid_" + std::string(role_name(role)) + "_", index++, 4),
                           role, k, d, next_seed()});
        }
      }
    };
    add_test(Role::kDev, spec.sid_dev_per_speaker);
    add_test(Role::kEval, spec.sid_eval_per_speaker);

    parallel_for(plans.size(), spec.workers, [&](size_t i) {
      AudioBuffer audio;
      generate_sid_utterance(spec, voices, plans[i], audio);
      write_wav(dir / "wav" / (plans[i].file_id + ".wav"), audio);
    });
    std::string ref_text;
    for (const SidPlan& p : plans) {
      result.sid_manifest.push_back({p.file_id, "wav/" + p.file_id + ".wav",
                                     p.duration_ms / 1000.0, p.role});
      ref_text += p.file_id + '\t' + speaker_name(p.speaker) + '\n';
    }
    write_manifest(dir / "manifest.tsv", result.sid_manifest);
    write_text_file(dir / "ref.tsv", ref_text);
  }
  return result;
}

}  // namespace sadsid
