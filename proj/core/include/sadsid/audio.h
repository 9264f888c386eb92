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

#ifndef SADSID_AUDIO_H_
#define SADSID_AUDIO_H_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace sadsid {

struct AudioBuffer {
  std::vector<double> samples;  // normalized to [-1, 1]
  int sample_rate_hz = 8000;
  std::string id;

  double duration_seconds() const {
    return static_cast<double>(samples.size()) / sample_rate_hz;
  }
};

// RIFF/WAVE, 16-bit signed little-endian PCM, mono. Samples are scaled by
// 1/32768 and the id is the file stem.
AudioBuffer read_wav(const std::filesystem::path& path);
AudioBuffer decode_wav(std::span<const uint8_t> bytes, std::string id);

// Quantizes to 16 bits with round-to-nearest and saturation, so
// decode_wav(encode_wav(b)) == b for every b whose samples are k/32768.
std::vector<uint8_t> encode_wav(const AudioBuffer& audio);
void write_wav(const std::filesystem::path& path, const AudioBuffer& audio);

enum class Role { kTrain, kDev, kEval };

std::string_view role_name(Role role);
Role parse_role(std::string_view text);

struct ManifestEntry {
  std::string file_id;
  std::string path;  // relative to the manifest's directory
  double duration_s = 0.0;
  Role role = Role::kTrain;
};

using Manifest = std::vector<ManifestEntry>;

// `file_id<TAB>path<TAB>duration_s<TAB>role`, one entry per line.
void write_manifest(const std::filesystem::path& path, const Manifest& manifest);
Manifest read_manifest(const std::filesystem::path& path);

// Parameters of the synthetic labeled corpus. The SAD part is a set of long
// files alternating speech bursts with noise gaps; the SID part is a set of
// single-speaker utterances from `n_speakers` voices with imbalanced amounts
// of training audio.
struct SynthSpec {
  uint64_t seed = 7;
  int sample_rate_hz = 8000;
  bool make_sad = true;
  bool make_sid = true;
  int workers = 1;

  double snr_min_db = 5.0;
  double snr_max_db = 20.0;

  // SID.
  int n_speakers = 8;
  // Seconds of training audio per speaker. Empty means linearly spaced over
  // [train_seconds_min, train_seconds_max] by speaker index.
  std::vector<double> per_speaker_train_seconds;
  double train_seconds_min = 60.0;
  double train_seconds_max = 500.0;
  double utterance_min_s = 1.0;
  double utterance_max_s = 20.0;
  int sid_dev_per_speaker = 5;
  int sid_eval_per_speaker = 20;

  // SAD.
  int sad_speakers = 12;
  int sad_train_files = 60;
  int sad_dev_files = 10;
  int sad_eval_files = 10;
  double sad_file_seconds = 60.0;
  double burst_min_s = 1.0;
  double burst_max_s = 3.0;
  double gap_min_s = 0.5;
  double gap_max_s = 2.0;
  // Probability that a gap is split by a short (< 0.2 s) speech burst.
  double short_burst_prob = 0.0;
  // Probability that a gap contains a band-limited noise event.
  double noise_event_prob = 0.5;

  void validate() const;
  std::vector<double> train_seconds() const;
};

struct SynthResult {
  Manifest sad_manifest;
  Manifest sid_manifest;
};

// Writes, under out_dir:
//   sad/manifest.tsv, sad/ref.tsv (segment TSV), sad/wav/*.wav
//   sid/manifest.tsv, sid/ref.tsv (utterance -> speaker), sid/wav/*.wav
// All randomness derives from spec.seed; every file is generated from its
// own stream so the output does not depend on spec.workers.
SynthResult synth_corpus(const SynthSpec& spec,
                         const std::filesystem::path& out_dir);

// One synthetic voice: harmonic source with spectral tilt, shaped by a
// single two-pole resonance.
struct Voice {
  double f0_hz = 120.0;
  double tilt = 1.0;
  double resonance_hz = 1000.0;
  double bandwidth_hz = 150.0;
};

// Voices with f0 stratified over [80, 300] Hz and resonances stratified over
// [400, 2500] Hz, so neighbouring indices do not collide.
std::vector<Voice> make_voices(int n, uint64_t seed);

// `n_samples` of amplitude-modulated voiced signal at unit RMS.
std::vector<double> synth_speech(const Voice& voice, size_t n_samples,
                                 int sample_rate_hz, uint64_t seed);

// Unit-RMS pink noise.
std::vector<double> pink_noise(size_t n_samples, uint64_t seed);

}  // namespace sadsid

#endif  // SADSID_AUDIO_H_
