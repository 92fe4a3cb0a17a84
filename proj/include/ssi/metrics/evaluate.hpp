#pragma once

#include <span>
#include <string>
#include <vector>

#include "ssi/dataio/clip.hpp"
#include "ssi/dsp/config.hpp"
#include "ssi/dsp/mel.hpp"
#include "ssi/dsp/waveform.hpp"
#include "ssi/metrics/report.hpp"
#include "ssi/models/network.hpp"

namespace ssi::metrics {

struct EvalUtterance {
  dataio::UltrasoundClip clip;  // preprocessed
  dsp::MelSpectrogram target;   // standardized
  dsp::Waveform audio;          // reference waveform
};

struct EvalOptions {
  dsp::DspConfig dsp;
  std::size_t batch_size = 32;
};

// Averages overlapping [N, 5, C] window predictions centred at `centers`
// into a [T, C] track. Frames no window reaches copy the nearest covered one.
Tensor stitch_predictions(const Tensor& windows, std::span<const std::size_t> centers, std::size_t frame_count);

// Runs the generator over every window of a clip and stitches the result.
// The returned mel carries the target's standardization statistics.
dsp::MelSpectrogram predict_mel(const models::GeneratorNetwork& gen, const models::ModelParams& params,
                                const dataio::UltrasoundClip& clip, const dsp::MelSpectrogram& target_like,
                                std::size_t batch_size = 32);

// Raw log-mel -> magnitude -> Griffin-Lim waveform of `length` samples.
dsp::Waveform vocode(const dsp::MelSpectrogram& raw_mel, const dsp::DspConfig& cfg, std::size_t length);

struct WaveformScores {
  double stoi = 0.0, estoi = 0.0, sdr_db = 0.0, si_sdr_db = 0.0, mcd = 0.0;
};
WaveformScores waveform_scores(const dsp::Waveform& ref, const dsp::Waveform& est, const dsp::DspConfig& cfg);

// MSE and mean R^2 are taken over frames some window covers; the waveform
// metrics use the whole stitched, vocoded utterance.
UtteranceMetrics evaluate_utterance(const models::GeneratorNetwork& gen, const models::ModelParams& params,
                                    const EvalUtterance& utt, const EvalOptions& opts);

MetricReport evaluate_corpus(const models::GeneratorNetwork& gen, const models::ModelParams& params,
                             std::span<const EvalUtterance> utterances, const EvalOptions& opts,
                             const std::string& corpus_id, const std::string& method);

}  // namespace ssi::metrics
