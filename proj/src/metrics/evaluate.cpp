#include "ssi/metrics/evaluate.hpp"

#include "ssi/core/error.hpp"
#include "ssi/dataio/examples.hpp"
#include "ssi/dataio/preprocess.hpp"
#include "ssi/dsp/griffin_lim.hpp"
#include "ssi/metrics/regression.hpp"
#include "ssi/metrics/stoi.hpp"
#include "ssi/metrics/waveform.hpp"

namespace ssi::metrics {

Tensor stitch_predictions(const Tensor& windows, std::span<const std::size_t> centers, std::size_t frame_count) {
  if (windows.rank() != 3 || windows.dim(0) != centers.size() || windows.dim(1) != dataio::kTargetFrames) {
    throw InvalidArgument("stitch_predictions expects [N, 5, C] windows, one per centre");
  }
  if (centers.empty()) throw InvalidArgument("no windows to stitch");
  const std::size_t c = windows.dim(2), half = dataio::kTargetHalf;
  Tensor sum({frame_count, c});
  std::vector<std::size_t> count(frame_count, 0);
  for (std::size_t i = 0; i < centers.size(); ++i) {
    if (centers[i] < half || centers[i] + half >= frame_count) throw InvalidArgument("window centre out of range");
    for (std::size_t k = 0; k < dataio::kTargetFrames; ++k) {
      const std::size_t t = centers[i] - half + k;
      ++count[t];
      const double* src = windows.data() + (i * dataio::kTargetFrames + k) * c;
      for (std::size_t m = 0; m < c; ++m) sum.data()[t * c + m] += src[m];
    }
  }
  std::size_t first = frame_count, last = 0;
  for (std::size_t t = 0; t < frame_count; ++t) {
    if (count[t] == 0) continue;
    first = std::min(first, t);
    last = t;
    for (std::size_t m = 0; m < c; ++m) sum.data()[t * c + m] /= static_cast<double>(count[t]);
  }
  for (std::size_t t = 0; t < frame_count; ++t) {
    if (count[t] != 0) continue;
    const std::size_t src = t < first ? first : last;
    std::copy_n(sum.data() + src * c, c, sum.data() + t * c);
  }
  return sum;
}

dsp::MelSpectrogram predict_mel(const models::GeneratorNetwork& gen, const models::ModelParams& params,
                                const dataio::UltrasoundClip& clip, const dsp::MelSpectrogram& target_like,
                                std::size_t batch_size) {
  const auto centers = dataio::example_centers(clip.frame_count());
  if (centers.empty()) {
    throw InvalidArgument("utterance '" + clip.utterance_id + "' is shorter than one input window");
  }
  const std::size_t h = clip.height(), w = clip.width(), per = dataio::kInputFrames * h * w;
  std::vector<double> out;
  Shape tail;
  for (std::size_t begin = 0; begin < centers.size(); begin += batch_size) {
    const std::size_t end = std::min(centers.size(), begin + batch_size);
    Tensor x({end - begin, dataio::kInputFrames, h, w});
    for (std::size_t i = begin; i < end; ++i) dataio::copy_input_window(clip, centers[i], x.data() + (i - begin) * per);
    Tape tape;
    const Tensor& y = gen.forward(tape.constant(std::move(x)), models::bind(tape, params, false)).value();
    tail = Shape(y.shape().begin() + 1, y.shape().end());
    out.insert(out.end(), y.values().begin(), y.values().end());
  }
  Shape shape{centers.size()};
  shape.insert(shape.end(), tail.begin(), tail.end());
  dsp::MelSpectrogram mel = target_like;
  mel.frames = stitch_predictions(Tensor(shape, std::move(out)), centers, clip.frame_count());
  return mel;
}

dsp::Waveform vocode(const dsp::MelSpectrogram& raw_mel, const dsp::DspConfig& cfg, std::size_t length) {
  const Tensor magnitude = dsp::invert_mel(raw_mel, cfg);
  return dsp::griffin_lim(magnitude, dsp::stft_config(cfg), cfg.griffin_lim_iters, cfg.sample_rate, length).waveform;
}

WaveformScores waveform_scores(const dsp::Waveform& ref, const dsp::Waveform& est, const dsp::DspConfig& cfg) {
  WaveformScores s;
  const auto env = stoi_envelopes(ref, est);
  s.stoi = stoi_from_envelopes(env);
  s.estoi = estoi_from_envelopes(env);
  s.sdr_db = sdr(ref, est);
  s.si_sdr_db = si_sdr(ref, est);
  s.mcd = mcd(ref, est, cfg);
  return s;
}

UtteranceMetrics evaluate_utterance(const models::GeneratorNetwork& gen, const models::ModelParams& params,
                                    const EvalUtterance& utt, const EvalOptions& opts) {
  if (utt.target.normalization != dsp::MelNormalization::kStandardized) {
    throw InvalidArgument("evaluation targets must be standardized mels");
  }
  const std::size_t t = utt.clip.frame_count();
  if (utt.target.frame_count() != t) {
    throw InvalidArgument("utterance '" + utt.clip.utterance_id + "': clip and mel lengths differ");
  }
  const dsp::MelSpectrogram pred = predict_mel(gen, params, utt.clip, utt.target, opts.batch_size);

  UtteranceMetrics m;
  m.id = utt.clip.utterance_id;
  const std::size_t c = pred.n_mels();
  const std::size_t lo = dataio::kInputHalf - dataio::kTargetHalf, n = t - 2 * lo;
  const Tensor p({n, c}, std::vector<double>(pred.frames.data() + lo * c, pred.frames.data() + (lo + n) * c));
  const Tensor y({n, c}, std::vector<double>(utt.target.frames.data() + lo * c, utt.target.frames.data() + (lo + n) * c));
  m.mse = spectral_mse(p, y);
  m.mean_r2 = mean_r2(p, y);

  const dsp::Waveform est = vocode(dataio::destandardize_mel(pred), opts.dsp, utt.audio.size());
  const WaveformScores s = waveform_scores(utt.audio, est, opts.dsp);
  m.stoi = s.stoi;
  m.estoi = s.estoi;
  m.sdr_db = s.sdr_db;
  m.si_sdr_db = s.si_sdr_db;
  m.mcd = s.mcd;
  return m;
}

MetricReport evaluate_corpus(const models::GeneratorNetwork& gen, const models::ModelParams& params,
                             std::span<const EvalUtterance> utterances, const EvalOptions& opts,
                             const std::string& corpus_id, const std::string& method) {
  MetricReport r;
  r.corpus_id = corpus_id;
  r.method = method;
  for (const auto& u : utterances) r.utterances.push_back(evaluate_utterance(gen, params, u, opts));
  r.finalize();
  return r;
}

}  // namespace ssi::metrics
