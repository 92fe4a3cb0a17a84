#pragma once

#include <string>
#include <vector>

namespace ssi::metrics {

struct UtteranceMetrics {
  std::string id;
  double mse = 0.0;
  double mean_r2 = 0.0;
  double stoi = 0.0;
  double estoi = 0.0;
  double sdr_db = 0.0;
  double si_sdr_db = 0.0;
  double mcd = 0.0;
};

/// Per-utterance scores plus their means. PESQ and PMSQE are not computed;
/// the CSV keeps their columns empty.
struct MetricReport {
  std::string corpus_id;
  std::string method;
  std::vector<UtteranceMetrics> utterances;  // sorted by id
  UtteranceMetrics mean;                     // id "MEAN"

  // Sorts by id, recomputes the means and checks ranges and finiteness.
  void finalize();
  void validate() const;

  std::string to_json() const;
  std::string to_csv() const;
};

MetricReport parse_report_json(const std::string& text);

}  // namespace ssi::metrics
