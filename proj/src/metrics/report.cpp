#include "ssi/metrics/report.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <sstream>

#include "ssi/core/error.hpp"
#include "ssi/core/format.hpp"

namespace ssi::metrics {

namespace {

using Json = nlohmann::ordered_json;

template <typename M, typename F>
void for_each_field(M& m, F&& f) {
  f("mse", m.mse);
  f("mean_r2", m.mean_r2);
  f("stoi", m.stoi);
  f("estoi", m.estoi);
  f("sdr_db", m.sdr_db);
  f("si_sdr_db", m.si_sdr_db);
  f("mcd", m.mcd);
}

Json to_json_row(const UtteranceMetrics& m) {
  Json j;
  j["id"] = m.id;
  for_each_field(m, [&](const char* name, double v) { j[name] = v; });
  return j;
}

UtteranceMetrics from_json_row(const Json& j) {
  UtteranceMetrics m;
  m.id = j.at("id").get<std::string>();
  for_each_field(m, [&](const char* name, double& v) { v = j.at(name).get<double>(); });
  return m;
}

void check_row(const UtteranceMetrics& m) {
  bool finite = true;
  for_each_field(m, [&](const char*, double v) { finite = finite && std::isfinite(v); });
  if (!finite) throw NumericError("non-finite metric for utterance '" + m.id + "'");
  if (m.stoi < -1.0 || m.stoi > 1.0 || m.estoi < -1.0 || m.estoi > 1.0) {
    throw NumericError("intelligibility score outside [-1, 1] for '" + m.id + "'");
  }
  if (m.mcd < 0.0) throw NumericError("negative MCD for '" + m.id + "'");
}

}  // namespace

void MetricReport::finalize() {
  std::sort(utterances.begin(), utterances.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  mean = UtteranceMetrics{};
  mean.id = "MEAN";
  if (utterances.empty()) throw InvalidArgument("metric report has no utterances");
  for (auto& u : utterances) {
    mean.mse += u.mse;
    mean.mean_r2 += u.mean_r2;
    mean.stoi += u.stoi;
    mean.estoi += u.estoi;
    mean.sdr_db += u.sdr_db;
    mean.si_sdr_db += u.si_sdr_db;
    mean.mcd += u.mcd;
  }
  const auto n = static_cast<double>(utterances.size());
  for_each_field(mean, [&](const char*, double& v) { v /= n; });
  validate();
}

void MetricReport::validate() const {
  for (const auto& u : utterances) check_row(u);
  check_row(mean);
}

std::string MetricReport::to_json() const {
  Json j;
  j["format"] = "ssi-metric-report";
  j["corpus"] = corpus_id;
  j["method"] = method;
  j["absent"] = Json::array({"pesq", "pmsqe"});
  j["utterances"] = Json::array();
  for (const auto& u : utterances) j["utterances"].push_back(to_json_row(u));
  j["mean"] = to_json_row(mean);
  return j.dump(2) + "\n";
}

std::string MetricReport::to_csv() const {
  std::ostringstream os;
  os << "utterance,STOI,ESTOI,PESQ,SISDR,SDR,PMSQE,MCD,MSE,MeanR2\n";
  auto row = [&](const UtteranceMetrics& m) {
    os << m.id << ',' << format_number(m.stoi) << ',' << format_number(m.estoi) << ",," << format_number(m.si_sdr_db)
       << ',' << format_number(m.sdr_db) << ",," << format_number(m.mcd) << ',' << format_number(m.mse) << ','
       << format_number(m.mean_r2) << '\n';
  };
  for (const auto& u : utterances) row(u);
  row(mean);
  return os.str();
}

MetricReport parse_report_json(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw FormatError(std::string("metric report: ") + e.what(), e.byte);
  }
  if (j.value("format", "") != "ssi-metric-report") throw FormatError("not a metric report", 0);
  MetricReport r;
  try {
    r.corpus_id = j.at("corpus").get<std::string>();
    r.method = j.at("method").get<std::string>();
    for (const auto& u : j.at("utterances")) r.utterances.push_back(from_json_row(u));
    r.mean = from_json_row(j.at("mean"));
  } catch (const Json::exception& e) {
    throw FormatError(std::string("metric report: ") + e.what(), 0);
  }
  return r;
}

}  // namespace ssi::metrics
