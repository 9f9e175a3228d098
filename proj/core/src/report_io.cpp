#include <fstream>

#include <json.hpp>

#include "jlm/errors.hpp"
#include "jlm/metrics.hpp"

namespace jlm::metrics {
namespace {

using nlohmann::json;

json metrics_json(const MetricsReport& m) {
  json out = json::object();
  for (const auto& [k, v] : m.named()) out[k] = v;
  return out;
}

MetricsReport metrics_from(const json& j, std::size_t frames, std::size_t contact_frames) {
  MetricsReport m;
  m.frames = frames;
  m.contact_frames = contact_frames;
  m.mpjre = j.at("MPJRE").get<double>();
  m.mpjpe = j.at("MPJPE").get<double>();
  m.mpjve = j.at("MPJVE").get<double>();
  m.jitter = j.at("Jitter").get<double>();
  m.ground = j.at("Ground").get<double>();
  m.skate = j.at("Skate").get<double>();
  m.h_pe = j.at("H-PE").get<double>();
  m.u_pe = j.at("U-PE").get<double>();
  m.l_pe = j.at("L-PE").get<double>();
  return m;
}

}  // namespace

std::string report_to_json(const EvaluationReport& report) {
  json seqs = json::array();
  for (const auto& s : report.sequences) {
    seqs.push_back({{"name", s.name},
                    {"frames", s.metrics.frames},
                    {"contact_frames", s.metrics.contact_frames},
                    {"metrics", metrics_json(s.metrics)}});
  }
  json doc = {{"format", "jlm-metrics"},
              {"version", kReportVersion},
              {"sequences", seqs},
              {"aggregate",
               {{"frames", report.aggregate.frames},
                {"contact_frames", report.aggregate.contact_frames},
                {"metrics", metrics_json(report.aggregate)}}}};
  return doc.dump(2) + "\n";
}

EvaluationReport report_from_json(const std::string& text) {
  try {
    const json doc = json::parse(text);
    if (doc.at("format") != "jlm-metrics") throw SchemaError("not a jlm-metrics document");
    if (doc.at("version").get<int>() != kReportVersion) throw VersionError("unsupported metrics report version");
    EvaluationReport r;
    for (const auto& s : doc.at("sequences")) {
      r.sequences.push_back({s.at("name").get<std::string>(),
                             metrics_from(s.at("metrics"), s.at("frames").get<std::size_t>(),
                                          s.at("contact_frames").get<std::size_t>())});
    }
    const auto& a = doc.at("aggregate");
    r.aggregate = metrics_from(a.at("metrics"), a.at("frames").get<std::size_t>(),
                               a.at("contact_frames").get<std::size_t>());
    return r;
  } catch (const json::exception& e) {
    throw SchemaError(std::string("metrics report: ") + e.what());
  }
}

void save_report(const EvaluationReport& report, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write report " + path.string());
  out << report_to_json(report);
  if (!out) throw DataError("failed writing report " + path.string());
}

}  // namespace jlm::metrics
