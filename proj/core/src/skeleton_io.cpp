#include <fstream>
#include <sstream>

#include <json.hpp>

#include "jlm/errors.hpp"
#include "jlm/skeleton.hpp"

namespace jlm {

using nlohmann::json;

SkeletonTemplate SkeletonTemplate::from_json_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("skeleton document: ") + e.what());
  }
  if (doc.value("format", "") != "jlm-skeleton") {
    throw FormatError("skeleton document: missing format \"jlm-skeleton\"");
  }
  if (doc.value("version", 0) != 1) {
    throw VersionError("skeleton document: unsupported version " + doc.value("version", json()).dump());
  }
  SkeletonTemplate s;
  try {
    s.parents = doc.at("parents").get<std::vector<int>>();
    for (const auto& row : doc.at("offsets")) {
      if (row.size() != 3) throw FormatError("skeleton offsets must have 3 components");
      s.offsets.emplace_back(row[0].get<double>(), row[1].get<double>(), row[2].get<double>());
    }
  } catch (const json::exception& e) {
    throw FormatError(std::string("skeleton document: ") + e.what());
  }
  s.validate();
  return s;
}

std::string SkeletonTemplate::to_json_text() const {
  json doc;
  doc["format"] = "jlm-skeleton";
  doc["version"] = 1;
  doc["parents"] = parents;
  json rows = json::array();
  for (const auto& o : offsets) rows.push_back({o.x(), o.y(), o.z()});
  doc["offsets"] = rows;
  return doc.dump(2);
}

SkeletonTemplate SkeletonTemplate::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open skeleton file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json_text(ss.str());
}

void SkeletonTemplate::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write skeleton file " + path.string());
  out << to_json_text() << '\n';
}

}  // namespace jlm
