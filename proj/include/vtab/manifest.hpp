#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "vtab/core.hpp"

namespace vtab {

inline Json to_json(const RenderMeta& m) {
  return Json{{"grid_rows", m.grid_rows}, {"grid_cols", m.grid_cols}, {"blanks", m.blanks},
              {"width", m.width},         {"height", m.height},       {"axes_drawn", m.axes_drawn}};
}

inline RenderMeta render_meta_from_json(const Json& j) {
  RenderMeta m;
  m.grid_rows = j.at("grid_rows").get<int>();
  m.grid_cols = j.at("grid_cols").get<int>();
  m.blanks = j.at("blanks").get<int>();
  m.width = j.at("width").get<int>();
  m.height = j.at("height").get<int>();
  m.axes_drawn = j.at("axes_drawn").get<bool>();
  return m;
}

inline Json ranges_to_json(const std::vector<IndexRange>& ranges) {
  Json out = Json::array();
  for (const auto& r : ranges) out.push_back(Json::array({r.first, r.last}));
  return out;
}

inline std::vector<IndexRange> ranges_from_json(const Json& j) {
  std::vector<IndexRange> out;
  for (const auto& pair : j) {
    if (!pair.is_array() || pair.size() != 2) throw FormatError("range entries must be [first, last] pairs");
    out.push_back({pair[0].get<std::int64_t>(), pair[1].get<std::int64_t>()});
  }
  return out;
}

// One manifest line. The wave parameters of explicit generators travel in
// provenance["wave"] so the fixed field list stays as documented.
inline Json sample_to_json(const Sample& s) {
  Json j;
  j["id"] = s.id;
  j["kind"] = to_string(s.series.kind);
  j["base_generator"] = to_string(s.series.base_generator);
  j["seed"] = s.series.seed;
  j["M"] = s.series.variates();
  j["T"] = s.series.length;
  j["S"] = s.series.retained();
  j["timestamps"] = s.series.timestamps;
  Json values = Json::array();
  for (const auto& row : s.series.values) {
    for (double v : row) values.push_back(v);
  }
  j["values"] = std::move(values);
  j["granularity"] = to_string(s.label.granularity);
  j["anomaly_type"] = to_string(s.label.anomaly_type);
  switch (s.label.granularity) {
    case Granularity::Point:
      j["points"] = s.label.points;
      break;
    case Granularity::Range:
      j["ranges"] = ranges_to_json(s.label.ranges);
      break;
    case Granularity::Variate:
      j["variates"] = s.label.variates;
      break;
  }
  j["image_path"] = s.image_path;
  j["render_meta"] = to_json(s.render_meta);
  Json prov = s.provenance.is_object() ? s.provenance : Json::object();
  if (s.series.wave) {
    prov["wave"] = Json{{"amplitude", s.series.wave->amplitude}, {"period", s.series.wave->period}};
  } else {
    prov.erase("wave");
  }
  j["provenance"] = std::move(prov);
  return j;
}

inline Sample sample_from_json(const Json& j) {
  Sample s;
  s.id = j.at("id").get<std::string>();
  s.series.kind = parse_series_kind(j.at("kind").get<std::string>());
  s.series.base_generator = parse_base_generator(j.at("base_generator").get<std::string>());
  s.series.seed = j.at("seed").get<std::uint64_t>();
  const auto m = j.at("M").get<std::size_t>();
  s.series.length = j.at("T").get<std::int64_t>();
  const auto retained = j.at("S").get<std::size_t>();
  s.series.timestamps = j.at("timestamps").get<std::vector<std::int64_t>>();
  if (s.series.timestamps.size() != retained) throw FormatError("timestamps length does not match S");
  const auto& values = j.at("values");
  if (!values.is_array() || values.size() != m * retained) throw FormatError("values length does not match M*S");
  s.series.values.assign(m, std::vector<double>(retained));
  for (std::size_t r = 0; r < m; ++r) {
    for (std::size_t c = 0; c < retained; ++c) s.series.values[r][c] = values[r * retained + c].get<double>();
  }
  s.label.granularity = parse_granularity(j.at("granularity").get<std::string>());
  s.label.anomaly_type = parse_anomaly_type(j.at("anomaly_type").get<std::string>());
  switch (s.label.granularity) {
    case Granularity::Point:
      s.label.points = j.at("points").get<std::vector<std::int64_t>>();
      break;
    case Granularity::Range:
      s.label.ranges = ranges_from_json(j.at("ranges"));
      break;
    case Granularity::Variate:
      s.label.variates = j.at("variates").get<std::vector<std::int64_t>>();
      break;
  }
  s.image_path = j.at("image_path").get<std::string>();
  s.render_meta = render_meta_from_json(j.at("render_meta"));
  s.provenance = j.at("provenance");
  if (s.provenance.contains("wave")) {
    const auto& w = s.provenance["wave"];
    s.series.wave = WaveShape{w.at("amplitude").get<double>(), w.at("period").get<double>()};
    s.provenance.erase("wave");
  }
  return s;
}

inline std::string dump_line(const Json& j) {
  return j.dump(-1, ' ', false, Json::error_handler_t::replace);
}

inline void manifest_write(const std::vector<Sample>& samples, const std::filesystem::path& path) {
  for (const auto& s : samples) {
    validate(s.series);
    validate(s.label, s.series.length, s.series.variates());
  }
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open manifest for writing: " + path.string());
  for (const auto& s : samples) out << dump_line(sample_to_json(s)) << '\n';
  if (!out) throw Error("failed writing manifest: " + path.string());
}

struct ManifestContents {
  std::vector<Sample> samples;
  // Non-fatal findings, e.g. image files that do not exist yet.
  std::vector<std::string> warnings;
};

// Image paths are resolved relative to the manifest's directory.
inline ManifestContents manifest_read(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open manifest: " + path.string());
  ManifestContents out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    try {
      auto sample = sample_from_json(Json::parse(line));
      validate(sample.series);
      validate(sample.label, sample.series.length, sample.series.variates());
      out.samples.push_back(std::move(sample));
    } catch (const std::exception& e) {
      throw FormatError(e.what(), line_no);
    }
    const auto image = path.parent_path() / out.samples.back().image_path;
    if (!out.samples.back().image_path.empty() && !std::filesystem::exists(image)) {
      out.warnings.push_back("line " + std::to_string(line_no) + ": missing image " + image.string());
    }
  }
  return out;
}

}  // namespace vtab
