#include "psim/serialize.hpp"

#include "psim/io.hpp"

namespace psim {

using nlohmann::json;
using detail::field;
using detail::field_or;

json to_json(const SourceSpec& s) {
  return {{"lambda0", s.lambda0}, {"delta_lambda", s.delta_lambda}, {"coherence_length", s.coherence_length}};
}

json to_json(const ForwardModelSpec& m) {
  return {{"source", to_json(m.source)},
          {"i_object", m.i_object},
          {"i_reference", m.i_reference},
          {"shift_schedule", m.shift_schedule},
          {"jitter_sigma", m.jitter_sigma},
          {"noise_sigma", m.noise_sigma},
          {"envelope_reference_opd", m.envelope_reference_opd}};
}

json to_json(const PhaseObjectSpec& o) {
  json j{{"kind", to_string(o.kind)}};
  if (o.kind == ObjectKind::waveguide_ridge) {
    j["ridge"] = {{"center", o.ridge.center}, {"width", o.ridge.width}, {"height", o.ridge.height},
                  {"edge", o.ridge.edge}};
  } else if (o.kind == ObjectKind::cell_blobs) {
    json blobs = json::array();
    for (const auto& b : o.blobs) {
      blobs.push_back({{"center", {b.center_x, b.center_y}}, {"radius", b.radius}, {"peak_height", b.peak_height}});
    }
    j["blobs"] = {{"count", o.blobs.size()}, {"items", blobs}};
  }
  return j;
}

json to_json(const ObjectFamily& f) {
  return {{"kind", to_string(f.kind)},
          {"ridge_width", {f.ridge_width_min, f.ridge_width_max}},
          {"ridge_edge", f.ridge_edge},
          {"ridge_height", {f.ridge_height_min, f.ridge_height_max}},
          {"blob_count", {f.blob_count_min, f.blob_count_max}},
          {"blob_radius", {f.blob_radius_min, f.blob_radius_max}},
          {"blob_peak", {f.blob_peak_min, f.blob_peak_max}}};
}

json to_json(const SsimParams& p) {
  return {{"window", p.window}, {"sigma", p.sigma}, {"k1", p.k1}, {"k2", p.k2}, {"dynamic_range", p.dynamic_range}};
}

SourceSpec source_from_json(const json& j, const std::string& path) {
  const double lambda0 = field<double>(j, "lambda0", path);
  const double delta = field<double>(j, "delta_lambda", path);
  if (!(lambda0 > 0)) throw ConfigError("field '" + path + ".lambda0' must be > 0");
  if (!(delta > 0)) throw ConfigError("field '" + path + ".delta_lambda' must be > 0");
  SourceSpec s = SourceSpec::make(lambda0, delta);
  if (j.contains("coherence_length")) {
    const double given = field<double>(j, "coherence_length", path);
    if (std::abs(given - s.coherence_length) > 1e-6 * s.coherence_length) {
      throw ConfigError("field '" + path + ".coherence_length' disagrees with lambda0 and delta_lambda");
    }
  }
  return s;
}

ForwardModelSpec model_from_json(const json& j, const std::string& path) {
  ForwardModelSpec m;
  m.source = source_from_json(field<json>(j, "source", path), path + ".source");
  m.i_object = field<double>(j, "i_object", path);
  m.i_reference = field<double>(j, "i_reference", path);
  const auto schedule = field_or<std::vector<double>>(j, "shift_schedule", path,
                                                      {kDefaultSchedule.begin(), kDefaultSchedule.end()});
  if (schedule.size() != 5) throw ConfigError("field '" + path + ".shift_schedule' must have exactly 5 entries");
  std::copy(schedule.begin(), schedule.end(), m.shift_schedule.begin());
  m.jitter_sigma = field_or<double>(j, "jitter_sigma", path, 0.0);
  m.noise_sigma = field_or<double>(j, "noise_sigma", path, 0.0);
  m.envelope_reference_opd = field_or<double>(j, "envelope_reference_opd", path, 0.0);
  if (!(m.i_object > 0)) throw ConfigError("field '" + path + ".i_object' must be > 0");
  if (!(m.i_reference > 0)) throw ConfigError("field '" + path + ".i_reference' must be > 0");
  if (m.jitter_sigma < 0) throw ConfigError("field '" + path + ".jitter_sigma' must be >= 0");
  if (m.noise_sigma < 0) throw ConfigError("field '" + path + ".noise_sigma' must be >= 0");
  return m;
}

PhaseObjectSpec object_from_json(const json& j, const std::string& path) {
  PhaseObjectSpec o;
  const auto kind = field<std::string>(j, "kind", path);
  try {
    o.kind = object_kind_from_string(kind);
  } catch (const ConfigError&) {
    throw ConfigError("field '" + path + ".kind' has unknown value '" + kind + "'");
  }
  if (o.kind == ObjectKind::waveguide_ridge) {
    const json r = field<json>(j, "ridge", path);
    const std::string rp = path + ".ridge";
    o.ridge.center = field<double>(r, "center", rp);
    o.ridge.width = field<double>(r, "width", rp);
    o.ridge.height = field<double>(r, "height", rp);
    o.ridge.edge = field_or<double>(r, "edge", rp, 0.0);
  } else if (o.kind == ObjectKind::cell_blobs) {
    const json b = field<json>(j, "blobs", path);
    const std::string bp = path + ".blobs";
    const json items = field<json>(b, "items", bp);
    if (!items.is_array()) throw ConfigError("field '" + bp + ".items' must be an array");
    if (b.contains("count") && field<std::size_t>(b, "count", bp) != items.size()) {
      throw ConfigError("field '" + bp + ".count' disagrees with the number of items");
    }
    for (std::size_t i = 0; i < items.size(); ++i) {
      const std::string ip = bp + ".items[" + std::to_string(i) + "]";
      const auto center = field<std::vector<double>>(items[i], "center", ip);
      if (center.size() != 2) throw ConfigError("field '" + ip + ".center' must be [x, y]");
      o.blobs.push_back({center[0], center[1], field<double>(items[i], "radius", ip),
                         field<double>(items[i], "peak_height", ip)});
    }
  }
  try {
    o.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return o;
}

ObjectFamily family_from_json(const json& j, const std::string& path) {
  ObjectFamily f;
  f.kind = object_kind_from_string(field<std::string>(j, "kind", path));
  auto range = [&](const char* key, double& lo, double& hi) {
    if (!j.contains(key)) return;
    const auto v = field<std::vector<double>>(j, key, path);
    if (v.size() != 2) throw ConfigError("field '" + path + "." + key + "' must be [min, max]");
    lo = v[0];
    hi = v[1];
  };
  range("ridge_width", f.ridge_width_min, f.ridge_width_max);
  range("ridge_height", f.ridge_height_min, f.ridge_height_max);
  f.ridge_edge = field_or<double>(j, "ridge_edge", path, f.ridge_edge);
  if (j.contains("blob_count")) {
    const auto v = field<std::vector<int>>(j, "blob_count", path);
    if (v.size() != 2) throw ConfigError("field '" + path + ".blob_count' must be [min, max]");
    f.blob_count_min = v[0];
    f.blob_count_max = v[1];
  }
  range("blob_radius", f.blob_radius_min, f.blob_radius_max);
  range("blob_peak", f.blob_peak_min, f.blob_peak_max);
  try {
    f.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return f;
}

std::string json_hash(const json& j) { return io::sha256_hex(j.dump()); }

}  // namespace psim
