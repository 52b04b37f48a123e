#include "geojson.hpp"

#include <fstream>

#include <json.hpp>

namespace stemseg {

using json = nlohmann::ordered_json;

void write_geojson(const std::vector<PolygonFeature>& features,
                   const std::vector<std::string>& property_order, std::ostream& out) {
  json fc;
  fc["type"] = "FeatureCollection";
  fc["features"] = json::array();
  for (const PolygonFeature& f : features) {
    json ring = json::array();
    for (const Point& p : f.ring) ring.push_back({p.x, p.y});
    if (!f.ring.empty()) ring.push_back({f.ring.front().x, f.ring.front().y});
    json props = json::object();
    for (const std::string& key : property_order) {
      const auto it = f.properties.find(key);
      if (it != f.properties.end()) props[key] = it->second;
    }
    json feature;
    feature["type"] = "Feature";
    feature["properties"] = std::move(props);
    feature["geometry"] = {{"type", "Polygon"}, {"coordinates", json::array({ring})}};
    fc["features"].push_back(std::move(feature));
  }
  out << fc.dump(1) << '\n';
}

void save_geojson(const std::vector<PolygonFeature>& features,
                  const std::vector<std::string>& property_order,
                  const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw GeoJsonError("cannot open " + path.string() + " for writing");
  write_geojson(features, property_order, out);
  if (!out) throw GeoJsonError("failed writing " + path.string());
}

std::vector<PolygonFeature> read_geojson(std::istream& in) {
  std::vector<PolygonFeature> out;
  try {
    const json fc = json::parse(in);
    if (fc.at("type") != "FeatureCollection") throw GeoJsonError("not a FeatureCollection");
    for (const json& f : fc.at("features")) {
      const json& geom = f.at("geometry");
      if (geom.at("type") != "Polygon") continue;
      const json& rings = geom.at("coordinates");
      if (rings.empty()) throw GeoJsonError("polygon without rings");
      PolygonFeature pf;
      for (const json& c : rings.at(0)) pf.ring.push_back({c.at(0).get<double>(), c.at(1).get<double>()});
      if (pf.ring.size() >= 2 && pf.ring.front() == pf.ring.back()) pf.ring.pop_back();
      if (pf.ring.size() < 3) throw GeoJsonError("polygon ring with fewer than 3 vertices");
      if (f.contains("properties") && f["properties"].is_object()) {
        for (const auto& [key, value] : f["properties"].items()) {
          if (value.is_number()) pf.properties[key] = value.get<double>();
        }
      }
      out.push_back(std::move(pf));
    }
  } catch (const json::exception& e) {
    throw GeoJsonError(std::string("invalid GeoJSON: ") + e.what());
  }
  return out;
}

std::vector<PolygonFeature> load_geojson(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw GeoJsonError("cannot open " + path.string());
  return read_geojson(in);
}

}  // namespace stemseg
