#pragma once

#include <filesystem>
#include <map>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "geometry.hpp"

namespace stemseg {

/// A polygon feature. The ring is stored open (no repeated closing vertex);
/// numeric properties only.
struct PolygonFeature {
  Ring ring;
  std::map<std::string, double> properties;
};

class GeoJsonError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// FeatureCollection of Polygon features with closed rings. Properties are
/// written in the order given by `property_order`; missing keys are skipped.
void write_geojson(const std::vector<PolygonFeature>& features,
                   const std::vector<std::string>& property_order, std::ostream& out);
void save_geojson(const std::vector<PolygonFeature>& features,
                  const std::vector<std::string>& property_order,
                  const std::filesystem::path& path);

/// Reads the outer ring of every Polygon feature. Non-numeric properties are
/// ignored.
std::vector<PolygonFeature> read_geojson(std::istream& in);
std::vector<PolygonFeature> load_geojson(const std::filesystem::path& path);

}  // namespace stemseg
