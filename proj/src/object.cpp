#include "handspan/object.hpp"

#include <cmath>

namespace handspan {

ObjectModel ObjectModel::sphere(std::string id, double r) {
  if (r <= 0) throw NonpositiveDimension("sphere radius must be positive");
  ObjectModel m;
  m.id = std::move(id);
  m.parts.push_back({SphereShape{r}, Eigen::Isometry3d::Identity()});
  m.contact_part = 0;
  return m;
}

ObjectModel ObjectModel::cylinder(std::string id, double r, double h) {
  if (r <= 0 || h <= 0) throw NonpositiveDimension("cylinder dimensions must be positive");
  ObjectModel m;
  m.id = std::move(id);
  m.parts.push_back({CylinderShape{r, h}, Eigen::Isometry3d::Identity()});
  m.contact_part = 0;
  return m;
}

int ObjectModel::contact_part_index() const {
  if (parts.empty()) throw UnsupportedShape("object '" + id + "' has no parts");
  if (contact_part >= 0) {
    if (contact_part >= static_cast<int>(parts.size()))
      throw UnsupportedShape("object '" + id + "': contact part out of range");
    return contact_part;
  }
  if (parts.size() == 1) return 0;
  throw UnsupportedShape("object '" + id + "': composite without a designated contact part");
}

double min_grasp_distance(const ObjectModel& object, double mu) {
  double r = object.contact_radius();
  return 2.0 * r * std::cos(std::atan(mu));
}

}  // namespace handspan
