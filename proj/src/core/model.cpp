#include "model.hpp"

#include <algorithm>

namespace stemseg {

std::size_t ModelState::active_count() const {
  return static_cast<std::size_t>(
      std::count_if(shapes.begin(), shapes.end(), [](const Shape& s) { return s.active(); }));
}

bool satisfies_invariants(const ModelState& state) {
  if (state.boxes.size() != state.shapes.size()) return false;
  for (std::size_t i = 0; i < state.shapes.size(); ++i) {
    const Shape& s = state.shapes[i];
    if (!state.bounds.contains(s.a, s.b)) return false;
    if (s.active() && !state.boxes[i].contains(s.center)) return false;
  }
  return true;
}

}  // namespace stemseg
