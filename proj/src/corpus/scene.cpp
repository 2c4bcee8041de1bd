#include <set>

#include "lexipivot/corpus/types.hpp"
#include "lexipivot/error.hpp"

namespace lexipivot {

Scene::Scene(std::size_t grid_side, std::vector<Slot> slots, std::uint64_t scene_id)
    : grid_side_(grid_side), slots_(std::move(slots)), scene_id_(scene_id) {
  if (grid_side_ == 0) throw InputError("scene grid side must be positive");
  if (slots_.empty()) {
    throw InputError("scene " + std::to_string(scene_id_) + " has no populated region");
  }
  std::set<std::size_t> used;
  for (const auto& slot : slots_) {
    if (slot.region >= region_count()) {
      throw InputError("scene " + std::to_string(scene_id_) + ": region " +
                       std::to_string(slot.region) + " outside grid of " +
                       std::to_string(region_count()));
    }
    if (!used.insert(slot.region).second) {
      throw InputError("scene " + std::to_string(scene_id_) + ": region " +
                       std::to_string(slot.region) + " holds two concepts");
    }
  }
}

std::size_t Scene::region_of(std::uint32_t concept_id) const noexcept {
  for (const auto& slot : slots_) {
    if (slot.concept_id == concept_id) return slot.region;
  }
  return region_count();
}

std::size_t Scene::region_of_attribute(std::uint32_t attribute_id) const noexcept {
  for (const auto& slot : slots_) {
    for (auto a : slot.attribute_ids) {
      if (a == attribute_id) return slot.region;
    }
  }
  return region_count();
}

std::string Caption::raw_text() const {
  std::string out;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i) out += ' ';
    out += words[i];
  }
  return out;
}

}  // namespace lexipivot
