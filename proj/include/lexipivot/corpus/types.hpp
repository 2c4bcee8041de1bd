#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace lexipivot {

using TokenSeq = std::vector<int>;

struct Slot {
  std::size_t region = 0;
  std::uint32_t concept_id = 0;
  std::vector<std::uint32_t> attribute_ids;
};

/// Grid of grid_side^2 regions with at most one concept per region.
class Scene {
 public:
  /// Throws InputError when the slot layout is invalid or empty.
  Scene(std::size_t grid_side, std::vector<Slot> slots, std::uint64_t scene_id);

  std::size_t grid_side() const noexcept { return grid_side_; }
  std::size_t region_count() const noexcept { return grid_side_ * grid_side_; }
  const std::vector<Slot>& slots() const noexcept { return slots_; }
  std::uint64_t scene_id() const noexcept { return scene_id_; }

  /// Region holding the concept, or region_count() when absent.
  std::size_t region_of(std::uint32_t concept_id) const noexcept;
  /// Region of the first object carrying the attribute, or region_count().
  std::size_t region_of_attribute(std::uint32_t attribute_id) const noexcept;

 private:
  std::size_t grid_side_;
  std::vector<Slot> slots_;
  std::uint64_t scene_id_;
};

/// K x D region features standing in for an encoded image.
struct SpatialImage {
  std::uint64_t image_id = 0;
  std::size_t regions = 0;
  std::size_t dim = 0;
  std::vector<float> data;  // row-major, one region per row

  std::span<const float> region(std::size_t k) const {
    return std::span<const float>(data).subspan(k * dim, dim);
  }
  bool operator==(const SpatialImage&) const = default;
};

/// Caption as words, before vocabulary lookup.
struct Caption {
  std::uint64_t scene_id = 0;
  std::string language;
  std::vector<std::string> words;

  std::string raw_text() const;
  bool operator==(const Caption&) const = default;
};

/// Caption as vocabulary indices with begin/end sentinels.
struct CaptionedExample {
  std::uint64_t scene_id = 0;
  std::string language;
  TokenSeq tokens;
  std::string raw_text;
};

}  // namespace lexipivot
