// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "sdn/geometry.hpp"
#include "sdn/rng.hpp"
#include "sdn/util.hpp"

namespace sdn {

// Axis-aligned box in the part-local frame: center and full extents.
struct Box {
  Vec3 center;
  Vec3 size;
};

struct RigidTransform {
  Quaternion rotation;
  Vec3 translation;

  Vec3 apply(const Vec3& p) const { return rotation.rotate(p) + translation; }
};

struct PartDef {
  int id = 0;  // dense 1..P, 0 reserved for background
  std::string name;
  std::vector<Box> boxes;
  RigidTransform transform;
  std::array<uint8_t, 3> color{200, 200, 200};
};

class PartCatalog {
 public:
  std::vector<PartDef> parts;                 // sorted by id
  std::vector<std::pair<int, int>> adjacency;  // symmetric relation, ids
  int base_part = 0;

  int part_count() const { return static_cast<int>(parts.size()); }
  const PartDef& part(int id) const;
  int id_of(const std::string& name) const;  // throws if unknown
  const std::vector<int>& neighbors(int id) const;

  // Radius of the bounding sphere of the full assembly about the origin.
  double bounding_radius() const;

  // Checks all catalog invariants; throws ValidationError naming the violation.
  void validate();

 private:
  std::vector<std::vector<int>> adj_lists_;
};

// Present-part set over a fixed catalog, stored as a bitmask (bit id-1).
struct AssemblyState {
  uint32_t mask = 0;

  bool contains(int id) const { return (mask >> (id - 1)) & 1u; }
  void add(int id) { mask |= (1u << (id - 1)); }
  void remove(int id) { mask &= ~(1u << (id - 1)); }
  int count() const { return __builtin_popcount(mask); }
  std::vector<int> part_ids(int part_count) const {
    std::vector<int> out;
    for (int id = 1; id <= part_count; ++id)
      if (contains(id)) out.push_back(id);
    return out;
  }
  bool operator==(const AssemblyState& o) const { return mask == o.mask; }
};

struct PartDiff {
  std::vector<int> only_in_a;  // sorted
  std::vector<int> only_in_b;  // sorted

  int count() const { return static_cast<int>(only_in_a.size() + only_in_b.size()); }
};

struct StateConstraints {
  std::vector<int> always_present;
  std::vector<int> never_present;
};

// Parses and validates a catalog from its JSON document text.
PartCatalog load_catalog(const std::string& json_text);
PartCatalog load_catalog_file(const std::string& path);

// The bundled 16-part toy-vehicle catalog.
const std::string& default_catalog_json();
PartCatalog default_catalog();

AssemblyState full_state(const PartCatalog& cat);

// True iff the present set is non-empty, contains base_part, and is connected
// under the catalog adjacency.
bool state_valid(const PartCatalog& cat, const AssemblyState& s);

// Starts from the full assembly and removes uniformly-chosen removable parts
// for a uniform number of steps in [0, P-1]. Parts in constraints.never_present
// are removed first; constraints.always_present parts are never removed.
AssemblyState sample_state(const PartCatalog& cat, Rng& rng,
                           const StateConstraints& constraints = {});

PartDiff part_diff(const AssemblyState& a, const AssemblyState& b);

// Rejection-samples two states whose part-diff count lies in [d_min, d_max].
// Throws GenerationError after retry_cap failed attempts.
std::pair<AssemblyState, AssemblyState> sample_state_pair(const PartCatalog& cat, int d_min,
                                                          int d_max,
                                                          const StateConstraints& constraints,
                                                          Rng& rng, int retry_cap = 100000);

// All valid states (connected, base present, constraints honored). Feasible for
// the bundled catalog; used by diversity and support checks.
std::vector<uint32_t> enumerate_valid_states(const PartCatalog& cat,
                                             const StateConstraints& constraints = {});

}  // namespace sdn
