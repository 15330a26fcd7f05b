// SPDX-License-Identifier: Apache-2.0
#include "sdn/assembly.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace sdn {

using nlohmann::json;

const PartDef& PartCatalog::part(int id) const {
  if (id < 1 || id > part_count()) throw InvalidArgument("part id out of range");
  return parts[static_cast<size_t>(id - 1)];
}

int PartCatalog::id_of(const std::string& name) const {
  for (const auto& p : parts)
    if (p.name == name) return p.id;
  throw InvalidArgument("unknown part name: " + name);
}

const std::vector<int>& PartCatalog::neighbors(int id) const {
  return adj_lists_[static_cast<size_t>(id - 1)];
}

double PartCatalog::bounding_radius() const {
  double r2 = 0;
  for (const auto& p : parts) {
    for (const auto& b : p.boxes) {
      for (int corner = 0; corner < 8; ++corner) {
        Vec3 local{b.center.x + ((corner & 1) ? 0.5 : -0.5) * b.size.x,
                   b.center.y + ((corner & 2) ? 0.5 : -0.5) * b.size.y,
                   b.center.z + ((corner & 4) ? 0.5 : -0.5) * b.size.z};
        Vec3 w = p.transform.apply(local);
        r2 = std::max(r2, w.dot(w));
      }
    }
  }
  return std::sqrt(r2);
}

void PartCatalog::validate() {
  int p = part_count();
  if (p < 1) throw ValidationError("catalog has no parts");
  if (p > 32) throw ValidationError("catalog exceeds 32 parts (state bitmask limit)");
  for (int i = 0; i < p; ++i) {
    if (parts[static_cast<size_t>(i)].id != i + 1)
      throw ValidationError("part ids must be dense integers 1..P in order");
    if (parts[static_cast<size_t>(i)].boxes.empty())
      throw ValidationError("part '" + parts[static_cast<size_t>(i)].name + "' has no geometry");
    for (const auto& b : parts[static_cast<size_t>(i)].boxes)
      if (b.size.x <= 0 || b.size.y <= 0 || b.size.z <= 0)
        throw ValidationError("part '" + parts[static_cast<size_t>(i)].name +
                              "' has a box with non-positive extent");
  }
  std::set<std::string> names;
  std::set<std::array<uint8_t, 3>> colors;
  for (const auto& part : parts) {
    if (!names.insert(part.name).second)
      throw ValidationError("duplicate part name: " + part.name);
    if (!colors.insert(part.color).second)
      throw ValidationError("part colors must be distinct (duplicate on '" + part.name + "')");
  }
  if (base_part < 1 || base_part > p) throw ValidationError("base_part missing from catalog");
  adj_lists_.assign(static_cast<size_t>(p), {});
  std::set<std::pair<int, int>> seen;
  for (auto [a, b] : adjacency) {
    if (a < 1 || a > p || b < 1 || b > p || a == b)
      throw ValidationError("adjacency references invalid part ids");
    if (a > b) std::swap(a, b);
    if (!seen.insert({a, b}).second) continue;
    adj_lists_[static_cast<size_t>(a - 1)].push_back(b);
    adj_lists_[static_cast<size_t>(b - 1)].push_back(a);
  }
  for (auto& l : adj_lists_) std::sort(l.begin(), l.end());
  // full-graph connectivity
  std::vector<char> vis(static_cast<size_t>(p), 0);
  std::vector<int> stack{base_part};
  vis[static_cast<size_t>(base_part - 1)] = 1;
  while (!stack.empty()) {
    int cur = stack.back();
    stack.pop_back();
    for (int nb : adj_lists_[static_cast<size_t>(cur - 1)]) {
      if (!vis[static_cast<size_t>(nb - 1)]) {
        vis[static_cast<size_t>(nb - 1)] = 1;
        stack.push_back(nb);
      }
    }
  }
  for (int i = 0; i < p; ++i)
    if (!vis[static_cast<size_t>(i)])
      throw ValidationError("adjacency graph is not connected: part '" +
                            parts[static_cast<size_t>(i)].name + "' is unreachable");
}

static Vec3 parse_vec3(const json& j, const char* what) {
  if (!j.is_array() || j.size() != 3) throw ParseError(std::string(what) + " must be a 3-array");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

PartCatalog load_catalog(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("catalog parse error: ") + e.what());
  }
  PartCatalog cat;
  try {
    if (!doc.contains("base_part")) throw ValidationError("base_part missing from catalog");
    for (const auto& jp : doc.at("parts")) {
      PartDef p;
      p.id = jp.at("id").get<int>();
      p.name = jp.at("name").get<std::string>();
      auto col = jp.at("color");
      p.color = {col.at(0).get<uint8_t>(), col.at(1).get<uint8_t>(), col.at(2).get<uint8_t>()};
      if (jp.contains("translation"))
        p.transform.translation = parse_vec3(jp["translation"], "translation");
      if (jp.contains("rotation")) {
        const auto& q = jp["rotation"];
        p.transform.rotation =
            Quaternion{q.at(0).get<double>(), q.at(1).get<double>(), q.at(2).get<double>(),
                       q.at(3).get<double>()}
                .normalized();
      }
      for (const auto& jb : jp.at("boxes")) {
        Box b;
        b.center = parse_vec3(jb.at("center"), "box center");
        b.size = parse_vec3(jb.at("size"), "box size");
        p.boxes.push_back(b);
      }
      cat.parts.push_back(std::move(p));
    }
    std::sort(cat.parts.begin(), cat.parts.end(),
              [](const PartDef& a, const PartDef& b) { return a.id < b.id; });
    std::string base_name = doc.at("base_part").get<std::string>();
    for (const auto& ja : doc.at("adjacency")) {
      if (!ja.is_array() || ja.size() != 2) throw ValidationError("adjacency entries must be pairs");
      cat.adjacency.emplace_back(0, 0);
      auto& e = cat.adjacency.back();
      // names or ids accepted
      auto resolve = [&cat](const json& v) {
        if (v.is_string()) {
          for (const auto& p : cat.parts)
            if (p.name == v.get<std::string>()) return p.id;
          throw ValidationError("adjacency references unknown part '" + v.get<std::string>() + "'");
        }
        return v.get<int>();
      };
      e.first = resolve(ja[0]);
      e.second = resolve(ja[1]);
    }
    bool base_found = false;
    for (const auto& p : cat.parts)
      if (p.name == base_name) {
        cat.base_part = p.id;
        base_found = true;
      }
    if (!base_found) throw ValidationError("base_part '" + base_name + "' missing from catalog");
  } catch (const json::exception& e) {
    throw ParseError(std::string("catalog schema error: ") + e.what());
  }
  cat.validate();
  return cat;
}

PartCatalog load_catalog_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open catalog file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return load_catalog(ss.str());
}

AssemblyState full_state(const PartCatalog& cat) {
  AssemblyState s;
  for (int id = 1; id <= cat.part_count(); ++id) s.add(id);
  return s;
}

bool state_valid(const PartCatalog& cat, const AssemblyState& s) {
  if (!s.contains(cat.base_part)) return false;
  std::vector<int> stack{cat.base_part};
  uint32_t vis = 1u << (cat.base_part - 1);
  while (!stack.empty()) {
    int cur = stack.back();
    stack.pop_back();
    for (int nb : cat.neighbors(cur)) {
      uint32_t bit = 1u << (nb - 1);
      if (s.contains(nb) && !(vis & bit)) {
        vis |= bit;
        stack.push_back(nb);
      }
    }
  }
  return vis == s.mask;
}

// parts whose removal keeps the state valid
static std::vector<int> removable_parts(const PartCatalog& cat, const AssemblyState& s,
                                        uint32_t frozen_mask) {
  std::vector<int> out;
  for (int id = 1; id <= cat.part_count(); ++id) {
    if (!s.contains(id) || id == cat.base_part) continue;
    if (frozen_mask & (1u << (id - 1))) continue;
    AssemblyState t = s;
    t.remove(id);
    if (state_valid(cat, t)) out.push_back(id);
  }
  return out;
}

static uint32_t constraint_masks(const PartCatalog& cat, const StateConstraints& c,
                                 uint32_t* never_mask) {
  uint32_t always = 1u << (cat.base_part - 1);
  for (int id : c.always_present) {
    if (id < 1 || id > cat.part_count()) throw InvalidArgument("constraint part id out of range");
    always |= 1u << (id - 1);
  }
  uint32_t never = 0;
  for (int id : c.never_present) {
    if (id < 1 || id > cat.part_count()) throw InvalidArgument("constraint part id out of range");
    never |= 1u << (id - 1);
  }
  if (always & never) throw InvalidArgument("a part is both always-present and never-present");
  if (never_mask) *never_mask = never;
  return always;
}

AssemblyState sample_state(const PartCatalog& cat, Rng& rng, const StateConstraints& constraints) {
  uint32_t never = 0;
  uint32_t always = constraint_masks(cat, constraints, &never);
  AssemblyState s = full_state(cat);
  // strip never-present parts (order: descending id keeps leaves first)
  for (int id = cat.part_count(); id >= 1; --id)
    if (never & (1u << (id - 1))) s.remove(id);
  if (!state_valid(cat, s))
    throw GenerationError("never-present constraints disconnect the assembly");
  int steps = static_cast<int>(rng.uniform_int(0, cat.part_count() - 1));
  for (int i = 0; i < steps; ++i) {
    auto removable = removable_parts(cat, s, always);
    if (removable.empty()) break;
    int pick = static_cast<int>(rng.uniform_int(0, static_cast<int>(removable.size()) - 1));
    s.remove(removable[static_cast<size_t>(pick)]);
  }
  return s;
}

PartDiff part_diff(const AssemblyState& a, const AssemblyState& b) {
  PartDiff d;
  uint32_t only_a = a.mask & ~b.mask;
  uint32_t only_b = b.mask & ~a.mask;
  for (int id = 1; id <= 32; ++id) {
    uint32_t bit = 1u << (id - 1);
    if (only_a & bit) d.only_in_a.push_back(id);
    if (only_b & bit) d.only_in_b.push_back(id);
  }
  return d;
}

std::pair<AssemblyState, AssemblyState> sample_state_pair(const PartCatalog& cat, int d_min,
                                                          int d_max,
                                                          const StateConstraints& constraints,
                                                          Rng& rng, int retry_cap) {
  if (d_min < 0 || d_min > d_max || d_max > cat.part_count())
    throw InvalidArgument("require 0 <= d_min <= d_max <= part count");
  for (int attempt = 0; attempt < retry_cap; ++attempt) {
    AssemblyState a = sample_state(cat, rng, constraints);
    AssemblyState b = (d_max == 0) ? a : sample_state(cat, rng, constraints);
    int d = part_diff(a, b).count();
    if (d >= d_min && d <= d_max) return {a, b};
  }
  throw GenerationError("no state pair with diff in [" + std::to_string(d_min) + "," +
                        std::to_string(d_max) + "] found within retry cap");
}

std::vector<uint32_t> enumerate_valid_states(const PartCatalog& cat,
                                             const StateConstraints& constraints) {
  uint32_t never = 0;
  uint32_t always = constraint_masks(cat, constraints, &never);
  int p = cat.part_count();
  uint32_t base_bit = 1u << (cat.base_part - 1);
  std::vector<uint32_t> out;
  uint32_t top = p >= 32 ? 0xFFFFFFFFu : ((1u << p) - 1);
  for (uint64_t m = 0; m <= top; ++m) {
    uint32_t mask = static_cast<uint32_t>(m);
    if (!(mask & base_bit)) continue;
    if ((mask & always) != always) continue;
    if (mask & never) continue;
    AssemblyState s{mask};
    if (state_valid(cat, s)) out.push_back(mask);
  }
  return out;
}

}  // namespace sdn
