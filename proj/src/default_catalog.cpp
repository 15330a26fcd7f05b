// SPDX-License-Identifier: Apache-2.0
#include "sdn/assembly.hpp"

namespace sdn {

// 16-part toy vehicle: chassis base, two axles carrying four wheels, cabin and
// roof, front/rear brackets, a pulley on the rear bracket, and four fasteners.
// Schema: see README ("Catalog files").
const std::string& default_catalog_json() {
  static const std::string text = R"JSON({
  "base_part": "chassis",
  "parts": [
    {"id": 1, "name": "chassis", "color": [70, 85, 110],
     "boxes": [{"center": [0.0, 0.5, 0.0], "size": [2.4, 0.4, 1.2]}]},
    {"id": 2, "name": "axle_front", "color": [150, 150, 155],
     "boxes": [{"center": [0.8, 0.3, 0.0], "size": [0.16, 0.16, 1.7]}]},
    {"id": 3, "name": "axle_rear", "color": [120, 125, 135],
     "boxes": [{"center": [-0.8, 0.3, 0.0], "size": [0.16, 0.16, 1.7]}]},
    {"id": 4, "name": "wheel_1", "color": [45, 45, 48],
     "boxes": [{"center": [0.8, 0.3, 0.95], "size": [0.5, 0.5, 0.2]}]},
    {"id": 5, "name": "wheel_2", "color": [58, 52, 48],
     "boxes": [{"center": [0.8, 0.3, -0.95], "size": [0.5, 0.5, 0.2]}]},
    {"id": 6, "name": "wheel_3", "color": [48, 58, 52],
     "boxes": [{"center": [-0.8, 0.3, 0.95], "size": [0.5, 0.5, 0.2]}]},
    {"id": 7, "name": "wheel_4", "color": [52, 48, 58],
     "boxes": [{"center": [-0.8, 0.3, -0.95], "size": [0.5, 0.5, 0.2]}]},
    {"id": 8, "name": "cabin", "color": [190, 80, 60],
     "boxes": [{"center": [0.25, 1.0, 0.0], "size": [1.1, 0.6, 1.0]}]},
    {"id": 9, "name": "roof", "color": [220, 170, 60],
     "boxes": [{"center": [0.25, 1.375, 0.0], "size": [1.25, 0.15, 1.15]}]},
    {"id": 10, "name": "front_bracket", "color": [70, 160, 90],
     "boxes": [{"center": [1.3, 0.975, 0.0], "size": [0.18, 0.55, 0.8]},
               {"center": [1.1, 0.76, 0.0], "size": [0.5, 0.12, 0.8]}]},
    {"id": 11, "name": "rear_bracket", "color": [90, 120, 200],
     "boxes": [{"center": [-1.25, 1.0, 0.0], "size": [0.2, 0.6, 0.8]}]},
    {"id": 12, "name": "pulley", "color": [180, 90, 170],
     "boxes": [{"center": [-1.25, 1.47, 0.0], "size": [0.34, 0.34, 0.34]}]},
    {"id": 13, "name": "fastener_1", "color": [230, 230, 80],
     "boxes": [{"center": [0.25, 1.05, 0.57], "size": [0.14, 0.14, 0.14]}]},
    {"id": 14, "name": "fastener_2", "color": [80, 220, 220],
     "boxes": [{"center": [0.25, 1.52, -0.35], "size": [0.14, 0.14, 0.14]}]},
    {"id": 15, "name": "fastener_3", "color": [240, 140, 190],
     "boxes": [{"center": [1.46, 1.0, 0.25], "size": [0.14, 0.14, 0.14]}]},
    {"id": 16, "name": "fastener_4", "color": [150, 220, 90],
     "boxes": [{"center": [-1.42, 1.05, -0.25], "size": [0.14, 0.14, 0.14]}]}
  ],
  "adjacency": [
    ["chassis", "axle_front"], ["chassis", "axle_rear"],
    ["axle_front", "wheel_1"], ["axle_front", "wheel_2"],
    ["axle_rear", "wheel_3"], ["axle_rear", "wheel_4"],
    ["chassis", "cabin"], ["cabin", "roof"],
    ["chassis", "front_bracket"], ["chassis", "rear_bracket"],
    ["rear_bracket", "pulley"],
    ["cabin", "fastener_1"], ["roof", "fastener_2"],
    ["front_bracket", "fastener_3"], ["rear_bracket", "fastener_4"]
  ]
})JSON";
  return text;
}

PartCatalog default_catalog() { return load_catalog(default_catalog_json()); }

}  // namespace sdn
