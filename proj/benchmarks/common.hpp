#pragma once

#include "irkit/pdngen.hpp"

namespace bench {

// Two-layer PDN whose bottom stripes hold about `stripe_nodes` nodes each.
inline irkit::GenConfig stripe_config(double stripe_nodes) {
  irkit::GenConfig c;
  c.chip_width_um = stripe_nodes;
  c.chip_height_um = 20;
  c.layers = {{1, irkit::Axis::Horizontal, 4, 0.1}, {2, irkit::Axis::Vertical, 20, 0.05}};
  c.tap_step_um = 1.0;
  c.pad_rule = irkit::PadRule::StripeEnds;
  c.sink_count = static_cast<int>(stripe_nodes);
  c.seed = 17;
  return c;
}

// Square three-layer PDN.
inline irkit::GenConfig square_config(double side_um) {
  irkit::GenConfig c;
  c.chip_width_um = side_um;
  c.chip_height_um = side_um;
  c.layers = {{1, irkit::Axis::Horizontal, 2, 0.1}, {2, irkit::Axis::Vertical, 4, 0.05},
              {3, irkit::Axis::Horizontal, 10, 0.02}};
  c.tap_step_um = 2.0;
  c.pad_rule = irkit::PadRule::StripeEnds;
  c.sink_count = static_cast<int>(side_um * side_um / 10);
  c.seed = 3;
  return c;
}

}  // namespace bench
