#pragma once

#include <cstdint>

#include "snm/dataset.hpp"
#include "snm/percentile.hpp"

namespace snm {

// Deterministic percentile instance with a controlled repetition radius j:
// a run of 2j+1 copies of the central value flanked by distinct values, with
// the flanks kept slightly off-balance so the candidate grid's mean does not
// coincide with the target (a perfectly balanced grid would make every
// mechanism's expected error vanish identically).
PercentileInstance synthetic_percentile_instance(int j = 5, int n = 101,
                                                 int p = 50,
                                                 double lambda = 100.0);

// Deterministic two-class tabular dataset over binary attributes. Attribute
// a0 equals the class except on the first `flipped_rows` rows, so the MaxOp
// gap at the root is controlled by the flip count (gap ~ n/2 - 2*flips);
// the remaining attributes alternate with longer periods and carry no class
// signal. rows must be a multiple of 4 to keep the noise attributes exactly
// balanced.
TabularDataset synthetic_tabular(int rows, int noise_attrs, int flipped_rows);

}  // namespace snm
