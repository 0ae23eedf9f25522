#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace coreselect {

/// floor(x + 0.5) for non-negative x.
std::size_t round_half_up(double x);

/// Largest-remainder apportionment of `total` units in proportion to `weights`.
/// Floors first, then one extra unit per entry by descending fractional remainder
/// (ties to the lower index). The result sums to `total` exactly.
std::vector<std::size_t> largest_remainder(std::span<const double> weights, std::size_t total);

/// Water-filling allocation of `total` units across bins with capacities `capacity`,
/// starting from `initial` counts. Each round splits the outstanding units evenly over
/// bins that still have room; a bin that cannot take its share is filled and the
/// shortfall carries to the next round. Leftover units of a round (fewer than the open
/// bins) go one each in order of descending remaining capacity, ties to the lower index.
/// Requires total + sum(initial) <= sum(capacity).
std::vector<std::size_t> water_fill(std::span<const std::size_t> capacity, std::size_t total,
                                    std::vector<std::size_t> initial = {});

}  // namespace coreselect
