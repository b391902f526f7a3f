#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cooplane/scenario.hpp"

namespace cooplane {

/// Two lanes. A parked car blocks the ego's lane; the other lane carries a
/// slow platoon whose gaps are too short for a courteous merge.
Scenario case1();

/// Three lanes with distinct speeds: fast and tight on the left, slow and
/// loose on the right. The ego sits in the middle behind a slower leader.
Scenario case2();

inline constexpr double kRandomWindowBehind = 150.0;
inline constexpr double kRandomWindowAhead = 250.0;

/// Randomized three-lane traffic at `density` vehicles per lane-km over the
/// recycling window. Lanes get progressively faster to the left.
Scenario random3lane(std::uint64_t seed, double density);

/// Densities cycled over batch episodes.
inline const std::vector<double> kDefaultDensities{10.0, 15.0, 20.0};

/// Scenario of batch episode `episode`: random3lane with the density cycled
/// through kDefaultDensities.
Scenario batch_scenario(int episode, std::uint64_t seed);

/// "case1", "case2", "random3lane" (density from the seed's episode slot,
/// seed used as given), or "random3lane:<density>". Throws on unknown names.
Scenario builtin_scenario(const std::string& name, std::uint64_t seed);

std::vector<std::string> builtin_scenario_names();

}  // namespace cooplane
