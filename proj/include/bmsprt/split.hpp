#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "bmsprt/rng.hpp"
#include "bmsprt/session.hpp"

namespace bmsprt {

/// One fair coin per record; true sends the record to group B.
std::vector<bool> split_assignment(std::size_t n, Rng& rng);

/// Partitions records by `assignment`, keeping arrival order inside each group.
std::pair<std::vector<SessionRecord>, std::vector<SessionRecord>> apply_split(
    std::span<const SessionRecord> records, const std::vector<bool>& assignment);

/// Each record independently to A or B with probability 1/2.
std::pair<std::vector<SessionRecord>, std::vector<SessionRecord>> random_split(
    std::span<const SessionRecord> records, Rng& rng);

}  // namespace bmsprt
