#include "bmsprt/split.hpp"

#include <stdexcept>

namespace bmsprt {

std::vector<bool> split_assignment(std::size_t n, Rng& rng) {
    std::vector<bool> out(n);
    std::uint64_t bits = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (i % 64 == 0) bits = rng();
        out[i] = (bits >> (i % 64)) & 1u;
    }
    return out;
}

std::pair<std::vector<SessionRecord>, std::vector<SessionRecord>> apply_split(
    std::span<const SessionRecord> records, const std::vector<bool>& assignment) {
    if (assignment.size() != records.size()) throw std::invalid_argument("assignment size mismatch");
    std::pair<std::vector<SessionRecord>, std::vector<SessionRecord>> groups;
    groups.first.reserve(records.size() / 2 + 1);
    groups.second.reserve(records.size() / 2 + 1);
    for (std::size_t i = 0; i < records.size(); ++i) {
        (assignment[i] ? groups.second : groups.first).push_back(records[i]);
    }
    return groups;
}

std::pair<std::vector<SessionRecord>, std::vector<SessionRecord>> random_split(
    std::span<const SessionRecord> records, Rng& rng) {
    return apply_split(records, split_assignment(records.size(), rng));
}

}  // namespace bmsprt
