#pragma once

#include <cstdint>
#include <vector>

#include "bmsprt/harness.hpp"
#include "bmsprt/session.hpp"

namespace testing {

inline bmsprt::SessionRecord qs(std::uint32_t q, std::uint32_t s) {
    return bmsprt::SessionRecord{0, q, s, 0.0};
}

inline bmsprt::SessionRecord rev(double r) { return bmsprt::SessionRecord{0, 0, 0, r}; }

inline std::vector<bmsprt::SessionRecord> correlated(std::size_t n, std::uint64_t seed) {
    bmsprt::SyntheticConfig cfg;
    cfg.n_sessions = n;
    cfg.seed = seed;
    return bmsprt::generate_sessions(cfg);
}

inline std::vector<bmsprt::SessionRecord> bernoulli(std::size_t n, double p, std::uint64_t seed) {
    bmsprt::SyntheticConfig cfg;
    cfg.n_sessions = n;
    cfg.model = bmsprt::BernoulliSessions{p};
    cfg.seed = seed;
    return bmsprt::generate_sessions(cfg);
}

}  // namespace testing
