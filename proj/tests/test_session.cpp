#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "bmsprt/rng.hpp"
#include "bmsprt/session.hpp"
#include "bmsprt/split.hpp"
#include "support.hpp"

using namespace bmsprt;

TEST_SUITE("session") {
    TEST_CASE("record invariants") {
        CHECK(is_valid(SessionRecord{0, 3, 2, 1.5}));
        CHECK(is_valid(SessionRecord{0, 0, 0, 0.0}));
        CHECK_FALSE(is_valid(SessionRecord{0, 2, 3, 0.0}));
        CHECK_FALSE(is_valid(SessionRecord{0, 1, 1, -0.5}));
    }

    TEST_CASE("make_blocks keeps only full blocks") {
        std::vector<SessionRecord> recs(10);
        for (std::size_t i = 0; i < recs.size(); ++i) recs[i].timestamp = static_cast<std::int64_t>(i);
        const auto blocks = make_blocks(recs, 3);
        REQUIRE(blocks.size() == 3);
        for (std::size_t k = 0; k < blocks.size(); ++k) {
            CHECK(blocks[k].index == k);
            CHECK(blocks[k].size() == 3);
            CHECK(blocks[k].records.front().timestamp == static_cast<std::int64_t>(3 * k));
        }
    }

    TEST_CASE("block buffer emits exactly N records and buffers the rest") {
        BlockBuffer buf(4);
        std::vector<Block> out;
        for (int i = 0; i < 10; ++i) {
            if (auto b = buf.push(SessionRecord{i, 1, 0, 0.0})) out.push_back(std::move(*b));
        }
        REQUIRE(out.size() == 2);
        CHECK(out[0].size() == 4);
        CHECK(out[1].index == 1);
        CHECK(out[1].records.front().timestamp == 4);
        CHECK(buf.pending() == 2);
        CHECK(buf.emitted() == 2);
    }

    TEST_CASE("derived seeds separate streams") {
        std::set<std::uint64_t> seen;
        for (std::uint64_t s = 0; s < 4; ++s) {
            for (std::uint64_t t = 0; t < 256; ++t) seen.insert(derive_seed(s, t));
        }
        CHECK(seen.size() == 4 * 256);
        CHECK(make_rng(9, 3)() == make_rng(9, 3)());
    }

    TEST_CASE("random split is a partition with balanced sizes") {
        const auto recs = testing::bernoulli(100'000, 0.05, 3);
        Rng rng(17);
        const auto [a, b] = random_split(recs, rng);
        CHECK(a.size() + b.size() == recs.size());
        const double bound = 4.0 * std::sqrt(recs.size() / 4.0);
        CHECK(std::fabs(static_cast<double>(a.size()) - static_cast<double>(b.size())) <= bound);

        // union equals the input multiset; timestamps are unique so compare those
        std::vector<std::int64_t> ts;
        for (const auto& r : a) ts.push_back(r.timestamp);
        for (const auto& r : b) ts.push_back(r.timestamp);
        std::sort(ts.begin(), ts.end());
        for (std::size_t i = 0; i < ts.size(); ++i) REQUIRE(ts[i] == recs[i].timestamp);

        // time order survives inside each group
        CHECK(std::is_sorted(a.begin(), a.end(),
                             [](const SessionRecord& x, const SessionRecord& y) { return x.timestamp < y.timestamp; }));

        Rng again(17);
        const auto [a2, b2] = random_split(recs, again);
        CHECK(a2 == a);
        CHECK(b2 == b);
    }
}
