#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace bmsprt {

/// Observables of one user session.
struct SessionRecord {
    std::int64_t timestamp = 0;  ///< epoch milliseconds
    std::uint32_t queries = 0;
    std::uint32_t successful_queries = 0;
    double revenue = 0.0;

    friend bool operator==(const SessionRecord&, const SessionRecord&) = default;
};

/// successful_queries <= queries and revenue is a finite nonnegative amount.
bool is_valid(const SessionRecord& r) noexcept;

/// A fixed-size batch of records: the unit of sequential observation.
struct Block {
    std::size_t index = 0;
    std::vector<SessionRecord> records;

    std::size_t size() const noexcept { return records.size(); }
    std::span<const SessionRecord> view() const noexcept { return records; }
};

/// Cuts `records` into consecutive blocks of exactly `block_size` records.
/// A trailing partial block is not emitted.
std::vector<Block> make_blocks(std::span<const SessionRecord> records, std::size_t block_size);

/// Streaming counterpart of make_blocks: buffers records and hands out a Block
/// each time `block_size` of them have arrived.
class BlockBuffer {
public:
    explicit BlockBuffer(std::size_t block_size);

    std::optional<Block> push(const SessionRecord& record);

    std::size_t block_size() const noexcept { return block_size_; }
    std::size_t pending() const noexcept { return pending_.size(); }
    std::size_t emitted() const noexcept { return next_index_; }

private:
    std::size_t block_size_;
    std::size_t next_index_ = 0;
    std::vector<SessionRecord> pending_;
};

}  // namespace bmsprt
