#include "bmsprt/session.hpp"

#include <cmath>
#include <stdexcept>

namespace bmsprt {

bool is_valid(const SessionRecord& r) noexcept {
    return r.successful_queries <= r.queries && std::isfinite(r.revenue) && r.revenue >= 0.0;
}

std::vector<Block> make_blocks(std::span<const SessionRecord> records, std::size_t block_size) {
    if (block_size == 0) throw std::invalid_argument("block size must be positive");
    std::vector<Block> blocks;
    blocks.reserve(records.size() / block_size);
    for (std::size_t start = 0; start + block_size <= records.size(); start += block_size) {
        auto chunk = records.subspan(start, block_size);
        blocks.push_back(Block{blocks.size(), {chunk.begin(), chunk.end()}});
    }
    return blocks;
}

BlockBuffer::BlockBuffer(std::size_t block_size) : block_size_(block_size) {
    if (block_size == 0) throw std::invalid_argument("block size must be positive");
    pending_.reserve(block_size);
}

std::optional<Block> BlockBuffer::push(const SessionRecord& record) {
    pending_.push_back(record);
    if (pending_.size() < block_size_) return std::nullopt;
    Block out{next_index_++, std::move(pending_)};
    pending_ = {};
    pending_.reserve(block_size_);
    return out;
}

}  // namespace bmsprt
