#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace wormchain {

using Vertex = std::uint32_t;
using EdgeId = std::uint32_t;

/// Dense bit set over the edge indices of a fixed graph.
class EdgeSubset {
  public:
    using word_type = std::uint64_t;
    static constexpr std::size_t word_bits = 64;

    EdgeSubset() = default;
    explicit EdgeSubset(std::size_t edge_count)
        : words_((edge_count + word_bits - 1) / word_bits, 0), size_(edge_count) {}

    /// Subset whose low bits are given by `mask` (edge i present iff bit i is set).
    static EdgeSubset from_mask(std::size_t edge_count, std::uint64_t mask) {
        EdgeSubset s(edge_count);
        for (std::size_t e = 0; e < edge_count && e < word_bits; ++e)
            if ((mask >> e) & 1U) s.set(static_cast<EdgeId>(e));
        return s;
    }

    [[nodiscard]] std::size_t universe_size() const noexcept { return size_; }

    [[nodiscard]] bool contains(EdgeId e) const noexcept {
        return (words_[e / word_bits] >> (e % word_bits)) & 1U;
    }
    void set(EdgeId e) noexcept { words_[e / word_bits] |= word_type{1} << (e % word_bits); }
    void reset(EdgeId e) noexcept { words_[e / word_bits] &= ~(word_type{1} << (e % word_bits)); }
    /// Toggles membership; returns true if the edge is present afterwards.
    bool flip(EdgeId e) noexcept {
        word_type& w = words_[e / word_bits];
        w ^= word_type{1} << (e % word_bits);
        return (w >> (e % word_bits)) & 1U;
    }

    [[nodiscard]] std::size_t count() const noexcept {
        std::size_t c = 0;
        for (word_type w : words_) c += static_cast<std::size_t>(std::popcount(w));
        return c;
    }
    [[nodiscard]] bool empty() const noexcept {
        for (word_type w : words_)
            if (w != 0) return false;
        return true;
    }

    [[nodiscard]] word_type* words_data() noexcept { return words_.data(); }
    [[nodiscard]] const word_type* words_data() const noexcept { return words_.data(); }

    /// Low 64 bits; exact whenever the universe has at most 64 edges.
    [[nodiscard]] std::uint64_t to_mask() const noexcept { return words_.empty() ? 0 : words_[0]; }

    /// Edge indices in increasing order.
    [[nodiscard]] std::vector<EdgeId> members() const {
        std::vector<EdgeId> out;
        for (std::size_t i = 0; i < words_.size(); ++i) {
            word_type w = words_[i];
            while (w != 0) {
                out.push_back(static_cast<EdgeId>(i * word_bits + static_cast<std::size_t>(std::countr_zero(w))));
                w &= w - 1;
            }
        }
        return out;
    }

    EdgeSubset& operator^=(const EdgeSubset& o) noexcept {
        for (std::size_t i = 0; i < words_.size(); ++i) words_[i] ^= o.words_[i];
        return *this;
    }
    EdgeSubset& operator&=(const EdgeSubset& o) noexcept {
        for (std::size_t i = 0; i < words_.size(); ++i) words_[i] &= o.words_[i];
        return *this;
    }
    EdgeSubset& operator-=(const EdgeSubset& o) noexcept {
        for (std::size_t i = 0; i < words_.size(); ++i) words_[i] &= ~o.words_[i];
        return *this;
    }
    friend EdgeSubset operator^(EdgeSubset a, const EdgeSubset& b) noexcept { return a ^= b; }
    friend EdgeSubset operator&(EdgeSubset a, const EdgeSubset& b) noexcept { return a &= b; }
    friend EdgeSubset operator-(EdgeSubset a, const EdgeSubset& b) noexcept { return a -= b; }

    friend bool operator==(const EdgeSubset&, const EdgeSubset&) = default;
    /// Lexicographic on the sorted edge-index lists.
    friend bool operator<(const EdgeSubset& a, const EdgeSubset& b) { return a.members() < b.members(); }

  private:
    std::vector<word_type> words_;
    std::size_t size_ = 0;
};

}  // namespace wormchain
