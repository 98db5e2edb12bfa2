#pragma once

#include <cstdint>
#include <vector>

namespace planforge {

// Set of 32-bit ids, partitioned into 2^16-value chunks by the high half of
// the id. A chunk holds a sorted array of low halves while it has at most
// kArrayMax entries and switches to an 8KB bitset beyond that; containers
// never shrink back. Cardinalities are maintained, so counting is O(1) and
// count-intersect never materializes the intersection.
class CompressedBitmap {
  public:
    static constexpr size_t kArrayMax = 4096;

    void add(uint32_t id);               // idempotent
    bool contains(uint32_t id) const;
    uint64_t cardinality() const { return cardinality_; }

    size_t chunk_count() const { return chunks_.size(); }
    size_t dense_chunk_count() const;

    friend uint64_t intersect_cardinality(const CompressedBitmap &a, const CompressedBitmap &b);
    friend uint64_t intersect_cardinality(const CompressedBitmap &a, const CompressedBitmap &b,
                                          const CompressedBitmap &c);

  private:
    struct Container {
        std::vector<uint16_t> array;  // sorted, unique; empty once dense
        std::vector<uint64_t> words;  // 1024 words when dense, else empty
        uint32_t count = 0;

        bool dense() const { return !words.empty(); }
        bool add(uint16_t low);       // returns true when newly inserted
        bool contains(uint16_t low) const;
        void to_dense();
    };

    struct Chunk {
        uint16_t key = 0;             // high 16 bits of the ids it holds
        Container container;
    };

    std::vector<Chunk> chunks_;       // sorted by key
    uint64_t cardinality_ = 0;

    Container &container_for(uint16_t key);
    const Container *find(uint16_t key) const;

    static uint64_t intersect_containers(const Container &a, const Container &b);
};

uint64_t intersect_cardinality(const CompressedBitmap &a, const CompressedBitmap &b);

// |a ∩ b ∩ c| by probing the smallest container of each shared chunk against
// the other two; nothing is materialized.
uint64_t intersect_cardinality(const CompressedBitmap &a, const CompressedBitmap &b,
                               const CompressedBitmap &c);

} // namespace planforge
