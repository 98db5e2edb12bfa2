#include "planforge/bitmap.hpp"

#include <algorithm>
#include <bit>

namespace planforge {

namespace {

constexpr size_t kWords = 65536 / 64;

inline uint16_t high(uint32_t id) { return uint16_t(id >> 16); }
inline uint16_t low(uint32_t id) { return uint16_t(id & 0xffff); }

// Visits the set values of a container in ascending order.
template <class Fn> void for_each_value(const std::vector<uint64_t> &words, Fn &&fn) {
    for (size_t w = 0; w < words.size(); ++w) {
        uint64_t bits = words[w];
        while (bits) {
            unsigned tz = unsigned(std::countr_zero(bits));
            fn(uint16_t(w * 64 + tz));
            bits &= bits - 1;
        }
    }
}

} // namespace

bool CompressedBitmap::Container::contains(uint16_t v) const {
    if (dense()) return (words[v >> 6] >> (v & 63)) & 1;
    return std::binary_search(array.begin(), array.end(), v);
}

bool CompressedBitmap::Container::add(uint16_t v) {
    if (dense()) {
        uint64_t &w = words[v >> 6];
        uint64_t mask = uint64_t(1) << (v & 63);
        if (w & mask) return false;
        w |= mask;
        ++count;
        return true;
    }
    auto it = std::lower_bound(array.begin(), array.end(), v);
    if (it != array.end() && *it == v) return false;
    array.insert(it, v);
    ++count;
    if (array.size() > kArrayMax) to_dense();
    return true;
}

void CompressedBitmap::Container::to_dense() {
    words.assign(kWords, 0);
    for (uint16_t v : array) words[v >> 6] |= uint64_t(1) << (v & 63);
    array.clear();
    array.shrink_to_fit();
}

CompressedBitmap::Container &CompressedBitmap::container_for(uint16_t key) {
    auto it = std::lower_bound(chunks_.begin(), chunks_.end(), key,
                               [](const Chunk &c, uint16_t k) { return c.key < k; });
    if (it == chunks_.end() || it->key != key) it = chunks_.insert(it, Chunk{key, {}});
    return it->container;
}

const CompressedBitmap::Container *CompressedBitmap::find(uint16_t key) const {
    auto it = std::lower_bound(chunks_.begin(), chunks_.end(), key,
                               [](const Chunk &c, uint16_t k) { return c.key < k; });
    if (it == chunks_.end() || it->key != key) return nullptr;
    return &it->container;
}

void CompressedBitmap::add(uint32_t id) {
    if (container_for(high(id)).add(low(id))) ++cardinality_;
}

bool CompressedBitmap::contains(uint32_t id) const {
    const Container *c = find(high(id));
    return c && c->contains(low(id));
}

size_t CompressedBitmap::dense_chunk_count() const {
    size_t n = 0;
    for (const Chunk &c : chunks_)
        if (c.container.dense()) ++n;
    return n;
}

uint64_t CompressedBitmap::intersect_containers(const Container &a, const Container &b) {
    if (a.dense() && b.dense()) {
        uint64_t n = 0;
        for (size_t w = 0; w < kWords; ++w) n += uint64_t(std::popcount(a.words[w] & b.words[w]));
        return n;
    }
    if (!a.dense() && !b.dense()) {
        uint64_t n = 0;
        auto ia = a.array.begin(), ib = b.array.begin();
        while (ia != a.array.end() && ib != b.array.end()) {
            if (*ia < *ib)
                ++ia;
            else if (*ib < *ia)
                ++ib;
            else {
                ++n;
                ++ia;
                ++ib;
            }
        }
        return n;
    }
    const Container &sparse = a.dense() ? b : a;
    const Container &dense = a.dense() ? a : b;
    uint64_t n = 0;
    for (uint16_t v : sparse.array) n += uint64_t(dense.contains(v));
    return n;
}

uint64_t intersect_cardinality(const CompressedBitmap &a, const CompressedBitmap &b) {
    uint64_t n = 0;
    auto ia = a.chunks_.begin(), ib = b.chunks_.begin();
    while (ia != a.chunks_.end() && ib != b.chunks_.end()) {
        if (ia->key < ib->key)
            ++ia;
        else if (ib->key < ia->key)
            ++ib;
        else {
            n += CompressedBitmap::intersect_containers(ia->container, ib->container);
            ++ia;
            ++ib;
        }
    }
    return n;
}

uint64_t intersect_cardinality(const CompressedBitmap &a, const CompressedBitmap &b,
                               const CompressedBitmap &c) {
    uint64_t n = 0;
    for (const auto &chunk : a.chunks_) {
        const CompressedBitmap::Container *cb = b.find(chunk.key);
        if (!cb) continue;
        const CompressedBitmap::Container *cc = c.find(chunk.key);
        if (!cc) continue;
        const CompressedBitmap::Container *parts[3] = {&chunk.container, cb, cc};
        std::sort(std::begin(parts), std::end(parts),
                  [](auto *l, auto *r) { return l->count < r->count; });
        auto probe = [&](uint16_t v) {
            if (parts[1]->contains(v) && parts[2]->contains(v)) ++n;
        };
        if (parts[0]->dense())
            for_each_value(parts[0]->words, probe);
        else
            for (uint16_t v : parts[0]->array) probe(v);
    }
    return n;
}

} // namespace planforge
