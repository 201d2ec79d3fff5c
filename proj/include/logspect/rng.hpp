#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace logspect {

/// Deterministic child seed for (root, a, b, ...). Streams for different
/// trial indices or sample counts are independent of each other, so any
/// sub-grid of an experiment reproduces on its own.
inline std::uint64_t derive_seed(std::uint64_t root, std::initializer_list<std::uint64_t> path) {
    std::vector<std::uint32_t> words;
    words.reserve(2 + 2 * path.size());
    auto push = [&](std::uint64_t v) {
        words.push_back(static_cast<std::uint32_t>(v & 0xffffffffu));
        words.push_back(static_cast<std::uint32_t>(v >> 32));
    };
    push(root);
    for (auto v : path) push(v);
    std::seed_seq seq(words.begin(), words.end());
    std::uint32_t out[2];
    seq.generate(out, out + 2);
    return (static_cast<std::uint64_t>(out[1]) << 32) | out[0];
}

}  // namespace logspect
