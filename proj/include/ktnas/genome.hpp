#pragma once

#include <algorithm>
#include <array>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "ktnas/common.hpp"
#include "ktnas/rng.hpp"

namespace ktnas {

using BigInt = boost::multiprecision::cpp_int;

// Local operation codes: 0 = zero op, 1..4 = causal conv with kernel 3/5/7/11.
inline constexpr int kNumLocalOps = 5;
inline constexpr std::array<int, 4> kConvKernels = {3, 5, 7, 11};

// Global operation codes: 0 = zero op, 1 = FFN, 2 = masked MHSA.
inline constexpr int kNumGlobalOps = 3;

inline int conv_kernel_of(int lo_code) { return kConvKernels[static_cast<size_t>(lo_code - 1)]; }

inline std::string local_op_name(int code) {
    static const char* names[] = {"zero", "conv3", "conv5", "conv7", "conv11"};
    return names[code];
}

inline std::string global_op_name(int code) {
    static const char* names[] = {"zero", "FFN", "MHSA"};
    return names[code];
}

struct BlockConfig {
    int lo = 0;
    int go1 = 2;
    int go2 = 1;
};

// One architecture: which embeddings feed each side plus the (lo, go1, go2)
// triplet of every block. Blocks are stored encoder-first, then decoder.
struct Genome {
    std::vector<int> select_en;  // 0/1 per feature
    std::vector<int> select_de;
    std::vector<BlockConfig> blocks;  // 2N entries

    int num_features() const { return static_cast<int>(select_en.size()); }
    int blocks_per_side() const { return static_cast<int>(blocks.size()) / 2; }

    const BlockConfig& encoder_block(int i) const { return blocks[static_cast<size_t>(i)]; }
    const BlockConfig& decoder_block(int i) const {
        return blocks[static_cast<size_t>(blocks_per_side() + i)];
    }

    bool operator==(const Genome& other) const {
        return select_en == other.select_en && select_de == other.select_de &&
               [&] {
                   if (blocks.size() != other.blocks.size()) return false;
                   for (size_t i = 0; i < blocks.size(); ++i)
                       if (blocks[i].lo != other.blocks[i].lo || blocks[i].go1 != other.blocks[i].go1 ||
                           blocks[i].go2 != other.blocks[i].go2)
                           return false;
                   return true;
               }();
    }
};

enum class GeneKind { select_en, select_de, lo, go1, go2 };

// Flat gene layout: [b_En | b_De | (lo, go1, go2) x 2N].
inline int genome_length(int num_features, int blocks_per_side) {
    return 2 * num_features + 6 * blocks_per_side;
}

inline std::vector<int> encode(const Genome& g) {
    std::vector<int> v;
    v.reserve(static_cast<size_t>(genome_length(g.num_features(), g.blocks_per_side())));
    v.insert(v.end(), g.select_en.begin(), g.select_en.end());
    v.insert(v.end(), g.select_de.begin(), g.select_de.end());
    for (const BlockConfig& b : g.blocks) {
        v.push_back(b.lo);
        v.push_back(b.go1);
        v.push_back(b.go2);
    }
    return v;
}

inline Genome decode(const std::vector<int>& v, int num_features, int blocks_per_side) {
    require(static_cast<int>(v.size()) == genome_length(num_features, blocks_per_side),
            "decode: gene vector length " + std::to_string(v.size()) + " does not match 2*" +
                std::to_string(num_features) + " + 6*" + std::to_string(blocks_per_side));
    Genome g;
    g.select_en.assign(v.begin(), v.begin() + num_features);
    g.select_de.assign(v.begin() + num_features, v.begin() + 2 * num_features);
    for (int bit : g.select_en)
        require(bit == 0 || bit == 1, "decode: selection gene out of range {0,1}");
    for (int bit : g.select_de)
        require(bit == 0 || bit == 1, "decode: selection gene out of range {0,1}");
    for (int t = 0; t < 2 * blocks_per_side; ++t) {
        BlockConfig b;
        b.lo = v[static_cast<size_t>(2 * num_features + 3 * t)];
        b.go1 = v[static_cast<size_t>(2 * num_features + 3 * t + 1)];
        b.go2 = v[static_cast<size_t>(2 * num_features + 3 * t + 2)];
        require(b.lo >= 0 && b.lo < kNumLocalOps,
                "decode: lo gene " + std::to_string(b.lo) + " out of range {0..4}");
        require(b.go1 >= 0 && b.go1 < kNumGlobalOps,
                "decode: go1 gene " + std::to_string(b.go1) + " out of range {0..2}");
        require(b.go2 >= 0 && b.go2 < kNumGlobalOps,
                "decode: go2 gene " + std::to_string(b.go2) + " out of range {0..2}");
        g.blocks.push_back(b);
    }
    return g;
}

// Per-gene admissible value sets, shrunk over the generations of a search run.
struct SearchSpace {
    int num_features = 0;
    int blocks_per_side = 0;
    std::vector<std::vector<int>> sets;  // ascending values per gene position

    static SearchSpace initial(int num_features, int blocks_per_side) {
        SearchSpace s;
        s.num_features = num_features;
        s.blocks_per_side = blocks_per_side;
        int len = genome_length(num_features, blocks_per_side);
        s.sets.resize(static_cast<size_t>(len));
        for (int pos = 0; pos < len; ++pos) {
            switch (s.kind(pos)) {
                case GeneKind::select_en:
                case GeneKind::select_de:
                    s.sets[static_cast<size_t>(pos)] = {0, 1};
                    break;
                case GeneKind::lo:
                    s.sets[static_cast<size_t>(pos)] = {0, 1, 2, 3, 4};
                    break;
                case GeneKind::go1:
                case GeneKind::go2:
                    s.sets[static_cast<size_t>(pos)] = {0, 1, 2};
                    break;
            }
        }
        return s;
    }

    int length() const { return static_cast<int>(sets.size()); }

    GeneKind kind(int pos) const {
        if (pos < num_features) return GeneKind::select_en;
        if (pos < 2 * num_features) return GeneKind::select_de;
        switch ((pos - 2 * num_features) % 3) {
            case 0: return GeneKind::lo;
            case 1: return GeneKind::go1;
            default: return GeneKind::go2;
        }
    }

    bool admissible(int pos, int value) const {
        const auto& set = sets[static_cast<size_t>(pos)];
        return std::find(set.begin(), set.end(), value) != set.end();
    }

    bool remove(int pos, int value) {
        auto& set = sets[static_cast<size_t>(pos)];
        if (set.size() <= 1) return false;
        auto it = std::find(set.begin(), set.end(), value);
        if (it == set.end()) return false;
        set.erase(it);
        return true;
    }

    // True if gene position pos belongs to a selection vector and its
    // admissible set still contains 1.
    bool selection_can_be_one(int pos) const { return admissible(pos, 1); }
};

inline bool valid_under(const Genome& g, const SearchSpace& space) {
    std::vector<int> v = encode(g);
    if (static_cast<int>(v.size()) != space.length()) return false;
    for (int pos = 0; pos < space.length(); ++pos)
        if (!space.admissible(pos, v[static_cast<size_t>(pos)])) return false;
    int sum_en = 0, sum_de = 0;
    for (int b : g.select_en) sum_en += b;
    for (int b : g.select_de) sum_de += b;
    return sum_en >= 1 && sum_de >= 1;
}

namespace detail {

// Forces at least one selected feature; the bit to raise is chosen uniformly
// among the bits whose admissible set still contains 1.
inline void repair_selection(std::vector<int>& bits, const SearchSpace& space, int pos_offset,
                             Rng& rng) {
    int sum = 0;
    for (int b : bits) sum += b;
    if (sum >= 1) return;
    std::vector<int> candidates;
    for (int i = 0; i < static_cast<int>(bits.size()); ++i)
        if (space.selection_can_be_one(pos_offset + i)) candidates.push_back(i);
    require(!candidates.empty(), "selection repair: no gene may take value 1 in this search space");
    int pick = candidates[static_cast<size_t>(rng.uniform_int(0, static_cast<int64_t>(candidates.size()) - 1))];
    bits[static_cast<size_t>(pick)] = 1;
}

}  // namespace detail

using GenomeConstraint = std::function<bool(const Genome&)>;

// Uniform per-gene sampling from the admissible sets, with the >= 1 selection
// constraint repaired in place. An optional constraint (e.g. a parameter
// budget) is enforced by rejection, up to 100 tries.
inline Genome sample(const SearchSpace& space, Rng& rng,
                     const GenomeConstraint& constraint = nullptr,
                     const std::string& constraint_label = "constraint") {
    for (int attempt = 0; attempt < 100; ++attempt) {
        std::vector<int> v(static_cast<size_t>(space.length()));
        for (int pos = 0; pos < space.length(); ++pos) {
            const auto& set = space.sets[static_cast<size_t>(pos)];
            v[static_cast<size_t>(pos)] =
                set[static_cast<size_t>(rng.uniform_int(0, static_cast<int64_t>(set.size()) - 1))];
        }
        Genome g = decode(v, space.num_features, space.blocks_per_side);
        detail::repair_selection(g.select_en, space, 0, rng);
        detail::repair_selection(g.select_de, space, space.num_features, rng);
        if (!constraint || constraint(g)) return g;
    }
    throw std::runtime_error("sample: no genome satisfied " + constraint_label + " in 100 tries");
}

namespace detail {

// Number of selection-vector assignments with at least one 1, given per-bit
// admissible sets. The all-zero assignment is only reachable when every bit
// still admits 0.
inline BigInt selection_count(const SearchSpace& space, int pos_offset, int n_bits) {
    BigInt total = 1;
    bool all_zero_possible = true;
    for (int i = 0; i < n_bits; ++i) {
        const auto& set = space.sets[static_cast<size_t>(pos_offset + i)];
        total *= static_cast<int>(set.size());
        if (!std::count(set.begin(), set.end(), 0)) all_zero_possible = false;
    }
    if (all_zero_possible) total -= 1;
    return total;
}

}  // namespace detail

// Exact count of constraint-satisfying genomes in the space.
inline BigInt space_size(const SearchSpace& space) {
    BigInt total = detail::selection_count(space, 0, space.num_features) *
                   detail::selection_count(space, space.num_features, space.num_features);
    for (int pos = 2 * space.num_features; pos < space.length(); ++pos)
        total *= static_cast<int>(space.sets[static_cast<size_t>(pos)].size());
    return total;
}

inline std::string pretty_print(const Genome& g) {
    std::string out = "encoder features:";
    for (int i = 0; i < g.num_features(); ++i)
        if (g.select_en[static_cast<size_t>(i)]) out += " " + std::to_string(i + 1);
    out += "\ndecoder features:";
    for (int i = 0; i < g.num_features(); ++i)
        if (g.select_de[static_cast<size_t>(i)]) out += " " + std::to_string(i + 1);
    for (int side = 0; side < 2; ++side) {
        for (int i = 0; i < g.blocks_per_side(); ++i) {
            const BlockConfig& b = side == 0 ? g.encoder_block(i) : g.decoder_block(i);
            out += "\n" + std::string(side == 0 ? "encoder" : "decoder") + " block " +
                   std::to_string(i + 1) + ": (" + local_op_name(b.lo) + ", " +
                   global_op_name(b.go1) + ", " + global_op_name(b.go2) + ")";
        }
    }
    return out;
}

}  // namespace ktnas
