#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "ktnas/common.hpp"

namespace ktnas {

// The candidate input features, in their canonical order. This order fixes
// gene positions in selection vectors and the lexicographic pair slots of the
// hierarchical fusion module, so it must never be reordered.
enum class FeatureId : int {
    exer = 0,       // exercise id
    sk,             // skill id
    tag,            // tag id
    tagset,         // tag-set id
    bund,           // bundle / explanation id
    ans,            // previous response, shifted by one
    cont_ela,       // continuous elapsed time (shifted)
    cate_ela_s,     // elapsed time bucketed to seconds (shifted)
    cont_lag,       // continuous lag time
    cate_lag_s,     // lag time bucketed to seconds
    cate_lag_m,     // lag time bucketed to minutes
    cate_lag_d,     // lag time bucketed to days
};

inline constexpr int kNumFeatures = 12;
inline constexpr int kNumCategoricalFeatures = 10;
inline constexpr int kNumContinuousFeatures = 2;

enum class FeatureKind { categorical, continuous };

struct FeatureInfo {
    const char* name;
    FeatureKind kind;
    int kind_slot;  // index within the categorical or continuous stream arrays
};

inline const std::array<FeatureInfo, kNumFeatures>& feature_catalog() {
    static const std::array<FeatureInfo, kNumFeatures> catalog = {{
        {"exer", FeatureKind::categorical, 0},
        {"sk", FeatureKind::categorical, 1},
        {"tag", FeatureKind::categorical, 2},
        {"tagset", FeatureKind::categorical, 3},
        {"bund", FeatureKind::categorical, 4},
        {"ans", FeatureKind::categorical, 5},
        {"cont_ela", FeatureKind::continuous, 0},
        {"cate_ela_s", FeatureKind::categorical, 6},
        {"cont_lag", FeatureKind::continuous, 1},
        {"cate_lag_s", FeatureKind::categorical, 7},
        {"cate_lag_m", FeatureKind::categorical, 8},
        {"cate_lag_d", FeatureKind::categorical, 9},
    }};
    return catalog;
}

inline const FeatureInfo& feature_info(int fid) { return feature_catalog()[static_cast<size_t>(fid)]; }

inline std::string feature_name(int fid) { return feature_info(fid).name; }

// Time bucket caps. Index 0 of every categorical table is reserved for
// start/padding, so bucket b is stored as index b + 1.
inline constexpr int64_t kElapsedSecondsCap = 300;
inline constexpr int64_t kLagSecondsCap = 300;
inline constexpr int64_t kLagMinutesCap = 1440;
inline constexpr int64_t kLagDaysCap = 365;

inline int64_t elapsed_seconds_bucket(int64_t elapsed_ms) {
    int64_t s = elapsed_ms / 1000;
    return s < kElapsedSecondsCap ? s : kElapsedSecondsCap;
}

inline int64_t lag_seconds_bucket(int64_t lag_ms) {
    int64_t s = lag_ms / 1000;
    return s < kLagSecondsCap ? s : kLagSecondsCap;
}

inline int64_t lag_minutes_bucket(int64_t lag_ms) {
    int64_t m = lag_ms / 60000;
    return m < kLagMinutesCap ? m : kLagMinutesCap;
}

inline int64_t lag_days_bucket(int64_t lag_ms) {
    int64_t d = lag_ms / 86400000;
    return d < kLagDaysCap ? d : kLagDaysCap;
}

// Pair slots of the fusion module: all unordered feature pairs (i, j), i < j,
// in lexicographic order over the canonical feature order.
inline int num_pairs(int num_features) { return num_features * (num_features - 1) / 2; }

inline int pair_slot(int i, int j, int num_features) {
    // slot of pair (i, j), i < j, 0-based
    return i * num_features - i * (i + 1) / 2 + (j - i - 1);
}

inline std::vector<std::pair<int, int>> all_pairs(int num_features) {
    std::vector<std::pair<int, int>> pairs;
    pairs.reserve(static_cast<size_t>(num_pairs(num_features)));
    for (int i = 0; i < num_features; ++i)
        for (int j = i + 1; j < num_features; ++j) pairs.emplace_back(i, j);
    return pairs;
}

}  // namespace ktnas
