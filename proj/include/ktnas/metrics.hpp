#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "ktnas/common.hpp"

namespace ktnas {

// Flat prediction/label pairs pooled over the valid positions of all windows.
struct EvalBuffer {
    std::vector<double> pred;
    std::vector<int8_t> label;

    void add(double p, int y) {
        pred.push_back(p);
        label.push_back(static_cast<int8_t>(y));
    }

    void merge(const EvalBuffer& other) {
        pred.insert(pred.end(), other.pred.begin(), other.pred.end());
        label.insert(label.end(), other.label.begin(), other.label.end());
    }

    size_t size() const { return pred.size(); }
};

// Rank-based (Mann-Whitney) AUC with tied predictions counted half.
inline double auc(const EvalBuffer& buf) {
    require(buf.size() == buf.label.size(), "auc: prediction/label length mismatch");
    size_t n = buf.size();
    size_t n_pos = 0;
    for (int8_t y : buf.label) n_pos += (y == 1);
    size_t n_neg = n - n_pos;
    require(n_pos > 0 && n_neg > 0, "auc: both classes must be present");

    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), size_t{0});
    std::sort(order.begin(), order.end(),
              [&](size_t a, size_t b) { return buf.pred[a] < buf.pred[b]; });

    // Average ranks within tie groups; rank sums stay exact in double.
    double rank_sum_pos = 0.0;
    size_t i = 0;
    while (i < n) {
        size_t j = i;
        while (j + 1 < n && buf.pred[order[j + 1]] == buf.pred[order[i]]) ++j;
        double avg_rank = 0.5 * static_cast<double>(i + 1 + j + 1);
        for (size_t k = i; k <= j; ++k)
            if (buf.label[order[k]] == 1) rank_sum_pos += avg_rank;
        i = j + 1;
    }
    double np = static_cast<double>(n_pos);
    double nn = static_cast<double>(n_neg);
    return (rank_sum_pos - np * (np + 1.0) / 2.0) / (np * nn);
}

// Threshold 0.5, a prediction exactly at the threshold counts as positive.
inline double accuracy(const EvalBuffer& buf) {
    require(!buf.pred.empty(), "accuracy: empty buffer");
    size_t correct = 0;
    for (size_t i = 0; i < buf.size(); ++i) {
        int predicted = buf.pred[i] >= 0.5 ? 1 : 0;
        correct += (predicted == buf.label[i]);
    }
    return static_cast<double>(correct) / static_cast<double>(buf.size());
}

inline double rmse(const EvalBuffer& buf) {
    require(!buf.pred.empty(), "rmse: empty buffer");
    double sq = 0.0;
    for (size_t i = 0; i < buf.size(); ++i) {
        double d = buf.pred[i] - static_cast<double>(buf.label[i]);
        sq += d * d;
    }
    return std::sqrt(sq / static_cast<double>(buf.size()));
}

}  // namespace ktnas
