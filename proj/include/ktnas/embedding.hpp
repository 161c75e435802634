#pragma once

#include <utility>
#include <vector>

#include "ktnas/common.hpp"
#include "ktnas/features.hpp"
#include "ktnas/nn.hpp"

namespace ktnas {

// Shared embedding tables: one per candidate feature plus the learned
// positional table. Encoder and decoder draw from the same bank.
template <class S>
struct EmbeddingBank {
    std::vector<Mat<S>> cate;  // kNumCategoricalFeatures tables, rows x D
    std::vector<Mat<S>> cont;  // kNumContinuousFeatures projections, 1 x D
    Mat<S> positional;         // L x D
};

template <class S>
Mat<S> embed_rows(const Mat<S>& table, const std::vector<int32_t>& idx) {
    Mat<S> out(static_cast<index_t>(idx.size()), table.cols());
    for (size_t r = 0; r < idx.size(); ++r) {
        require(idx[r] >= 0 && idx[r] < table.rows(),
                "embed: categorical index " + std::to_string(idx[r]) + " out of range [0, " +
                    std::to_string(table.rows()) + ")");
        out.row(static_cast<index_t>(r)) = table.row(idx[r]);
    }
    return out;
}

template <class S>
void embed_rows_backward(const std::vector<int32_t>& idx, const Mat<S>& dy, Mat<S>& g_table) {
    for (size_t r = 0; r < idx.size(); ++r)
        g_table.row(idx[r]) += dy.row(static_cast<index_t>(r));
}

template <class S>
Mat<S> embed_continuous(const Mat<S>& proj, const std::vector<S>& vals) {
    Mat<S> out(static_cast<index_t>(vals.size()), proj.cols());
    for (size_t r = 0; r < vals.size(); ++r)
        out.row(static_cast<index_t>(r)) = vals[r] * proj.row(0);
    return out;
}

template <class S>
void embed_continuous_backward(const std::vector<S>& vals, const Mat<S>& dy, Mat<S>& g_proj) {
    for (size_t r = 0; r < vals.size(); ++r)
        g_proj.row(0) += vals[r] * dy.row(static_cast<index_t>(r));
}

// ---------------------------------------------------------------------------
// Input fusion. The hierarchical module fuses every selected pair (i, j),
// i < j, through its own tanh projection; pair slots touching a non-selected
// feature stay zero, so the output projection keeps a fixed size regardless
// of the selection. The concat variant exists for the fixed-architecture
// ablation presets.
// ---------------------------------------------------------------------------
enum class FusionMode { hierarchical, concat };

template <class S>
struct FusionParams {
    FusionMode mode = FusionMode::hierarchical;
    std::vector<Mat<S>> pair_w;  // P entries of (2D x D), canonical pair order
    Mat<S> out_w;                // (P*D) x D
    Mat<S> concat_w;             // (Num*D) x D, concat mode only
};

template <class S>
struct FusionCache {
    std::vector<int> slots;                   // active pair slots
    std::vector<std::pair<int, int>> pairs;   // matching (i, j)
    std::vector<Mat<S>> fused;                // post-tanh temp feature per active slot
};

// embeds[i] must be filled for every selected feature i. Output is the fused
// (B*L) x D input with the positional embedding added per window.
template <class S>
Mat<S> fusion_forward(const FusionParams<S>& p, const std::vector<Mat<S>>& embeds,
                      const std::vector<int>& bits, const Mat<S>& positional, int batch,
                      int seq_len, FusionCache<S>& cache) {
    const int num = static_cast<int>(bits.size());
    const index_t d = positional.cols();
    const index_t rows = static_cast<index_t>(batch) * seq_len;
    Mat<S> out = Mat<S>::Zero(rows, d);

    if (p.mode == FusionMode::hierarchical) {
        cache.slots.clear();
        cache.pairs.clear();
        cache.fused.clear();
        for (int i = 0; i < num; ++i) {
            if (!bits[static_cast<size_t>(i)]) continue;
            for (int j = i + 1; j < num; ++j) {
                if (!bits[static_cast<size_t>(j)]) continue;
                int slot = pair_slot(i, j, num);
                const Mat<S>& w = p.pair_w[static_cast<size_t>(slot)];
                Mat<S> t = (embeds[static_cast<size_t>(i)] * w.topRows(d) +
                            embeds[static_cast<size_t>(j)] * w.bottomRows(d))
                               .array()
                               .tanh();
                out.noalias() += t * p.out_w.middleRows(static_cast<index_t>(slot) * d, d);
                cache.slots.push_back(slot);
                cache.pairs.emplace_back(i, j);
                cache.fused.push_back(std::move(t));
            }
        }
    } else {
        for (int i = 0; i < num; ++i) {
            if (!bits[static_cast<size_t>(i)]) continue;
            out.noalias() +=
                embeds[static_cast<size_t>(i)] * p.concat_w.middleRows(static_cast<index_t>(i) * d, d);
        }
    }

    for (int b = 0; b < batch; ++b)
        out.middleRows(static_cast<index_t>(b) * seq_len, seq_len) += positional;
    return out;
}

template <class S>
void fusion_backward(const FusionParams<S>& p, const FusionCache<S>& cache,
                     const std::vector<Mat<S>>& embeds, const std::vector<int>& bits,
                     const Mat<S>& dy, int batch, int seq_len, FusionParams<S>& g,
                     std::vector<Mat<S>>& d_embeds, Mat<S>& g_positional) {
    const index_t d = g_positional.cols();
    for (int b = 0; b < batch; ++b)
        g_positional += dy.middleRows(static_cast<index_t>(b) * seq_len, seq_len);

    if (p.mode == FusionMode::hierarchical) {
        for (size_t a = 0; a < cache.slots.size(); ++a) {
            int slot = cache.slots[a];
            auto [i, j] = cache.pairs[a];
            const Mat<S>& t = cache.fused[a];
            auto w_out = p.out_w.middleRows(static_cast<index_t>(slot) * d, d);
            g.out_w.middleRows(static_cast<index_t>(slot) * d, d).noalias() += t.transpose() * dy;
            Mat<S> dt = dy * w_out.transpose();
            Mat<S> dpre = (static_cast<S>(1) - t.array().square()) * dt.array();
            const Mat<S>& w = p.pair_w[static_cast<size_t>(slot)];
            Mat<S>& gw = g.pair_w[static_cast<size_t>(slot)];
            gw.topRows(d).noalias() += embeds[static_cast<size_t>(i)].transpose() * dpre;
            gw.bottomRows(d).noalias() += embeds[static_cast<size_t>(j)].transpose() * dpre;
            d_embeds[static_cast<size_t>(i)].noalias() += dpre * w.topRows(d).transpose();
            d_embeds[static_cast<size_t>(j)].noalias() += dpre * w.bottomRows(d).transpose();
        }
    } else {
        const int num = static_cast<int>(bits.size());
        for (int i = 0; i < num; ++i) {
            if (!bits[static_cast<size_t>(i)]) continue;
            auto w_i = p.concat_w.middleRows(static_cast<index_t>(i) * d, d);
            g.concat_w.middleRows(static_cast<index_t>(i) * d, d).noalias() +=
                embeds[static_cast<size_t>(i)].transpose() * dy;
            d_embeds[static_cast<size_t>(i)].noalias() += dy * w_i.transpose();
        }
    }
}

}  // namespace ktnas
