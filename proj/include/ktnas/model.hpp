#pragma once

#include <array>
#include <string>
#include <vector>

#include <json.hpp>

#include "ktnas/common.hpp"
#include "ktnas/dataset.hpp"
#include "ktnas/embedding.hpp"
#include "ktnas/genome.hpp"
#include "ktnas/nn.hpp"
#include "ktnas/supernet.hpp"

namespace ktnas {

// ---------------------------------------------------------------------------
// Batches: windows flattened to (B*L) rows.
// ---------------------------------------------------------------------------
template <class S>
struct Batch {
    int batch = 0;
    int seq_len = 0;
    std::array<std::vector<int32_t>, kNumCategoricalFeatures> cat;
    std::array<std::vector<S>, kNumContinuousFeatures> cont;
    std::vector<uint8_t> valid;
    std::vector<int8_t> target;

    index_t rows() const { return static_cast<index_t>(batch) * seq_len; }
};

template <class S>
Batch<S> make_batch(const std::vector<SequenceWindow>& windows, const std::vector<int>& which) {
    require(!which.empty(), "make_batch: empty selection");
    Batch<S> b;
    b.batch = static_cast<int>(which.size());
    b.seq_len = static_cast<int>(windows[static_cast<size_t>(which[0])].target.size());
    size_t rows = static_cast<size_t>(b.batch) * static_cast<size_t>(b.seq_len);
    for (auto& v : b.cat) v.reserve(rows);
    for (auto& v : b.cont) v.reserve(rows);
    b.valid.reserve(rows);
    b.target.reserve(rows);
    for (int idx : which) {
        const SequenceWindow& w = windows[static_cast<size_t>(idx)];
        require(static_cast<int>(w.target.size()) == b.seq_len, "make_batch: mixed window lengths");
        for (int slot = 0; slot < kNumCategoricalFeatures; ++slot)
            b.cat[static_cast<size_t>(slot)].insert(b.cat[static_cast<size_t>(slot)].end(),
                                                    w.cat[static_cast<size_t>(slot)].begin(),
                                                    w.cat[static_cast<size_t>(slot)].end());
        for (int c = 0; c < kNumContinuousFeatures; ++c)
            for (float v : w.cont[static_cast<size_t>(c)])
                b.cont[static_cast<size_t>(c)].push_back(static_cast<S>(v));
        b.valid.insert(b.valid.end(), w.valid.begin(), w.valid.end());
        b.target.insert(b.target.end(), w.target.begin(), w.target.end());
    }
    return b;
}

// ---------------------------------------------------------------------------
// Block forward/backward per the searchable two-path layout:
//   x1 = LN(X)
//   gp = LN(x1 + GO1(x1))            (GO1 zero keeps the LN of x1)
//   gp = gp + MHSA(gp, O_En, O_En)   (decoder only, fixed cross attention)
//   lp = LN(x1 + LO(x1)), or 0 when LO is the zero op
//   h  = lp + gp;  h = h + GO2(h)
// The zero local op removes the whole local path so that an all-global genome
// degenerates to the vanilla pre-LN encoder/decoder block.
// ---------------------------------------------------------------------------
template <class S>
struct BlockTrace {
    LayerNormCache<S> ln_in;
    Mat<S> x1;
    AttentionCache<S> go1_attn;
    FfnCache<S> go1_ffn;
    DropoutCache<S> go1_drop;
    LayerNormCache<S> ln_gp;
    AttentionCache<S> cross;
    DropoutCache<S> cross_drop;
    ConvCache<S> conv;
    DropoutCache<S> lo_drop;
    LayerNormCache<S> ln_lp;
    AttentionCache<S> go2_attn;
    FfnCache<S> go2_ffn;
    DropoutCache<S> go2_drop;
};

namespace detail {

inline void check_block_config(const BlockConfig& cfg) {
    require(cfg.lo >= 0 && cfg.lo < kNumLocalOps, "block: lo code out of range");
    require(cfg.go1 >= 0 && cfg.go1 < kNumGlobalOps, "block: go1 code out of range");
    require(cfg.go2 >= 0 && cfg.go2 < kNumGlobalOps, "block: go2 code out of range");
}

}  // namespace detail

template <class S>
Mat<S> block_forward(const BlockSlotParams<S>& p, const BlockConfig& cfg, const Mat<S>& x,
                     const Mat<S>* enc_out, int batch, int seq_len,
                     const std::vector<uint8_t>& valid, double dropout_rate, Rng* rng,
                     BlockTrace<S>& tr) {
    detail::check_block_config(cfg);
    tr.x1 = layer_norm_forward(p.ln_in, x, tr.ln_in);

    Mat<S> gp;
    if (cfg.go1 == 0) {
        gp = layer_norm_forward(p.ln_gp, tr.x1, tr.ln_gp);
    } else {
        Mat<S> u = cfg.go1 == 2
                       ? attention_forward(p.go1.attn, tr.x1, tr.x1, tr.x1, batch, seq_len, valid,
                                           tr.go1_attn)
                       : ffn_forward(p.go1.ffn, tr.x1, tr.go1_ffn);
        u = dropout_forward(u, dropout_rate, rng, tr.go1_drop);
        Mat<S> sum = tr.x1 + u;
        gp = layer_norm_forward(p.ln_gp, sum, tr.ln_gp);
    }
    if (p.is_decoder) {
        require(enc_out != nullptr, "block: decoder needs encoder output");
        Mat<S> c = attention_forward(p.cross, gp, *enc_out, *enc_out, batch, seq_len, valid, tr.cross);
        c = dropout_forward(c, dropout_rate, rng, tr.cross_drop);
        gp += c;
    }

    Mat<S> h;
    if (cfg.lo == 0) {
        h = gp;  // local path contributes nothing
    } else {
        const ConvParams<S>& conv = p.conv[static_cast<size_t>(cfg.lo - 1)];
        Mat<S> v = conv_forward(conv, tr.x1, batch, seq_len, tr.conv);
        v = dropout_forward(v, dropout_rate, rng, tr.lo_drop);
        Mat<S> sum = tr.x1 + v;
        h = layer_norm_forward(p.ln_lp, sum, tr.ln_lp) + gp;
    }

    if (cfg.go2 != 0) {
        Mat<S> w = cfg.go2 == 2
                       ? attention_forward(p.go2.attn, h, h, h, batch, seq_len, valid, tr.go2_attn)
                       : ffn_forward(p.go2.ffn, h, tr.go2_ffn);
        w = dropout_forward(w, dropout_rate, rng, tr.go2_drop);
        h += w;
    }
    return h;
}

template <class S>
void block_backward(const BlockSlotParams<S>& p, const BlockConfig& cfg, const BlockTrace<S>& tr,
                    const Mat<S>& dh, int batch, int seq_len, BlockSlotParams<S>& g, Mat<S>& dx,
                    Mat<S>* denc_out) {
    const index_t rows = dh.rows();
    const index_t d = dh.cols();

    Mat<S> dh_mid = dh;
    if (cfg.go2 != 0) {
        Mat<S> dop = Mat<S>::Zero(rows, d);
        dropout_backward(tr.go2_drop, dh, dop);
        if (cfg.go2 == 2)
            attention_backward(p.go2.attn, tr.go2_attn, dop, batch, seq_len, g.go2.attn, dh_mid,
                               dh_mid, dh_mid);
        else
            ffn_backward(p.go2.ffn, tr.go2_ffn, dop, g.go2.ffn, dh_mid);
    }

    // h = lp + gp
    Mat<S> dgp = dh_mid;
    Mat<S> dx1 = Mat<S>::Zero(rows, d);
    if (cfg.lo != 0) {
        Mat<S> dsum = Mat<S>::Zero(rows, d);
        layer_norm_backward(p.ln_lp, tr.ln_lp, dh_mid, g.ln_lp, dsum);
        dx1 += dsum;
        Mat<S> dconv = Mat<S>::Zero(rows, d);
        dropout_backward(tr.lo_drop, dsum, dconv);
        const ConvParams<S>& conv = p.conv[static_cast<size_t>(cfg.lo - 1)];
        conv_backward(conv, tr.conv, dconv, batch, seq_len, g.conv[static_cast<size_t>(cfg.lo - 1)],
                      dx1);
    }

    if (p.is_decoder) {
        require(denc_out != nullptr, "block: decoder backward needs encoder grad buffer");
        Mat<S> dcross = Mat<S>::Zero(rows, d);
        dropout_backward(tr.cross_drop, dgp, dcross);
        attention_backward(p.cross, tr.cross, dcross, batch, seq_len, g.cross, dgp, *denc_out,
                           *denc_out);
    }

    Mat<S> dsum_gp = Mat<S>::Zero(rows, d);
    layer_norm_backward(p.ln_gp, tr.ln_gp, dgp, g.ln_gp, dsum_gp);
    dx1 += dsum_gp;
    if (cfg.go1 != 0) {
        Mat<S> dop = Mat<S>::Zero(rows, d);
        dropout_backward(tr.go1_drop, dsum_gp, dop);
        if (cfg.go1 == 2)
            attention_backward(p.go1.attn, tr.go1_attn, dop, batch, seq_len, g.go1.attn, dx1, dx1,
                               dx1);
        else
            ffn_backward(p.go1.ffn, tr.go1_ffn, dop, g.go1.ffn, dx1);
    }
    layer_norm_backward(p.ln_in, tr.ln_in, dx1, g.ln_in, dx);
}

// ---------------------------------------------------------------------------
// Whole model.
// ---------------------------------------------------------------------------
template <class S>
struct ModelTrace {
    std::vector<Mat<S>> embeds;  // per feature id, filled for selected features
    FusionCache<S> fuse_en, fuse_de;
    DropoutCache<S> in_drop_en, in_drop_de;
    std::vector<BlockTrace<S>> enc_blocks, dec_blocks;
    LayerNormCache<S> final_ln_en, final_ln_de;
    Mat<S> enc_out;  // O_En after the final encoder LN
    HeadCache<S> head;
};

template <class S>
struct ModelOutput {
    ColVec<S> logits;
    ColVec<S> prob;
};

namespace detail {

inline void check_genome(const Genome& g, const ModelConfig& cfg) {
    require(g.num_features() == cfg.num_features, "model: genome feature count mismatch");
    require(g.blocks_per_side() == cfg.blocks_per_side, "model: genome block count mismatch");
    int sum_en = 0, sum_de = 0;
    for (int b : g.select_en) sum_en += b;
    for (int b : g.select_de) sum_de += b;
    require(sum_en >= 1 && sum_de >= 1, "model: at least one feature must be selected per side");
    for (const BlockConfig& b : g.blocks) check_block_config(b);
}

}  // namespace detail

// Forward pass of the genome's sub-model over the supernet parameters.
// Passing a null RNG disables dropout (evaluation mode).
template <class S>
ModelOutput<S> model_forward(const Supernet<S>& net, const Genome& g, const Batch<S>& batch,
                             Rng* drop_rng, ModelTrace<S>& tr) {
    const ModelConfig& cfg = net.config;
    detail::check_genome(g, cfg);
    require(batch.seq_len <= cfg.seq_len, "model: batch windows longer than the model's seq_len");
    const int B = batch.batch;
    const int L = batch.seq_len;

    tr.embeds.assign(static_cast<size_t>(cfg.num_features), Mat<S>());
    for (int fid = 0; fid < cfg.num_features; ++fid) {
        bool used = g.select_en[static_cast<size_t>(fid)] || g.select_de[static_cast<size_t>(fid)];
        if (!used) continue;
        const FeatureInfo& info = feature_info(fid);
        if (info.kind == FeatureKind::categorical)
            tr.embeds[static_cast<size_t>(fid)] =
                embed_rows(net.bank.cate[static_cast<size_t>(info.kind_slot)],
                           batch.cat[static_cast<size_t>(info.kind_slot)]);
        else
            tr.embeds[static_cast<size_t>(fid)] =
                embed_continuous(net.bank.cont[static_cast<size_t>(info.kind_slot)],
                                 batch.cont[static_cast<size_t>(info.kind_slot)]);
    }

    Mat<S> pos = net.bank.positional.topRows(L);
    Mat<S> x = fusion_forward(net.fuse_en, tr.embeds, g.select_en, pos, B, L, tr.fuse_en);
    x = dropout_forward(x, cfg.dropout, drop_rng, tr.in_drop_en);

    tr.enc_blocks.resize(static_cast<size_t>(cfg.blocks_per_side));
    for (int i = 0; i < cfg.blocks_per_side; ++i)
        x = block_forward(net.encoder[static_cast<size_t>(i)], g.encoder_block(i), x, nullptr, B, L,
                          batch.valid, cfg.dropout, drop_rng, tr.enc_blocks[static_cast<size_t>(i)]);
    tr.enc_out = layer_norm_forward(net.final_ln_en, x, tr.final_ln_en);

    Mat<S> y = fusion_forward(net.fuse_de, tr.embeds, g.select_de, pos, B, L, tr.fuse_de);
    y = dropout_forward(y, cfg.dropout, drop_rng, tr.in_drop_de);

    tr.dec_blocks.resize(static_cast<size_t>(cfg.blocks_per_side));
    for (int i = 0; i < cfg.blocks_per_side; ++i)
        y = block_forward(net.decoder[static_cast<size_t>(i)], g.decoder_block(i), y, &tr.enc_out, B,
                          L, batch.valid, cfg.dropout, drop_rng, tr.dec_blocks[static_cast<size_t>(i)]);
    Mat<S> dec_out = layer_norm_forward(net.final_ln_de, y, tr.final_ln_de);

    ModelOutput<S> out;
    out.logits = head_logits(net.head, dec_out, tr.head);
    out.prob = sigmoid(out.logits);
    return out;
}

// Accumulates gradients of the loss (given d loss / d logits) into `grads`,
// which must have the same layout as `net`.
template <class S>
void model_backward(const Supernet<S>& net, const Genome& g, const Batch<S>& batch,
                    const ModelTrace<S>& tr, const ColVec<S>& dlogits, Supernet<S>& grads) {
    const ModelConfig& cfg = net.config;
    const int B = batch.batch;
    const int L = batch.seq_len;
    const index_t rows = batch.rows();
    const index_t d = cfg.embed_dim;

    Mat<S> ddec_out = Mat<S>::Zero(rows, d);
    head_backward(net.head, tr.head, dlogits, grads.head, ddec_out);

    Mat<S> dy = Mat<S>::Zero(rows, d);
    layer_norm_backward(net.final_ln_de, tr.final_ln_de, ddec_out, grads.final_ln_de, dy);

    Mat<S> denc_out = Mat<S>::Zero(rows, d);
    for (int i = cfg.blocks_per_side - 1; i >= 0; --i) {
        Mat<S> dx = Mat<S>::Zero(rows, d);
        block_backward(net.decoder[static_cast<size_t>(i)], g.decoder_block(i),
                       tr.dec_blocks[static_cast<size_t>(i)], dy, B, L,
                       grads.decoder[static_cast<size_t>(i)], dx, &denc_out);
        dy = std::move(dx);
    }

    std::vector<Mat<S>> d_embeds(static_cast<size_t>(cfg.num_features));
    for (int fid = 0; fid < cfg.num_features; ++fid)
        if (g.select_en[static_cast<size_t>(fid)] || g.select_de[static_cast<size_t>(fid)])
            d_embeds[static_cast<size_t>(fid)] = Mat<S>::Zero(rows, d);

    Mat<S> g_pos = Mat<S>::Zero(L, d);
    {
        Mat<S> dfused = Mat<S>::Zero(rows, d);
        dropout_backward(tr.in_drop_de, dy, dfused);
        fusion_backward(net.fuse_de, tr.fuse_de, tr.embeds, g.select_de, dfused, B, L, grads.fuse_de,
                        d_embeds, g_pos);
    }

    Mat<S> dx_enc = Mat<S>::Zero(rows, d);
    layer_norm_backward(net.final_ln_en, tr.final_ln_en, denc_out, grads.final_ln_en, dx_enc);
    for (int i = cfg.blocks_per_side - 1; i >= 0; --i) {
        Mat<S> dx = Mat<S>::Zero(rows, d);
        block_backward(net.encoder[static_cast<size_t>(i)], g.encoder_block(i),
                       tr.enc_blocks[static_cast<size_t>(i)], dx_enc, B, L,
                       grads.encoder[static_cast<size_t>(i)], dx, nullptr);
        dx_enc = std::move(dx);
    }
    {
        Mat<S> dfused = Mat<S>::Zero(rows, d);
        dropout_backward(tr.in_drop_en, dx_enc, dfused);
        fusion_backward(net.fuse_en, tr.fuse_en, tr.embeds, g.select_en, dfused, B, L, grads.fuse_en,
                        d_embeds, g_pos);
    }
    grads.bank.positional.topRows(L) += g_pos;

    for (int fid = 0; fid < cfg.num_features; ++fid) {
        if (d_embeds[static_cast<size_t>(fid)].size() == 0) continue;
        const FeatureInfo& info = feature_info(fid);
        if (info.kind == FeatureKind::categorical)
            embed_rows_backward(batch.cat[static_cast<size_t>(info.kind_slot)],
                                d_embeds[static_cast<size_t>(fid)],
                                grads.bank.cate[static_cast<size_t>(info.kind_slot)]);
        else
            embed_continuous_backward(batch.cont[static_cast<size_t>(info.kind_slot)],
                                      d_embeds[static_cast<size_t>(fid)],
                                      grads.bank.cont[static_cast<size_t>(info.kind_slot)]);
    }
}

// ---------------------------------------------------------------------------
// Exact count of the trainable scalars a built genome touches. The shared
// embedding bank is counted once (union of both selections); candidate-op
// weights the genome does not use are excluded.
// ---------------------------------------------------------------------------
inline int64_t count_parameters(const Genome& g, const ModelConfig& cfg,
                                const FeatureVocabulary& vocab) {
    detail::check_genome(g, cfg);
    const int64_t d = cfg.embed_dim;
    const int64_t dff = cfg.ffn_dim;
    int64_t total = 0;

    for (int fid = 0; fid < cfg.num_features; ++fid) {
        if (!(g.select_en[static_cast<size_t>(fid)] || g.select_de[static_cast<size_t>(fid)]))
            continue;
        const FeatureInfo& info = feature_info(fid);
        if (info.kind == FeatureKind::categorical)
            total += static_cast<int64_t>(vocab.table_rows(info.kind_slot)) * d;
        else
            total += d;
    }
    total += static_cast<int64_t>(cfg.seq_len) * d;  // positional

    auto fusion_count = [&](const std::vector<int>& bits) -> int64_t {
        if (cfg.fusion == FusionMode::concat) return static_cast<int64_t>(cfg.num_features) * d * d;
        int64_t n = static_cast<int64_t>(num_pairs(cfg.num_features)) * d * d;  // out_w
        for (int i = 0; i < cfg.num_features; ++i)
            for (int j = i + 1; j < cfg.num_features; ++j)
                if (bits[static_cast<size_t>(i)] && bits[static_cast<size_t>(j)]) n += 2 * d * d;
        return n;
    };
    total += fusion_count(g.select_en) + fusion_count(g.select_de);

    const int64_t ln = 2 * d;
    const int64_t attn = 4 * (d * d + d);
    const int64_t ffn = d * dff + dff + dff * d + d;
    auto go_count = [&](int code) -> int64_t {
        return code == 0 ? 0 : (code == 1 ? ffn : attn);
    };
    for (int side = 0; side < 2; ++side) {
        for (int i = 0; i < cfg.blocks_per_side; ++i) {
            const BlockConfig& b = side == 0 ? g.encoder_block(i) : g.decoder_block(i);
            total += 2 * ln;  // ln_in + ln_gp
            if (b.lo != 0) total += ln + static_cast<int64_t>(conv_kernel_of(b.lo)) * d * d + d;
            total += go_count(b.go1) + go_count(b.go2);
            if (side == 1) total += attn;  // fixed cross attention
        }
    }
    total += 2 * ln;  // final layer norms
    total += d + 1;   // head
    return total;
}

// ---------------------------------------------------------------------------
// Named fixed genomes for the ablation presets.
// ---------------------------------------------------------------------------
inline Genome uniform_genome(std::vector<int> select_en, std::vector<int> select_de, int n_blocks,
                             BlockConfig block) {
    Genome g;
    g.select_en = std::move(select_en);
    g.select_de = std::move(select_de);
    g.blocks.assign(static_cast<size_t>(2 * n_blocks), block);
    return g;
}

inline constexpr BlockConfig kVanillaBlock{0, 2, 1};
inline constexpr BlockConfig kLocalBlock{1, 0, 0};
inline constexpr BlockConfig kConv3Block{1, 2, 1};

inline nlohmann::json model_summary(const Genome& g, const ModelConfig& cfg,
                                    const FeatureVocabulary& vocab) {
    nlohmann::json j;
    auto names = [&](const std::vector<int>& bits) {
        std::vector<std::string> out;
        for (int i = 0; i < g.num_features(); ++i)
            if (bits[static_cast<size_t>(i)]) out.push_back(feature_name(i));
        return out;
    };
    j["encoder_features"] = names(g.select_en);
    j["decoder_features"] = names(g.select_de);
    for (int side = 0; side < 2; ++side) {
        nlohmann::json blocks = nlohmann::json::array();
        for (int i = 0; i < g.blocks_per_side(); ++i) {
            const BlockConfig& b = side == 0 ? g.encoder_block(i) : g.decoder_block(i);
            blocks.push_back({{"lo", local_op_name(b.lo)},
                              {"go1", global_op_name(b.go1)},
                              {"go2", global_op_name(b.go2)}});
        }
        j[side == 0 ? "encoder_blocks" : "decoder_blocks"] = blocks;
    }
    j["parameter_count"] = count_parameters(g, cfg, vocab);
    return j;
}

}  // namespace ktnas
