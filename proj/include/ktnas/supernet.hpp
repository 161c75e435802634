#pragma once

#include <array>
#include <string>
#include <vector>

#include "ktnas/common.hpp"
#include "ktnas/dataset.hpp"
#include "ktnas/embedding.hpp"
#include "ktnas/features.hpp"
#include "ktnas/genome.hpp"
#include "ktnas/nn.hpp"
#include "ktnas/rng.hpp"

namespace ktnas {

struct ModelConfig {
    int blocks_per_side = 4;
    int embed_dim = 128;
    int ffn_dim = 128;
    int heads = 8;
    int seq_len = 100;
    double dropout = 0.1;
    int num_features = kNumFeatures;
    FusionMode fusion = FusionMode::hierarchical;

    void validate() const {
        require(blocks_per_side >= 1, "model: blocks_per_side must be >= 1");
        require(embed_dim >= 1 && embed_dim % heads == 0,
                "model: embed_dim must be a positive multiple of heads");
        require(seq_len >= 2, "model: seq_len must be >= 2");
        require(dropout >= 0.0 && dropout < 1.0, "model: dropout must be in [0, 1)");
        require(num_features >= 1 && num_features <= kNumFeatures,
                "model: num_features must be in 1..12");
    }
};

// One searchable global-operation slot owns both candidate parameter sets;
// one (slot, op) pair owns exactly one of them per forward.
template <class S>
struct GoSlotParams {
    AttentionParams<S> attn;
    FfnParams<S> ffn;
};

template <class S>
struct BlockSlotParams {
    LayerNormParams<S> ln_in, ln_gp, ln_lp;
    std::array<ConvParams<S>, 4> conv;  // kernels 3, 5, 7, 11
    GoSlotParams<S> go1, go2;
    AttentionParams<S> cross;  // decoder slots only
    bool is_decoder = false;
};

// The shared parameter store covering every candidate operation at every
// slot. Gradients and Adam moments reuse this type with identical layout.
template <class S>
struct Supernet {
    ModelConfig config;
    FeatureVocabulary vocab;
    EmbeddingBank<S> bank;
    FusionParams<S> fuse_en, fuse_de;
    std::vector<BlockSlotParams<S>> encoder, decoder;
    LayerNormParams<S> final_ln_en, final_ln_de;
    HeadParams<S> head;
};

// ---------------------------------------------------------------------------
// Deterministic named traversal of every parameter matrix. Checkpoints, the
// optimizer and the gradient store all rely on this one order.
// ---------------------------------------------------------------------------
namespace detail {

template <class Attn, class Fn>
void visit_attention(const std::string& prefix, Attn& a, Fn&& fn) {
    fn(prefix + "/wq", a.q.w);
    fn(prefix + "/bq", a.q.b);
    fn(prefix + "/wk", a.k.w);
    fn(prefix + "/bk", a.k.b);
    fn(prefix + "/wv", a.v.w);
    fn(prefix + "/bv", a.v.b);
    fn(prefix + "/wo", a.o.w);
    fn(prefix + "/bo", a.o.b);
}

template <class FfnT, class Fn>
void visit_ffn(const std::string& prefix, FfnT& f, Fn&& fn) {
    fn(prefix + "/w1", f.lin1.w);
    fn(prefix + "/b1", f.lin1.b);
    fn(prefix + "/w2", f.lin2.w);
    fn(prefix + "/b2", f.lin2.b);
}

template <class Ln, class Fn>
void visit_ln(const std::string& prefix, Ln& ln, Fn&& fn) {
    fn(prefix + "/gamma", ln.gamma);
    fn(prefix + "/beta", ln.beta);
}

template <class Slot, class Fn>
void visit_block_slot(const std::string& prefix, Slot& s, Fn&& fn) {
    visit_ln(prefix + "/ln_in", s.ln_in, fn);
    visit_ln(prefix + "/ln_gp", s.ln_gp, fn);
    visit_ln(prefix + "/ln_lp", s.ln_lp, fn);
    for (size_t c = 0; c < s.conv.size(); ++c) {
        std::string cp = prefix + "/conv" + std::to_string(kConvKernels[c]);
        fn(cp + "/w", s.conv[c].w);
        fn(cp + "/b", s.conv[c].b);
    }
    visit_attention(prefix + "/go1/attn", s.go1.attn, fn);
    visit_ffn(prefix + "/go1/ffn", s.go1.ffn, fn);
    visit_attention(prefix + "/go2/attn", s.go2.attn, fn);
    visit_ffn(prefix + "/go2/ffn", s.go2.ffn, fn);
    if (s.is_decoder) visit_attention(prefix + "/cross", s.cross, fn);
}

template <class FuseT, class Fn>
void visit_fusion(const std::string& prefix, FuseT& f, int num_features, Fn&& fn) {
    if (f.mode == FusionMode::hierarchical) {
        for (const auto& [i, j] : all_pairs(num_features)) {
            int slot = pair_slot(i, j, num_features);
            fn(prefix + "/pair_" + std::to_string(i) + "_" + std::to_string(j),
               f.pair_w[static_cast<size_t>(slot)]);
        }
        fn(prefix + "/out", f.out_w);
    } else {
        fn(prefix + "/concat", f.concat_w);
    }
}

}  // namespace detail

template <class Net, class Fn>
void visit_params(Net& net, Fn&& fn) {
    const int num = net.config.num_features;
    for (int fid = 0; fid < num; ++fid) {
        const FeatureInfo& info = feature_info(fid);
        if (info.kind == FeatureKind::categorical)
            fn("embed/" + std::string(info.name), net.bank.cate[static_cast<size_t>(info.kind_slot)]);
        else
            fn("embed/" + std::string(info.name), net.bank.cont[static_cast<size_t>(info.kind_slot)]);
    }
    fn("embed/pos", net.bank.positional);
    detail::visit_fusion("fuse_en", net.fuse_en, num, fn);
    detail::visit_fusion("fuse_de", net.fuse_de, num, fn);
    for (size_t i = 0; i < net.encoder.size(); ++i)
        detail::visit_block_slot("enc" + std::to_string(i), net.encoder[i], fn);
    for (size_t i = 0; i < net.decoder.size(); ++i)
        detail::visit_block_slot("dec" + std::to_string(i), net.decoder[i], fn);
    detail::visit_ln("final_ln_en", net.final_ln_en, fn);
    detail::visit_ln("final_ln_de", net.final_ln_de, fn);
    fn("head/w", net.head.w);
    fn("head/b", net.head.b);
}

// ---------------------------------------------------------------------------
// Allocation and initialization.
// ---------------------------------------------------------------------------
namespace detail {

template <class S>
void alloc_affine(Affine<S>& a, index_t in, index_t out) {
    a.w = Mat<S>::Zero(in, out);
    a.b = Mat<S>::Zero(1, out);
}

template <class S>
void alloc_attention(AttentionParams<S>& a, index_t d, int heads) {
    alloc_affine(a.q, d, d);
    alloc_affine(a.k, d, d);
    alloc_affine(a.v, d, d);
    alloc_affine(a.o, d, d);
    a.heads = heads;
}

template <class S>
void alloc_ln(LayerNormParams<S>& ln, index_t d) {
    ln.gamma = Mat<S>::Zero(1, d);
    ln.beta = Mat<S>::Zero(1, d);
}

template <class S>
void alloc_block_slot(BlockSlotParams<S>& s, const ModelConfig& cfg, bool is_decoder) {
    const index_t d = cfg.embed_dim;
    s.is_decoder = is_decoder;
    alloc_ln(s.ln_in, d);
    alloc_ln(s.ln_gp, d);
    alloc_ln(s.ln_lp, d);
    for (size_t c = 0; c < s.conv.size(); ++c) {
        s.conv[c].kernel = kConvKernels[c];
        s.conv[c].w = Mat<S>::Zero(static_cast<index_t>(kConvKernels[c]) * d, d);
        s.conv[c].b = Mat<S>::Zero(1, d);
    }
    alloc_attention(s.go1.attn, d, cfg.heads);
    alloc_affine(s.go1.ffn.lin1, d, cfg.ffn_dim);
    alloc_affine(s.go1.ffn.lin2, cfg.ffn_dim, d);
    alloc_attention(s.go2.attn, d, cfg.heads);
    alloc_affine(s.go2.ffn.lin1, d, cfg.ffn_dim);
    alloc_affine(s.go2.ffn.lin2, cfg.ffn_dim, d);
    if (is_decoder) alloc_attention(s.cross, d, cfg.heads);
}

template <class S>
void alloc_fusion(FusionParams<S>& f, const ModelConfig& cfg) {
    const index_t d = cfg.embed_dim;
    f.mode = cfg.fusion;
    if (f.mode == FusionMode::hierarchical) {
        int pairs = num_pairs(cfg.num_features);
        f.pair_w.assign(static_cast<size_t>(pairs), Mat<S>());
        for (auto& w : f.pair_w) w = Mat<S>::Zero(2 * d, d);
        f.out_w = Mat<S>::Zero(static_cast<index_t>(pairs) * d, d);
    } else {
        f.concat_w = Mat<S>::Zero(static_cast<index_t>(cfg.num_features) * d, d);
    }
}

}  // namespace detail

template <class S>
Supernet<S> make_supernet(const ModelConfig& cfg, const FeatureVocabulary& vocab) {
    cfg.validate();
    Supernet<S> net;
    net.config = cfg;
    net.vocab = vocab;
    const index_t d = cfg.embed_dim;

    net.bank.cate.resize(kNumCategoricalFeatures);
    for (int slot = 0; slot < kNumCategoricalFeatures; ++slot)
        net.bank.cate[static_cast<size_t>(slot)] = Mat<S>::Zero(vocab.table_rows(slot), d);
    net.bank.cont.resize(kNumContinuousFeatures);
    for (auto& w : net.bank.cont) w = Mat<S>::Zero(1, d);
    net.bank.positional = Mat<S>::Zero(cfg.seq_len, d);

    detail::alloc_fusion(net.fuse_en, cfg);
    detail::alloc_fusion(net.fuse_de, cfg);

    net.encoder.resize(static_cast<size_t>(cfg.blocks_per_side));
    net.decoder.resize(static_cast<size_t>(cfg.blocks_per_side));
    for (auto& s : net.encoder) detail::alloc_block_slot(s, cfg, false);
    for (auto& s : net.decoder) detail::alloc_block_slot(s, cfg, true);

    detail::alloc_ln(net.final_ln_en, d);
    detail::alloc_ln(net.final_ln_de, d);
    net.head.w = Mat<S>::Zero(d, 1);
    net.head.b = Mat<S>::Zero(1, 1);
    return net;
}

// Xavier-style init for the projections, small normal noise for the tables,
// identity layer norms, zero biases. Draw order follows the registry order.
template <class S>
void init_supernet(Supernet<S>& net, Rng& rng) {
    visit_params(net, [&](const std::string& name, Mat<S>& m) {
        auto ends_with = [&](const char* suffix) {
            std::string s(suffix);
            return name.size() >= s.size() && name.compare(name.size() - s.size(), s.size(), s) == 0;
        };
        if (ends_with("/gamma")) {
            m.setOnes();
        } else if (ends_with("/beta") || m.rows() == 1) {
            // biases and 1-row projections: continuous embeddings get noise below
            if (name.rfind("embed/", 0) == 0) {
                for (index_t i = 0; i < m.size(); ++i)
                    m.data()[i] = static_cast<S>(rng.normal(0.0, 0.1));
            } else {
                m.setZero();
            }
        } else if (name.rfind("embed/", 0) == 0) {
            for (index_t i = 0; i < m.size(); ++i)
                m.data()[i] = static_cast<S>(rng.normal(0.0, 0.1));
        } else {
            double std = std::sqrt(2.0 / static_cast<double>(m.rows() + m.cols()));
            for (index_t i = 0; i < m.size(); ++i)
                m.data()[i] = static_cast<S>(rng.normal(0.0, std));
        }
    });
}

template <class S>
void zero_params(Supernet<S>& net) {
    visit_params(net, [](const std::string&, Mat<S>& m) { m.setZero(); });
}

template <class S>
int64_t total_parameter_count(const Supernet<S>& net) {
    int64_t n = 0;
    visit_params(net, [&](const std::string&, const Mat<S>& m) { n += m.size(); });
    return n;
}

// Same-layout parameter copy with optional scalar conversion.
template <class A, class B>
void copy_params(const Supernet<A>& src, Supernet<B>& dst) {
    std::vector<const Mat<A>*> from;
    visit_params(src, [&](const std::string&, const Mat<A>& m) { from.push_back(&m); });
    size_t i = 0;
    visit_params(dst, [&](const std::string&, Mat<B>& m) {
        require(i < from.size() && from[i]->rows() == m.rows() && from[i]->cols() == m.cols(),
                "copy_params: layout mismatch");
        m = from[i]->template cast<B>();
        ++i;
    });
    require(i == from.size(), "copy_params: layout mismatch");
}

}  // namespace ktnas
