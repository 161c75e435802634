#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "ktnas/common.hpp"
#include "ktnas/rng.hpp"

namespace ktnas {

// Activations are (B*L) x D matrices; window b owns rows [b*L, (b+1)*L).
// Every primitive comes as a forward that fills a cache and a backward that
// accumulates (+=) into parameter gradients and input gradients, so one
// parameter set can be shared by many call sites.

template <class S>
struct Affine {
    Mat<S> w;  // in x out
    Mat<S> b;  // 1 x out
};

template <class S>
Mat<S> affine_forward(const Affine<S>& p, const Mat<S>& x) {
    return (x * p.w).rowwise() + p.b.row(0);
}

template <class S>
void affine_backward(const Affine<S>& p, const Mat<S>& x, const Mat<S>& dy, Affine<S>& g,
                     Mat<S>& dx) {
    g.w += x.transpose() * dy;
    g.b += dy.colwise().sum();
    dx += dy * p.w.transpose();
}

// ---------------------------------------------------------------------------
// Layer normalization over the feature axis with learned scale/shift.
// ---------------------------------------------------------------------------
template <class S>
struct LayerNormParams {
    Mat<S> gamma;  // 1 x D
    Mat<S> beta;   // 1 x D
};

template <class S>
struct LayerNormCache {
    Mat<S> xhat;
    ColVec<S> inv_std;
};

inline constexpr double kLayerNormEps = 1e-5;

template <class S>
Mat<S> layer_norm_forward(const LayerNormParams<S>& p, const Mat<S>& x, LayerNormCache<S>& cache) {
    const index_t d = x.cols();
    ColVec<S> mean = x.rowwise().mean();
    Mat<S> centered = x.colwise() - mean;
    ColVec<S> var = centered.array().square().rowwise().mean();
    cache.inv_std = (var.array() + static_cast<S>(kLayerNormEps)).rsqrt();
    cache.xhat = centered.array().colwise() * cache.inv_std.array();
    (void)d;
    return (cache.xhat.array().rowwise() * p.gamma.row(0).array()).rowwise() + p.beta.row(0).array();
}

template <class S>
void layer_norm_backward(const LayerNormParams<S>& p, const LayerNormCache<S>& cache,
                         const Mat<S>& dy, LayerNormParams<S>& g, Mat<S>& dx) {
    g.gamma += (dy.array() * cache.xhat.array()).colwise().sum().matrix();
    g.beta += dy.colwise().sum();
    Mat<S> dxhat = dy.array().rowwise() * p.gamma.row(0).array();
    ColVec<S> mean_dxhat = dxhat.rowwise().mean();
    ColVec<S> mean_dxhat_xhat = (dxhat.array() * cache.xhat.array()).rowwise().mean();
    Mat<S> inner = (dxhat.colwise() - mean_dxhat).array() -
                   (cache.xhat.array().colwise() * mean_dxhat_xhat.array());
    dx += inner.array().colwise() * cache.inv_std.array();
}

// ---------------------------------------------------------------------------
// Masked multi-head self/cross attention. A position attends keys j <= t that
// are valid; a row with no allowed key outputs zeros.
// ---------------------------------------------------------------------------
template <class S>
struct AttentionParams {
    Affine<S> q, k, v, o;
    int heads = 1;
};

template <class S>
struct AttentionCache {
    Mat<S> qsrc, ksrc, vsrc;
    Mat<S> q, k, v;
    std::vector<Mat<S>> att;  // B*heads entries, each L x L (softmaxed)
    Mat<S> ctx;
};

template <class S>
Mat<S> attention_forward(const AttentionParams<S>& p, const Mat<S>& qsrc, const Mat<S>& ksrc,
                         const Mat<S>& vsrc, int batch, int seq_len,
                         const std::vector<uint8_t>& valid, AttentionCache<S>& cache) {
    const index_t d = qsrc.cols();
    const int heads = p.heads;
    const index_t dh = d / heads;
    const S scale = static_cast<S>(1.0 / std::sqrt(static_cast<double>(dh)));

    cache.qsrc = qsrc;
    cache.ksrc = ksrc;
    cache.vsrc = vsrc;
    cache.q = affine_forward(p.q, qsrc);
    cache.k = affine_forward(p.k, ksrc);
    cache.v = affine_forward(p.v, vsrc);
    cache.att.assign(static_cast<size_t>(batch) * static_cast<size_t>(heads), Mat<S>());
    cache.ctx.setZero(qsrc.rows(), d);

    for (int b = 0; b < batch; ++b) {
        const index_t row0 = static_cast<index_t>(b) * seq_len;
        for (int h = 0; h < heads; ++h) {
            auto qh = cache.q.block(row0, h * dh, seq_len, dh);
            auto kh = cache.k.block(row0, h * dh, seq_len, dh);
            auto vh = cache.v.block(row0, h * dh, seq_len, dh);
            Mat<S> scores = qh * kh.transpose() * scale;
            Mat<S>& a = cache.att[static_cast<size_t>(b) * heads + static_cast<size_t>(h)];
            a.setZero(seq_len, seq_len);
            for (int t = 0; t < seq_len; ++t) {
                S m = -std::numeric_limits<S>::infinity();
                for (int j = 0; j <= t; ++j)
                    if (valid[static_cast<size_t>(row0) + static_cast<size_t>(j)] && scores(t, j) > m)
                        m = scores(t, j);
                if (m == -std::numeric_limits<S>::infinity()) continue;  // fully masked row
                S sum = 0;
                for (int j = 0; j <= t; ++j) {
                    if (!valid[static_cast<size_t>(row0) + static_cast<size_t>(j)]) continue;
                    S e = std::exp(scores(t, j) - m);
                    a(t, j) = e;
                    sum += e;
                }
                for (int j = 0; j <= t; ++j) a(t, j) /= sum;
            }
            cache.ctx.block(row0, h * dh, seq_len, dh) = a * vh;
        }
    }
    return affine_forward(p.o, cache.ctx);
}

template <class S>
void attention_backward(const AttentionParams<S>& p, const AttentionCache<S>& cache,
                        const Mat<S>& dy, int batch, int seq_len, AttentionParams<S>& g,
                        Mat<S>& dqsrc, Mat<S>& dksrc, Mat<S>& dvsrc) {
    const index_t d = cache.qsrc.cols();
    const int heads = p.heads;
    const index_t dh = d / heads;
    const S scale = static_cast<S>(1.0 / std::sqrt(static_cast<double>(dh)));

    Mat<S> dctx;
    dctx.setZero(dy.rows(), d);
    affine_backward(p.o, cache.ctx, dy, g.o, dctx);

    Mat<S> dq = Mat<S>::Zero(dy.rows(), d);
    Mat<S> dk = Mat<S>::Zero(dy.rows(), d);
    Mat<S> dv = Mat<S>::Zero(dy.rows(), d);
    for (int b = 0; b < batch; ++b) {
        const index_t row0 = static_cast<index_t>(b) * seq_len;
        for (int h = 0; h < heads; ++h) {
            const Mat<S>& a = cache.att[static_cast<size_t>(b) * heads + static_cast<size_t>(h)];
            auto kh = cache.k.block(row0, h * dh, seq_len, dh);
            auto qh = cache.q.block(row0, h * dh, seq_len, dh);
            auto vh = cache.v.block(row0, h * dh, seq_len, dh);
            auto dctx_h = dctx.block(row0, h * dh, seq_len, dh);

            Mat<S> da = dctx_h * vh.transpose();
            dv.block(row0, h * dh, seq_len, dh) += a.transpose() * dctx_h;

            // Softmax backward per row; zero rows stay zero.
            Mat<S> ds(seq_len, seq_len);
            for (int t = 0; t < seq_len; ++t) {
                S dot = 0;
                for (int j = 0; j < seq_len; ++j) dot += da(t, j) * a(t, j);
                for (int j = 0; j < seq_len; ++j) ds(t, j) = a(t, j) * (da(t, j) - dot);
            }
            dq.block(row0, h * dh, seq_len, dh) += ds * kh * scale;
            dk.block(row0, h * dh, seq_len, dh) += ds.transpose() * qh * scale;
        }
    }
    affine_backward(p.q, cache.qsrc, dq, g.q, dqsrc);
    affine_backward(p.k, cache.ksrc, dk, g.k, dksrc);
    affine_backward(p.v, cache.vsrc, dv, g.v, dvsrc);
}

// ---------------------------------------------------------------------------
// Causal 1-D convolution over the sequence axis, full channel mixing, left
// padding only: output t sees inputs t-k+1..t.
// ---------------------------------------------------------------------------
template <class S>
struct ConvParams {
    Mat<S> w;  // (kernel*D) x D, tap-major: rows [tau*D, (tau+1)*D) hold the weight for lag tau
    Mat<S> b;  // 1 x D
    int kernel = 3;
};

template <class S>
struct ConvCache {
    Mat<S> x;
};

template <class S>
Mat<S> conv_forward(const ConvParams<S>& p, const Mat<S>& x, int batch, int seq_len,
                    ConvCache<S>& cache) {
    const index_t d = x.cols();
    cache.x = x;
    Mat<S> y = Mat<S>::Zero(x.rows(), d);
    y.rowwise() += p.b.row(0);
    for (int b = 0; b < batch; ++b) {
        const index_t row0 = static_cast<index_t>(b) * seq_len;
        for (int tau = 0; tau < p.kernel && tau < seq_len; ++tau) {
            auto w_tau = p.w.middleRows(static_cast<index_t>(tau) * d, d);
            y.middleRows(row0 + tau, seq_len - tau).noalias() +=
                x.middleRows(row0, seq_len - tau) * w_tau;
        }
    }
    return y;
}

template <class S>
void conv_backward(const ConvParams<S>& p, const ConvCache<S>& cache, const Mat<S>& dy, int batch,
                   int seq_len, ConvParams<S>& g, Mat<S>& dx) {
    const index_t d = cache.x.cols();
    g.b += dy.colwise().sum();
    for (int b = 0; b < batch; ++b) {
        const index_t row0 = static_cast<index_t>(b) * seq_len;
        for (int tau = 0; tau < p.kernel && tau < seq_len; ++tau) {
            auto w_tau = p.w.middleRows(static_cast<index_t>(tau) * d, d);
            auto x_top = cache.x.middleRows(row0, seq_len - tau);
            auto dy_bot = dy.middleRows(row0 + tau, seq_len - tau);
            g.w.middleRows(static_cast<index_t>(tau) * d, d).noalias() += x_top.transpose() * dy_bot;
            dx.middleRows(row0, seq_len - tau).noalias() += dy_bot * w_tau.transpose();
        }
    }
}

// ---------------------------------------------------------------------------
// Position-wise feed-forward network with ReLU.
// ---------------------------------------------------------------------------
template <class S>
struct FfnParams {
    Affine<S> lin1, lin2;
};

template <class S>
struct FfnCache {
    Mat<S> x, act;
};

template <class S>
Mat<S> ffn_forward(const FfnParams<S>& p, const Mat<S>& x, FfnCache<S>& cache) {
    cache.x = x;
    cache.act = affine_forward(p.lin1, x).cwiseMax(static_cast<S>(0));
    return affine_forward(p.lin2, cache.act);
}

template <class S>
void ffn_backward(const FfnParams<S>& p, const FfnCache<S>& cache, const Mat<S>& dy, FfnParams<S>& g,
                  Mat<S>& dx) {
    Mat<S> dact = Mat<S>::Zero(cache.act.rows(), cache.act.cols());
    affine_backward(p.lin2, cache.act, dy, g.lin2, dact);
    Mat<S> dpre = (cache.act.array() > static_cast<S>(0)).template cast<S>() * dact.array();
    affine_backward(p.lin1, cache.x, dpre, g.lin1, dx);
}

// ---------------------------------------------------------------------------
// Inverted dropout. A null RNG or zero rate makes it the identity.
// ---------------------------------------------------------------------------
template <class S>
struct DropoutCache {
    std::vector<uint8_t> keep;
    S scale = 1;
    bool active = false;
};

template <class S>
Mat<S> dropout_forward(const Mat<S>& x, double rate, Rng* rng, DropoutCache<S>& cache) {
    if (rng == nullptr || rate <= 0.0) {
        cache.active = false;
        return x;
    }
    cache.active = true;
    cache.scale = static_cast<S>(1.0 / (1.0 - rate));
    cache.keep.assign(static_cast<size_t>(x.size()), 1);
    Mat<S> y = x;
    S* data = y.data();
    for (index_t i = 0; i < y.size(); ++i) {
        if (rng->uniform() < rate) {
            cache.keep[static_cast<size_t>(i)] = 0;
            data[i] = 0;
        } else {
            data[i] *= cache.scale;
        }
    }
    return y;
}

template <class S>
void dropout_backward(const DropoutCache<S>& cache, const Mat<S>& dy, Mat<S>& dx) {
    if (!cache.active) {
        dx += dy;
        return;
    }
    const S* dyd = dy.data();
    S* dxd = dx.data();
    for (index_t i = 0; i < dy.size(); ++i)
        if (cache.keep[static_cast<size_t>(i)]) dxd[i] += dyd[i] * cache.scale;
}

// ---------------------------------------------------------------------------
// Prediction head: affine D -> 1 followed by a sigmoid.
// ---------------------------------------------------------------------------
template <class S>
struct HeadParams {
    Mat<S> w;  // D x 1
    Mat<S> b;  // 1 x 1
};

template <class S>
struct HeadCache {
    Mat<S> x;
};

template <class S>
ColVec<S> head_logits(const HeadParams<S>& p, const Mat<S>& x, HeadCache<S>& cache) {
    cache.x = x;
    return (x * p.w).col(0).array() + p.b(0, 0);
}

template <class S>
ColVec<S> sigmoid(const ColVec<S>& z) {
    return z.unaryExpr([](S v) { return static_cast<S>(1) / (static_cast<S>(1) + std::exp(-v)); });
}

template <class S>
void head_backward(const HeadParams<S>& p, const HeadCache<S>& cache, const ColVec<S>& dlogits,
                   HeadParams<S>& g, Mat<S>& dx) {
    g.w += cache.x.transpose() * dlogits;
    g.b(0, 0) += dlogits.sum();
    dx += dlogits * p.w.transpose();
}

// ---------------------------------------------------------------------------
// Binary cross-entropy over valid positions, computed from logits for
// stability; reported as the mean per valid position.
// ---------------------------------------------------------------------------
template <class S>
struct BceResult {
    double loss = 0.0;
    ColVec<S> dlogits;
    int64_t n_valid = 0;
};

template <class S>
BceResult<S> bce_masked(const ColVec<S>& logits, const std::vector<int8_t>& target,
                        const std::vector<uint8_t>& valid) {
    BceResult<S> r;
    r.dlogits = ColVec<S>::Zero(logits.size());
    for (index_t i = 0; i < logits.size(); ++i) r.n_valid += valid[static_cast<size_t>(i)] ? 1 : 0;
    require(r.n_valid > 0, "bce_masked: no valid positions");
    const double inv_n = 1.0 / static_cast<double>(r.n_valid);
    for (index_t i = 0; i < logits.size(); ++i) {
        if (!valid[static_cast<size_t>(i)]) continue;
        double z = static_cast<double>(logits(i));
        double y = static_cast<double>(target[static_cast<size_t>(i)]);
        double softplus = z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
        r.loss += (softplus - y * z) * inv_n;
        double sig = 1.0 / (1.0 + std::exp(-z));
        r.dlogits(i) = static_cast<S>((sig - y) * inv_n);
    }
    require(std::isfinite(r.loss), "bce_masked: non-finite loss");
    return r;
}

}  // namespace ktnas
