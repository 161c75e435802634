#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "ktnas/common.hpp"
#include "ktnas/supernet.hpp"

namespace ktnas {

// Noam warmup schedule: rate(s) = base * D^-0.5 * min(s^-0.5, s * warmup^-1.5).
// The peak sits exactly at s = warmup.
struct NoamSchedule {
    double base = 1e-3;
    int model_dim = 128;
    int warmup_steps = 8000;

    double rate(int64_t step) const {
        double s = static_cast<double>(step < 1 ? 1 : step);
        double w = static_cast<double>(warmup_steps);
        return base * std::pow(static_cast<double>(model_dim), -0.5) *
               std::min(1.0 / std::sqrt(s), s * std::pow(w, -1.5));
    }
};

// Adam over the supernet registry. Moments share the supernet layout.
template <class S>
struct AdamState {
    Supernet<S> m;
    Supernet<S> v;
    int64_t step = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    static AdamState make(const ModelConfig& cfg, const FeatureVocabulary& vocab) {
        AdamState st;
        st.m = make_supernet<S>(cfg, vocab);
        st.v = make_supernet<S>(cfg, vocab);
        return st;
    }
};

template <class S>
void adam_step(Supernet<S>& params, const Supernet<S>& grads, AdamState<S>& st, double lr) {
    st.step += 1;
    const double bc1 = 1.0 - std::pow(st.beta1, static_cast<double>(st.step));
    const double bc2 = 1.0 - std::pow(st.beta2, static_cast<double>(st.step));

    std::vector<Mat<S>*> ps, ms, vs;
    std::vector<const Mat<S>*> gs;
    visit_params(params, [&](const std::string&, Mat<S>& mat) { ps.push_back(&mat); });
    visit_params(grads, [&](const std::string&, const Mat<S>& mat) { gs.push_back(&mat); });
    visit_params(st.m, [&](const std::string&, Mat<S>& mat) { ms.push_back(&mat); });
    visit_params(st.v, [&](const std::string&, Mat<S>& mat) { vs.push_back(&mat); });
    require(ps.size() == gs.size() && ps.size() == ms.size() && ps.size() == vs.size(),
            "adam_step: layout mismatch");

    const S b1 = static_cast<S>(st.beta1);
    const S b2 = static_cast<S>(st.beta2);
    for (size_t i = 0; i < ps.size(); ++i) {
        Mat<S>& p = *ps[i];
        const Mat<S>& g = *gs[i];
        Mat<S>& m = *ms[i];
        Mat<S>& v = *vs[i];
        m = b1 * m + (static_cast<S>(1) - b1) * g;
        v = (b2 * v.array() + (static_cast<S>(1) - b2) * g.array().square()).matrix();
        for (index_t k = 0; k < p.size(); ++k) {
            double mhat = static_cast<double>(m.data()[k]) / bc1;
            double vhat = static_cast<double>(v.data()[k]) / bc2;
            p.data()[k] -= static_cast<S>(lr * mhat / (std::sqrt(vhat) + st.eps));
        }
    }
}

}  // namespace ktnas
