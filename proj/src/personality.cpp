#include "dyadic/personality.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "dyadic/rng.hpp"

namespace dyadic {

HeadParams HeadParams::zeros(std::size_t dim) {
    return HeadParams{Matrix(dim, dim), Vector(dim, 0.0), Matrix(dim, kNumTraits),
                      Vector(kNumTraits, 0.0)};
}

HeadOutput head_forward(const HeadParams& head, std::span<const double> u) {
    if (u.size() != head.dim()) {
        throw ShapeError("head_forward: embedding dimension " + std::to_string(u.size()) +
                         " does not match head " + head.w1.shape_string());
    }
    Vector a1 = head.c1;
    vecmat_accumulate(u, head.w1, a1);
    HeadOutput out;
    out.s = sigmoid(a1);
    Vector a2 = head.c2;
    vecmat_accumulate(out.s, head.w2, a2);
    out.y = sigmoid(a2);
    return out;
}

double head_loss(const HeadParams& head, std::span<const double> u, const TraitBits& labels) {
    const auto out = head_forward(head, u);
    double loss = 0.0;
    for (std::size_t k = 0; k < kNumTraits; ++k) {
        const double p = std::clamp(out.y[k], 1e-12, 1.0 - 1e-12);
        loss -= labels[k] ? std::log(p) : std::log(1.0 - p);
    }
    return loss / static_cast<double>(kNumTraits);
}

HeadGrads head_backward(const HeadParams& head, std::span<const double> u,
                        const TraitBits& labels) {
    const auto out = head_forward(head, u);
    const std::size_t d = head.dim();
    HeadGrads grads{HeadParams::zeros(d), Vector(d, 0.0)};

    // sigmoid + binary cross-entropy: d/da2 = (y - label) / 5
    Vector da2(kNumTraits);
    for (std::size_t k = 0; k < kNumTraits; ++k) {
        da2[k] = (out.y[k] - static_cast<double>(labels[k])) / static_cast<double>(kNumTraits);
    }
    add_outer(grads.g.w2, out.s, da2);
    grads.g.c2 = da2;

    Vector ds(d, 0.0);
    matvec_accumulate(head.w2, da2, ds);
    Vector da1(d);
    for (std::size_t i = 0; i < d; ++i) da1[i] = ds[i] * out.s[i] * (1.0 - out.s[i]);
    add_outer(grads.g.w1, u, da1);
    grads.g.c1 = da1;
    matvec_accumulate(head.w1, da1, grads.d_u);
    return grads;
}

HeadParams head_init(std::size_t dim, std::uint64_t seed) {
    HeadParams head = HeadParams::zeros(dim);
    Rng rng(seed, "head-init");
    const double a1 = std::sqrt(6.0 / static_cast<double>(dim + dim));
    const double a2 = std::sqrt(6.0 / static_cast<double>(dim + kNumTraits));
    for (double& x : head.w1.data()) x = rng.uniform(-a1, a1);
    for (double& x : head.w2.data()) x = rng.uniform(-a2, a2);
    return head;
}

HeadParams head_train(const std::map<std::string, Vector>& embeddings, const LabelSet& labels,
                      const HeadConfig& config) {
    if (labels.empty()) throw std::invalid_argument("head_train: empty training set");
    std::vector<std::pair<const Vector*, const TraitBits*>> samples;
    for (const auto& [id, bits] : labels) {
        auto it = embeddings.find(id);
        if (it == embeddings.end()) throw UnknownIndividual(id);
        samples.emplace_back(&it->second, &bits);
    }
    const std::size_t d = samples.front().first->size();
    HeadParams head = head_init(d, config.seed);

    std::vector<std::size_t> order(samples.size());
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        Rng rng(config.seed, "head-shuffle", epoch);
        rng.shuffle(std::span(order));
        for (std::size_t idx : order) {
            const auto grads = head_backward(head, *samples[idx].first, *samples[idx].second);
            axpy(-config.learning_rate, grads.g.w1.data(), head.w1.data());
            axpy(-config.learning_rate, grads.g.c1, head.c1);
            axpy(-config.learning_rate, grads.g.w2.data(), head.w2.data());
            axpy(-config.learning_rate, grads.g.c2, head.c2);
        }
    }
    return head;
}

TraitBits threshold_traits(std::span<const double> y) {
    if (y.size() != kNumTraits) throw ShapeError("threshold_traits: expected 5 values");
    TraitBits bits{};
    for (std::size_t k = 0; k < kNumTraits; ++k) bits[k] = y[k] >= 0.5 ? 1 : 0;
    return bits;
}

TraitBits infer(const HeadParams& head, std::span<const double> u) {
    return threshold_traits(head_forward(head, u).y);
}

}  // namespace dyadic
