#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>

#include "dyadic/corpus.hpp"
#include "dyadic/tensor.hpp"

namespace dyadic {

/// Two-layer head: s = sigmoid(u W1 + c1), y = sigmoid(s W2 + c2), with the hidden width
/// equal to the embedding width.
struct HeadParams {
    Matrix w1;  // d x d
    Vector c1;  // d
    Matrix w2;  // d x 5
    Vector c2;  // 5

    std::size_t dim() const { return w1.rows(); }
    static HeadParams zeros(std::size_t dim);
};

struct HeadOutput {
    Vector s;  // hidden activation
    Vector y;  // trait probabilities (E, A, C, N, O)
};

HeadOutput head_forward(const HeadParams& head, std::span<const double> u);

struct HeadGrads {
    HeadParams g;
    Vector d_u;
};

/// Mean binary cross-entropy over the five traits for one individual, and its gradient.
double head_loss(const HeadParams& head, std::span<const double> u, const TraitBits& labels);
HeadGrads head_backward(const HeadParams& head, std::span<const double> u,
                        const TraitBits& labels);

struct HeadConfig {
    double learning_rate = 0.05;
    std::size_t epochs = 500;
    std::uint64_t seed = 0;
};

/// Per-individual SGD on the mean binary cross-entropy, seeded shuffle each epoch. Embeddings
/// are treated as fixed inputs. Throws UnknownIndividual if a labeled id has no embedding.
HeadParams head_train(const std::map<std::string, Vector>& embeddings, const LabelSet& labels,
                      const HeadConfig& config);

/// Glorot-uniform weights, zero biases.
HeadParams head_init(std::size_t dim, std::uint64_t seed);

/// Thresholds each probability at 0.5; ties go to 1.
TraitBits threshold_traits(std::span<const double> y);
TraitBits infer(const HeadParams& head, std::span<const double> u);

}  // namespace dyadic
