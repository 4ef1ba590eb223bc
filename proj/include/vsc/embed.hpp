#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "vsc/align.hpp"
#include "vsc/matrix.hpp"

namespace vsc {

/// Two-layer embedding network mapping class attribute vectors into visual
/// feature space: out = act(w2^T act(w1^T a)), act = Leaky ReLU. No bias
/// terms; a constant attribute column can emulate one if ever needed.
struct EmbeddingNet {
    Matrix w1;  // attr_dim x hidden
    Matrix w2;  // hidden x feature_dim
    double negative_slope = 0.2;
    bool final_activation = true;  // apply the nonlinearity at the output layer too

    std::size_t attr_dim() const { return w1.rows(); }
    std::size_t hidden_dim() const { return w1.cols(); }
    std::size_t feature_dim() const { return w2.cols(); }

    /// Weights uniform in [-1/sqrt(fan_in), +1/sqrt(fan_in)], seeded.
    static EmbeddingNet random_init(std::size_t attr_dim, std::size_t hidden, std::size_t feature_dim,
                                    double negative_slope, std::uint64_t seed);

    void validate() const;
};

/// Project a batch of attribute rows (K x attr_dim) to centers (K x feature_dim).
Matrix forward(const EmbeddingNet& net, const Matrix& attrs);

/// Loss terms active for one gradient evaluation. The combinatorial
/// structure (Chamfer argmins or a matching) is supplied frozen and treated
/// as constant for differentiation.
struct LossSpec {
    // Seen-class MSE term, averaged over rows: (1/S) sum ||net(a_i) - target_i||^2.
    const Matrix* seen_attrs = nullptr;
    const Matrix* seen_targets = nullptr;

    // Structure term on projected unseen centers vs fixed cluster centers, summed.
    enum class Structure { none, chamfer, matching };
    Structure structure = Structure::none;
    const Matrix* unseen_attrs = nullptr;
    const Matrix* cluster_centers = nullptr;
    std::vector<int> nn_ab, nn_ba;   // frozen Chamfer argmins
    std::vector<int> assignment;     // frozen matching permutation
    CostMode cost = CostMode::squared;

    double beta = 0.0;          // structure weight
    double weight_decay = 0.0;  // coefficient of the squared-weight regularizer
};

struct Gradients {
    Matrix w1, w2;
};

struct LossBreakdown {
    double mse = 0.0;        // seen term only, no regularizer
    double structure = 0.0;  // unweighted structure term
    double reg = 0.0;        // weight_decay * sum of squared weights
    double total = 0.0;      // mse + beta * structure + reg
};

/// Analytic gradient of the selected total loss with respect to both weight
/// matrices. Also reports the loss decomposition when `breakdown` is given.
Gradients grad_total(const EmbeddingNet& net, const LossSpec& spec, LossBreakdown* breakdown = nullptr);

struct AdamParams {
    double learning_rate = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    double weight_decay = 5e-4;  // enters the loss via grad_total, kept here for bookkeeping
};

struct AdamState {
    Matrix m_w1, v_w1, m_w2, v_w2;
    long step = 0;
    AdamParams params;

    static AdamState init(const EmbeddingNet& net, const AdamParams& params);
};

/// One bias-corrected Adam update in place. Throws on non-finite gradients.
void adam_step(EmbeddingNet& net, const Gradients& grads, AdamState& state);

/// Model file round-trip (JSON with shape fields and row-major weight arrays).
void save_model(const EmbeddingNet& net, const std::filesystem::path& path);
EmbeddingNet load_model(const std::filesystem::path& path);

}  // namespace vsc
