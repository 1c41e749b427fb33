#pragma once

#include "gtclust/types.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace gtclust {

/// Merged adjacency + node features + adjacency lists (self-loops always
/// present, so every node has at least one incident edge).
struct GraphInput {
    Matrix A;  // T x T, symmetric, non-negative
    Matrix X;  // T x F_node
    std::vector<std::vector<int>> neighbors;  // sorted, includes self

    int nodes() const { return static_cast<int>(A.rows()); }
};

/// Edges where A_ij > tau_edge, plus all self-loops.
GraphInput build_graph(const Matrix& a, const Matrix& x, double tau_edge = 0.0);

struct GatLayerParams {
    Matrix W_l;  // d_out x d_in
    Matrix W_r;  // d_out x d_in
    Vector a;    // d_out
    double leaky_slope = 0.2;
};

/// One LSTM layer; gates stacked [input; forget; cell; output].
struct LstmParams {
    Matrix W_x;  // 4H x D
    Matrix W_h;  // 4H x H
    Vector b;    // 4H
};

struct LayerDims {
    int d1 = 64, d2 = 32, d3 = 16, d_z = 8;
};

/// Shrinks the default (64,32,16,8) widths when the node features are
/// narrower than the first layer.
LayerDims default_dims(int f_node);

struct AutoencoderParams {
    std::array<GatLayerParams, 3> enc_gat;
    Vector pool_p;  // d3
    std::array<LstmParams, 2> enc_lstm;   // d3 -> d_z -> d_z
    std::array<LstmParams, 2> dec_lstm;   // d_z -> d_z -> d3
    std::array<GatLayerParams, 3> dec_gat;  // d3 -> d2 -> d1 -> F_node
    LayerDims dims;
    int f_node = 0;

    /// Same shapes, all entries zero.
    AutoencoderParams zeros_like() const;
};

struct ParamBlock {
    std::string name;
    double* data;
    int size;
};

/// Mutable views over every parameter block in a fixed order (training
/// updates, gradient checks, checkpoints).
std::vector<ParamBlock> param_blocks(AutoencoderParams& p);

/// Seeded uniform(-s, s) with s = sqrt(6 / (d_in + d_out)) per block.
AutoencoderParams init_params(int f_node, const LayerDims& dims, std::uint64_t seed);

struct TrainConfig {
    double lambda = 0.1;
    int epochs = 200;
    double step_size = 0.01;
    int centroid_refresh = 10;
    double pool_ratio = 0.5;
    double tau_edge = 0.0;
    std::uint64_t seed = 0;
    int k = 2;
};

/// Single-head GATv2: e_ij = a . LeakyReLU(W_l h_i + W_r h_j) over the
/// neighbor set, alpha = softmax_j, output_i = sum_j alpha_ij (W_r h_j).
Matrix gatv2_layer(const Matrix& h, const GraphInput& graph, const GatLayerParams& params);

/// The attention coefficients of one layer as a dense N x N matrix (zero on
/// non-edges); each row sums to 1 over the node's neighbors.
Matrix gatv2_attention(const Matrix& h, const GraphInput& graph, const GatLayerParams& params);

/// Projection scores s_i = (h_i . p)/|p|; keeps the top ceil(ratio*N) nodes
/// (ties prefer the lower index), rows gated by tanh(s_i). kept_indices come
/// back in original temporal order.
std::pair<Matrix, std::vector<int>> topk_pool(const Matrix& h, const Vector& p, double ratio);

/// Applies one LSTM over the row sequence; returns per-step hidden states.
Matrix recurrent_layer(const Matrix& sequence, const LstmParams& params);

struct EncodeResult {
    Matrix z_full;    // T x d_z (clustering path)
    Matrix z_pooled;  // kept x d_z (reconstruction path)
    std::vector<int> kept_indices;
};

EncodeResult encode(const GraphInput& graph, const AutoencoderParams& params, const TrainConfig& cfg);

struct DecodeResult {
    Matrix x_hat;  // T x F_node
    Matrix a_hat;  // T x T, symmetric, entries in (0,1)
};

DecodeResult decode(const Matrix& z_pooled, const std::vector<int>& kept_indices,
                    const AutoencoderParams& params, const GraphInput& graph);

/// L = MSE(X, X_hat) + MSE(A, A_hat) + lambda * mean_i min_j |z_i - mu_j|^2.
double loss(const Matrix& x, const Matrix& a, const Matrix& x_hat, const Matrix& a_hat,
            const Matrix& z_full, const Matrix& centroids, double lambda);

/// Full forward pass with cached intermediates plus exact reverse-mode
/// gradients for every parameter block (exposed for gradient checking).
struct ForwardBackward {
    double loss_value = 0.0;
    Matrix z_full;
    Matrix x_hat;
    Matrix a_hat;
};
ForwardBackward loss_and_gradients(const GraphInput& graph, const AutoencoderParams& params,
                                   const TrainConfig& cfg, const Matrix& centroids,
                                   AutoencoderParams& grads);

struct TrainResult {
    AutoencoderParams params;
    Matrix z_full;
    std::vector<double> loss_history;  // one entry per epoch, before the step
};

/// Full-batch gradient descent with a fixed step, halved within an epoch
/// whenever it would increase the loss. Centroids for the clustering term
/// refresh by KMeans on z_full every centroid_refresh epochs (epoch 0
/// included). Deterministic given cfg.seed.
TrainResult train(const GraphInput& graph, const TrainConfig& cfg);

/// KMeans on the latent rows; the pipeline's final partition.
Partition cluster_latent(const Matrix& z_full, int k, std::uint64_t seed);

/// Writes <prefix>.json (dims, seed, epoch, block layout) and
/// <prefix>_params.csv (one value per line, 17 significant digits).
void save_checkpoint(const AutoencoderParams& params, std::uint64_t seed, int epoch,
                     const std::string& prefix);
struct Checkpoint {
    AutoencoderParams params;
    std::uint64_t seed = 0;
    int epoch = 0;
};
Checkpoint load_checkpoint(const std::string& prefix);

}  // namespace gtclust
