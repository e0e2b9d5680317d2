#pragma once

#include <span>
#include <vector>

#include "pearl/dataio.hpp"
#include "pearl/matrix.hpp"
#include "pearl/rng.hpp"

namespace pearl {

struct LinearLayer {
    Matrix W;  // in x out
    Matrix b;  // 1 x out
};

struct BatchNormLayer {
    Matrix gamma, beta;               // 1 x F
    Matrix running_mean, running_var; // 1 x F, eval-mode statistics
};

// Implicit generator: fc -> bn -> relu per hidden layer, then a linear head
// whose blocks follow the schema's encoded layout. Continuous blocks pass
// through tanh mapped onto [0,1]; categorical blocks are softmax-normalized;
// the label one-hot is an input that is copied through unchanged.
struct GeneratorNet {
    std::size_t latent_dim = 16;
    std::size_t label_count = 0;  // 0 when unconditional
    Schema schema;
    std::vector<LinearLayer> fcs;      // hidden layers + output head
    std::vector<BatchNormLayer> bns;   // one per hidden layer
    double bn_momentum = 0.9;
    double bn_eps = 1e-5;
    bool train_mode = true;

    struct Cache {
        Matrix input;
        std::vector<Matrix> fc_in;     // input to each fc (fc_in[0] == input)
        std::vector<Matrix> xhat;      // per bn layer
        std::vector<Matrix> inv_std;   // 1 x F per bn layer
        Matrix output;
        bool valid = false;
    };
    Cache cache;

    std::size_t input_width() const { return latent_dim + label_count; }
    std::size_t head_width() const { return schema.label_offset(); }
};

struct LatentBatch {
    Matrix z;                          // B x latent_dim, standard normal
    std::vector<std::size_t> labels;   // length B when conditional, else empty
};

// He-initialized weights, zero biases, BN scale 1 / shift 0 / running stats
// (0,1). label_count must be 0 or match the schema's label cardinality.
GeneratorNet init_generator(const Schema& schema, std::size_t latent_dim,
                            std::span<const std::size_t> hidden_dims, std::size_t label_count,
                            Rng& rng);

LatentBatch sample_latent(std::size_t batch, std::size_t latent_dim, std::size_t label_count,
                          const std::vector<double>* label_probs, Rng& rng);

// B x encoded_width matrix of generated records in feature space. Train mode
// uses batch statistics and refreshes the BN running stats; eval mode is a
// pure function of (parameters, batch).
Matrix forward(GeneratorNet& net, const LatentBatch& batch);

// Parameter gradients in trainable_params order; requires a train-mode
// forward's cached activations.
struct ParamGrads {
    std::vector<Matrix> grads;
};
ParamGrads backward(GeneratorNet& net, const Matrix& upstream_grad);

// W, b, gamma, beta per hidden layer, then the head's W, b.
std::vector<Matrix*> trainable_params(GeneratorNet& net);

// Inverse transform of one generated row: continuous values unscaled to their
// original ranges, categorical blocks resolved by argmax (ties to the lowest
// index).
DecodedRecord decode(std::span<const double> net_output_row, const Schema& schema);

}  // namespace pearl
