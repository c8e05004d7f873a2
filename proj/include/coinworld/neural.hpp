#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "coinworld/rng.hpp"

namespace coinworld::nn {

using Matrix = Eigen::MatrixXd;

// A learnable tensor with its gradient accumulator. Stored in a ParameterSet;
// layers hold stable references.
struct Parameter {
    std::string name;
    Matrix value;
    Matrix grad;

    int rows() const { return static_cast<int>(value.rows()); }
    int cols() const { return static_cast<int>(value.cols()); }
};

// Ordered, named parameter container. Registration order defines the flat
// layout used by the optimizer, serialization, init draws and checksums.
// Deque storage keeps Parameter& stable across add() calls.
class ParameterSet {
public:
    Parameter& add(const std::string& name, int rows, int cols);
    Parameter& at(const std::string& name);
    const Parameter& at(const std::string& name) const;
    bool has(const std::string& name) const;

    size_t count() const { return params_.size(); }
    Parameter& operator[](size_t i) { return params_[i]; }
    const Parameter& operator[](size_t i) const { return params_[i]; }

    void zero_grads();
    long total_values() const;

    // Flat views in registration order, column-major within each matrix.
    std::vector<double> flatten_values() const;
    void load_values(const std::vector<double>& flat);
    std::vector<double> flatten_grads() const;

    // Fingerprint over names, shapes and values.
    uint64_t checksum() const;

private:
    std::deque<Parameter> params_;
    std::unordered_map<std::string, size_t> index_;
};

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

class Adam {
public:
    Adam(const ParameterSet& params, AdamConfig cfg = {});

    void step(ParameterSet& params);
    long steps_taken() const { return t_; }

    // Raw state access for checkpointing.
    const AdamConfig& config() const { return cfg_; }
    std::vector<Matrix>& first_moments() { return m_; }
    std::vector<Matrix>& second_moments() { return v_; }
    const std::vector<Matrix>& first_moments() const { return m_; }
    const std::vector<Matrix>& second_moments() const { return v_; }
    void set_steps_taken(long t) { t_ = t; }

private:
    AdamConfig cfg_;
    std::vector<Matrix> m_;
    std::vector<Matrix> v_;
    long t_ = 0;
};

// Intermediate node in the computation graph: value plus gradient buffer.
struct Var {
    Matrix v;
    Matrix g;

    explicit Var(Matrix value) : v(std::move(value)) { g = Matrix::Zero(v.rows(), v.cols()); }
};
using VarPtr = std::shared_ptr<Var>;

inline VarPtr make_var(Matrix value) { return std::make_shared<Var>(std::move(value)); }

// Reverse-mode tape. Ops record a backward closure at forward time; closures
// run in reverse order, each adding into its inputs' gradient buffers using
// its outputs' (by then final) gradients.
class Tape {
public:
    void record(std::function<void()> backward_op) { ops_.push_back(std::move(backward_op)); }
    void backward();
    size_t size() const { return ops_.size(); }
    void clear() { ops_.clear(); }

private:
    std::vector<std::function<void()>> ops_;
};

// LSTM parameter bundle. Gate blocks live side by side in the 4H columns:
// [input | forget | cell | output]. wx is [in x 4H], wh [H x 4H], b [1 x 4H].
struct LstmParams {
    Parameter* wx = nullptr;
    Parameter* wh = nullptr;
    Parameter* b = nullptr;
    int hidden = 0;
};

// ---- Graph ops (record onto the tape) ----

// y = x * W + b.  W is [in x out], b [1 x out].
VarPtr linear(Tape& tape, Parameter& w, Parameter& b, const VarPtr& x);

VarPtr relu(Tape& tape, const VarPtr& x);

// One LSTM step over a batch: returns (h', c').
std::pair<VarPtr, VarPtr> lstm_cell(Tape& tape, const LstmParams& p, const VarPtr& x,
                                    const VarPtr& h, const VarPtr& c);

// y.row(i) = src.row(idx[i]). Backward scatter-adds.
VarPtr gather_rows(Tape& tape, const VarPtr& src, std::vector<int> idx);

// Fused text encoder: embedding lookup -> LSTM over time -> masked mean pool
// over real (unpadded) positions. One node per batch; the internal
// backward-through-time never materializes per-step graph nodes. Sequences
// must be non-empty; rows of the [batch x hidden] output follow input order.
VarPtr encode_batch(Tape& tape, Parameter& embedding, const LstmParams& p,
                    const std::vector<const std::vector<int>*>& sequences);

// Squared TD error on the two heads at the chosen actions, weighted per row
// and normalized by `norm` (caller passes the total weight across all calls
// sharing one loss):
//   sum_b w_b * ((qv[b, av_b] - y_b)^2 + (qo[b, ao_b] - y_b)^2) / (2 * norm)
// Seeds head gradients on the tape; returns the loss contribution.
double masked_td_loss(Tape& tape, const VarPtr& q_verbs, const VarPtr& q_objects,
                      const std::vector<int>& action_verb, const std::vector<int>& action_object,
                      const std::vector<double>& targets, const std::vector<double>& weights,
                      double norm);

// ---- Value-only kernels (no tape; used for action selection and TD targets) ----

Matrix encode_values(const Parameter& embedding, const LstmParams& p,
                     const std::vector<const std::vector<int>*>& sequences);

std::pair<Matrix, Matrix> lstm_step_values(const LstmParams& p, const Matrix& x, const Matrix& h,
                                           const Matrix& c);

inline Matrix linear_values(const Parameter& w, const Parameter& b, const Matrix& x) {
    return (x * w.value).rowwise() + b.value.row(0);
}

// ---- Deterministic initialization ----

// Uniform(-bound, bound) filled column-major in one pass of the rng.
void fill_uniform(Rng& rng, Matrix& m, double bound);

// Weights U(+-1/sqrt(fan_in)); biases zero. For LSTM params the forget-gate
// bias block is set to 1.0 (standard remedy against early forgetting).
void init_linear(Rng& rng, Parameter& w, Parameter& b);
void init_lstm(Rng& rng, const LstmParams& p);
void init_embedding(Rng& rng, Parameter& emb);

}  // namespace coinworld::nn
