#include "coinworld/neural.hpp"

#include <cmath>
#include <stdexcept>

#include "coinworld/hash.hpp"

namespace coinworld::nn {

// ---------------------------------------------------------------- parameters

Parameter& ParameterSet::add(const std::string& name, int rows, int cols) {
    if (index_.count(name)) throw std::invalid_argument("duplicate parameter: " + name);
    params_.push_back(Parameter{name, Matrix::Zero(rows, cols), Matrix::Zero(rows, cols)});
    index_.emplace(name, params_.size() - 1);
    return params_.back();
}

Parameter& ParameterSet::at(const std::string& name) {
    auto it = index_.find(name);
    if (it == index_.end()) throw std::out_of_range("no parameter named " + name);
    return params_[it->second];
}

const Parameter& ParameterSet::at(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw std::out_of_range("no parameter named " + name);
    return params_[it->second];
}

bool ParameterSet::has(const std::string& name) const { return index_.count(name) > 0; }

void ParameterSet::zero_grads() {
    for (Parameter& p : params_) p.grad.setZero();
}

long ParameterSet::total_values() const {
    long n = 0;
    for (const Parameter& p : params_) n += static_cast<long>(p.value.size());
    return n;
}

std::vector<double> ParameterSet::flatten_values() const {
    std::vector<double> flat;
    flat.reserve(static_cast<size_t>(total_values()));
    for (const Parameter& p : params_) {
        flat.insert(flat.end(), p.value.data(), p.value.data() + p.value.size());
    }
    return flat;
}

void ParameterSet::load_values(const std::vector<double>& flat) {
    if (static_cast<long>(flat.size()) != total_values())
        throw std::invalid_argument("flat value size mismatch");
    size_t off = 0;
    for (Parameter& p : params_) {
        std::copy(flat.begin() + static_cast<long>(off),
                  flat.begin() + static_cast<long>(off) + p.value.size(), p.value.data());
        off += static_cast<size_t>(p.value.size());
    }
}

std::vector<double> ParameterSet::flatten_grads() const {
    std::vector<double> flat;
    flat.reserve(static_cast<size_t>(total_values()));
    for (const Parameter& p : params_) {
        flat.insert(flat.end(), p.grad.data(), p.grad.data() + p.grad.size());
    }
    return flat;
}

uint64_t ParameterSet::checksum() const {
    Fnv1a h;
    for (const Parameter& p : params_) {
        h.update(p.name);
        h.update_i64(p.rows());
        h.update_i64(p.cols());
        for (long i = 0; i < p.value.size(); ++i) h.update_double(p.value.data()[i]);
    }
    return h.digest();
}

// --------------------------------------------------------------------- adam

Adam::Adam(const ParameterSet& params, AdamConfig cfg) : cfg_(cfg) {
    m_.reserve(params.count());
    v_.reserve(params.count());
    for (size_t i = 0; i < params.count(); ++i) {
        m_.push_back(Matrix::Zero(params[i].rows(), params[i].cols()));
        v_.push_back(Matrix::Zero(params[i].rows(), params[i].cols()));
    }
}

void Adam::step(ParameterSet& params) {
    if (params.count() != m_.size()) throw std::invalid_argument("Adam/ParameterSet mismatch");
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (size_t i = 0; i < params.count(); ++i) {
        const Matrix& g = params[i].grad;
        m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * g;
        v_[i] = cfg_.beta2 * v_[i].array() + (1.0 - cfg_.beta2) * g.array().square();
        params[i].value.array() -=
            cfg_.lr * (m_[i].array() / bc1) / ((v_[i].array() / bc2).sqrt() + cfg_.eps);
    }
}

// --------------------------------------------------------------------- tape

void Tape::backward() {
    for (auto it = ops_.rbegin(); it != ops_.rend(); ++it) (*it)();
}

// ---------------------------------------------------------------- gate math

namespace {

inline Matrix sigmoid(const Matrix& z) { return (1.0 / (1.0 + (-z.array()).exp())).matrix(); }

struct GateActs {
    Matrix i, f, g, o, c, tanh_c, h;
};

// Z is the pre-activation [B x 4H]; c_prev [B x H].
GateActs gates_forward(const Matrix& Z, const Matrix& c_prev, int H) {
    GateActs a;
    a.i = sigmoid(Z.middleCols(0, H));
    a.f = sigmoid(Z.middleCols(H, H));
    a.g = Z.middleCols(2 * H, H).array().tanh().matrix();
    a.o = sigmoid(Z.middleCols(3 * H, H));
    a.c = (a.f.array() * c_prev.array() + a.i.array() * a.g.array()).matrix();
    a.tanh_c = a.c.array().tanh().matrix();
    a.h = (a.o.array() * a.tanh_c.array()).matrix();
    return a;
}

// Returns dZ [B x 4H]; adds the cell-state path into dc_prev.
Matrix gates_backward(const GateActs& a, const Matrix& c_prev, const Matrix& dh, const Matrix& dc_in,
                      Matrix& dc_prev_out) {
    const int H = static_cast<int>(a.i.cols());
    Matrix dc = dc_in.array() + dh.array() * a.o.array() * (1.0 - a.tanh_c.array().square());
    Matrix dZ(dh.rows(), 4 * H);
    // input gate
    dZ.middleCols(0, H) =
        (dc.array() * a.g.array() * a.i.array() * (1.0 - a.i.array())).matrix();
    // forget gate
    dZ.middleCols(H, H) =
        (dc.array() * c_prev.array() * a.f.array() * (1.0 - a.f.array())).matrix();
    // cell candidate
    dZ.middleCols(2 * H, H) = (dc.array() * a.i.array() * (1.0 - a.g.array().square())).matrix();
    // output gate
    dZ.middleCols(3 * H, H) =
        (dh.array() * a.tanh_c.array() * a.o.array() * (1.0 - a.o.array())).matrix();
    dc_prev_out = (dc.array() * a.f.array()).matrix();
    return dZ;
}

}  // namespace

// ---------------------------------------------------------------- graph ops

VarPtr linear(Tape& tape, Parameter& w, Parameter& b, const VarPtr& x) {
    if (x->v.cols() != w.value.rows()) throw std::invalid_argument("linear: shape mismatch");
    VarPtr y = make_var(((x->v * w.value).rowwise() + b.value.row(0)).eval());
    tape.record([&w, &b, x, y] {
        w.grad.noalias() += x->v.transpose() * y->g;
        b.grad.row(0) += y->g.colwise().sum();
        x->g.noalias() += y->g * w.value.transpose();
    });
    return y;
}

VarPtr relu(Tape& tape, const VarPtr& x) {
    VarPtr y = make_var(x->v.cwiseMax(0.0));
    tape.record([x, y] {
        x->g.array() += y->g.array() * (x->v.array() > 0.0).cast<double>();
    });
    return y;
}

std::pair<VarPtr, VarPtr> lstm_cell(Tape& tape, const LstmParams& p, const VarPtr& x,
                                    const VarPtr& h, const VarPtr& c) {
    const int H = p.hidden;
    Matrix Z = x->v * p.wx->value;
    Z.noalias() += h->v * p.wh->value;
    Z.rowwise() += p.b->value.row(0);
    auto acts = std::make_shared<GateActs>(gates_forward(Z, c->v, H));
    VarPtr h_out = make_var(acts->h);
    VarPtr c_out = make_var(acts->c);
    tape.record([p, x, h, c, h_out, c_out, acts] {
        Matrix dc_prev;
        Matrix dZ = gates_backward(*acts, c->v, h_out->g, c_out->g, dc_prev);
        p.wx->grad.noalias() += x->v.transpose() * dZ;
        p.wh->grad.noalias() += h->v.transpose() * dZ;
        p.b->grad.row(0) += dZ.colwise().sum();
        x->g.noalias() += dZ * p.wx->value.transpose();
        h->g.noalias() += dZ * p.wh->value.transpose();
        c->g += dc_prev;
    });
    return {h_out, c_out};
}

VarPtr gather_rows(Tape& tape, const VarPtr& src, std::vector<int> idx) {
    Matrix out(static_cast<long>(idx.size()), src->v.cols());
    for (size_t i = 0; i < idx.size(); ++i) {
        if (idx[i] < 0 || idx[i] >= src->v.rows())
            throw std::out_of_range("gather_rows: index out of range");
        out.row(static_cast<long>(i)) = src->v.row(idx[i]);
    }
    VarPtr y = make_var(std::move(out));
    tape.record([src, y, idx = std::move(idx)] {
        for (size_t i = 0; i < idx.size(); ++i) {
            src->g.row(idx[i]) += y->g.row(static_cast<long>(i));
        }
    });
    return y;
}

// --------------------------------------------------------------- encoder

namespace {

struct EncodeCache {
    Matrix X;                      // [U*T x E] embedded inputs, step-major rows (t*U + u)
    std::vector<int> padded_ids;   // same layout
    std::vector<int> lengths;      // per sequence
    std::vector<GateActs> steps;   // per time step
    int U = 0, T = 0;
};

}  // namespace

static EncodeCache encode_forward(const Parameter& embedding, const LstmParams& p,
                                  const std::vector<const std::vector<int>*>& seqs,
                                  Matrix& pooled_out) {
    const int U = static_cast<int>(seqs.size());
    if (U == 0) throw std::invalid_argument("encode: empty batch");
    const int E = embedding.cols();
    const int H = p.hidden;

    EncodeCache cache;
    cache.U = U;
    cache.lengths.resize(static_cast<size_t>(U));
    int T = 0;
    for (int u = 0; u < U; ++u) {
        const auto& ids = *seqs[static_cast<size_t>(u)];
        if (ids.empty()) throw std::invalid_argument("encode: empty sequence");
        cache.lengths[static_cast<size_t>(u)] = static_cast<int>(ids.size());
        T = std::max(T, static_cast<int>(ids.size()));
    }
    cache.T = T;

    cache.X.resize(static_cast<long>(U) * T, E);
    cache.padded_ids.assign(static_cast<size_t>(U) * static_cast<size_t>(T), 0);
    for (int t = 0; t < T; ++t) {
        for (int u = 0; u < U; ++u) {
            const auto& ids = *seqs[static_cast<size_t>(u)];
            int id = (t < static_cast<int>(ids.size())) ? ids[static_cast<size_t>(t)] : 0;
            if (id < 0 || id >= embedding.rows())
                throw std::out_of_range("encode: token id outside embedding table");
            cache.padded_ids[static_cast<size_t>(t) * U + u] = id;
            cache.X.row(static_cast<long>(t) * U + u) = embedding.value.row(id);
        }
    }

    Matrix Zx = cache.X * p.wx->value;  // all x-projections in one pass

    pooled_out = Matrix::Zero(U, H);
    cache.steps.reserve(static_cast<size_t>(T));
    Matrix c_prev = Matrix::Zero(U, H);
    Matrix h_prev = Matrix::Zero(U, H);
    for (int t = 0; t < T; ++t) {
        Matrix Z = Zx.middleRows(static_cast<long>(t) * U, U);
        if (t > 0) Z.noalias() += h_prev * p.wh->value;
        Z.rowwise() += p.b->value.row(0);
        cache.steps.push_back(gates_forward(Z, c_prev, H));
        const GateActs& a = cache.steps.back();
        // masked mean pool: position t contributes 1/len to rows still inside
        // their sequence, nothing to already-finished rows
        Eigen::ArrayXd w(U);
        for (int u = 0; u < U; ++u) {
            w[u] = (t < cache.lengths[static_cast<size_t>(u)])
                       ? 1.0 / static_cast<double>(cache.lengths[static_cast<size_t>(u)])
                       : 0.0;
        }
        pooled_out.array() += a.h.array().colwise() * w;
        h_prev = a.h;
        c_prev = a.c;
    }
    return cache;
}

Matrix encode_values(const Parameter& embedding, const LstmParams& p,
                     const std::vector<const std::vector<int>*>& sequences) {
    Matrix pooled;
    encode_forward(embedding, p, sequences, pooled);
    return pooled;
}

VarPtr encode_batch(Tape& tape, Parameter& embedding, const LstmParams& p,
                    const std::vector<const std::vector<int>*>& sequences) {
    Matrix pooled;
    auto cache = std::make_shared<EncodeCache>(encode_forward(embedding, p, sequences, pooled));
    VarPtr out = make_var(std::move(pooled));

    tape.record([&embedding, p, out, cache] {
        const int U = cache->U;
        const int T = cache->T;
        const int H = p.hidden;
        const Matrix& G = out->g;

        Matrix dZall(static_cast<long>(U) * T, 4 * H);
        Matrix dh_next = Matrix::Zero(U, H);
        Matrix dc_next = Matrix::Zero(U, H);
        for (int t = T - 1; t >= 0; --t) {
            Matrix dh = dh_next;
            Eigen::ArrayXd w(U);
            for (int u = 0; u < U; ++u) {
                w[u] = (t < cache->lengths[static_cast<size_t>(u)])
                           ? 1.0 / static_cast<double>(cache->lengths[static_cast<size_t>(u)])
                           : 0.0;
            }
            dh.array() += G.array().colwise() * w;

            const Matrix c_prev =
                (t > 0) ? cache->steps[static_cast<size_t>(t) - 1].c : Matrix::Zero(U, H);
            Matrix dc_prev;
            Matrix dZ = gates_backward(cache->steps[static_cast<size_t>(t)], c_prev, dh, dc_next,
                                       dc_prev);
            dZall.middleRows(static_cast<long>(t) * U, U) = dZ;
            dc_next = std::move(dc_prev);
            if (t > 0) {
                p.wh->grad.noalias() +=
                    cache->steps[static_cast<size_t>(t) - 1].h.transpose() * dZ;
                dh_next.noalias() = dZ * p.wh->value.transpose();
            }
        }
        p.wx->grad.noalias() += cache->X.transpose() * dZall;
        p.b->grad.row(0) += dZall.colwise().sum();

        Matrix dX = dZall * p.wx->value.transpose();  // [U*T x E]
        for (int t = 0; t < T; ++t) {
            for (int u = 0; u < U; ++u) {
                if (t >= cache->lengths[static_cast<size_t>(u)]) continue;
                embedding.grad.row(cache->padded_ids[static_cast<size_t>(t) * U + u]) +=
                    dX.row(static_cast<long>(t) * U + u);
            }
        }
    });
    return out;
}

std::pair<Matrix, Matrix> lstm_step_values(const LstmParams& p, const Matrix& x, const Matrix& h,
                                           const Matrix& c) {
    Matrix Z = x * p.wx->value;
    Z.noalias() += h * p.wh->value;
    Z.rowwise() += p.b->value.row(0);
    GateActs a = gates_forward(Z, c, p.hidden);
    return {std::move(a.h), std::move(a.c)};
}

// --------------------------------------------------------------------- loss

double masked_td_loss(Tape& tape, const VarPtr& q_verbs, const VarPtr& q_objects,
                      const std::vector<int>& action_verb, const std::vector<int>& action_object,
                      const std::vector<double>& targets, const std::vector<double>& weights,
                      double norm) {
    const size_t B = targets.size();
    if (action_verb.size() != B || action_object.size() != B || weights.size() != B)
        throw std::invalid_argument("masked_td_loss: length mismatch");
    if (static_cast<size_t>(q_verbs->v.rows()) != B ||
        static_cast<size_t>(q_objects->v.rows()) != B)
        throw std::invalid_argument("masked_td_loss: batch mismatch");
    if (norm <= 0.0) throw std::invalid_argument("masked_td_loss: norm must be positive");

    double loss = 0.0;
    for (size_t i = 0; i < B; ++i) {
        if (weights[i] == 0.0) continue;
        const double dv =
            q_verbs->v(static_cast<long>(i), action_verb[i]) - targets[i];
        const double dobj =
            q_objects->v(static_cast<long>(i), action_object[i]) - targets[i];
        loss += weights[i] * (dv * dv + dobj * dobj);
    }
    loss /= 2.0 * norm;

    tape.record([q_verbs, q_objects, action_verb, action_object, targets, weights, norm] {
        for (size_t i = 0; i < targets.size(); ++i) {
            if (weights[i] == 0.0) continue;
            const double scale = weights[i] / norm;
            q_verbs->g(static_cast<long>(i), action_verb[i]) +=
                scale * (q_verbs->v(static_cast<long>(i), action_verb[i]) - targets[i]);
            q_objects->g(static_cast<long>(i), action_object[i]) +=
                scale * (q_objects->v(static_cast<long>(i), action_object[i]) - targets[i]);
        }
    });
    return loss;
}

// --------------------------------------------------------------------- init

void fill_uniform(Rng& rng, Matrix& m, double bound) {
    for (long j = 0; j < m.cols(); ++j) {
        for (long i = 0; i < m.rows(); ++i) {
            m(i, j) = rng.uniform(-bound, bound);
        }
    }
}

void init_linear(Rng& rng, Parameter& w, Parameter& b) {
    fill_uniform(rng, w.value, 1.0 / std::sqrt(static_cast<double>(w.rows())));
    b.value.setZero();
}

void init_lstm(Rng& rng, const LstmParams& p) {
    fill_uniform(rng, p.wx->value, 1.0 / std::sqrt(static_cast<double>(p.wx->rows())));
    fill_uniform(rng, p.wh->value, 1.0 / std::sqrt(static_cast<double>(p.wh->rows())));
    p.b->value.setZero();
    // forget-gate bias block starts open so early training does not erase state
    p.b->value.row(0).segment(p.hidden, p.hidden).setConstant(1.0);
}

void init_embedding(Rng& rng, Parameter& emb) {
    fill_uniform(rng, emb.value, 1.0 / std::sqrt(static_cast<double>(emb.cols())));
}

}  // namespace coinworld::nn
