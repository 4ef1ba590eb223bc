#include "vsc/embed.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "vsc/kernels.hpp"
#include "vsc/rng.hpp"

namespace vsc {

namespace {

inline double leaky(double z, double slope) { return z >= 0.0 ? z : slope * z; }
inline double leaky_grad(double z, double slope) { return z >= 0.0 ? 1.0 : slope; }

Matrix apply_leaky(const Matrix& z, double slope) {
    Matrix out(z.rows(), z.cols());
    for (std::size_t i = 0; i < z.size(); ++i) out.data()[i] = leaky(z.data()[i], slope);
    return out;
}

struct ForwardTrace {
    Matrix z1, h, z2, y;
};

ForwardTrace forward_trace(const EmbeddingNet& net, const Matrix& attrs) {
    ForwardTrace t;
    t.z1 = kernels::matmul(attrs, net.w1);
    t.h = apply_leaky(t.z1, net.negative_slope);
    t.z2 = kernels::matmul(t.h, net.w2);
    t.y = net.final_activation ? apply_leaky(t.z2, net.negative_slope) : t.z2;
    return t;
}

// Backpropagates d(loss)/dY through the two layers and accumulates into the
// weight gradients.
void backprop(const EmbeddingNet& net, const Matrix& attrs, const ForwardTrace& t, const Matrix& gy,
              Gradients& grads) {
    Matrix dz2(gy.rows(), gy.cols());
    if (net.final_activation) {
        for (std::size_t i = 0; i < gy.size(); ++i)
            dz2.data()[i] = gy.data()[i] * leaky_grad(t.z2.data()[i], net.negative_slope);
    } else {
        dz2 = gy;
    }
    const Matrix dw2 = kernels::matmul_at_b(t.h, dz2);
    const Matrix dh = kernels::matmul_a_bt(dz2, net.w2);
    Matrix dz1(dh.rows(), dh.cols());
    for (std::size_t i = 0; i < dh.size(); ++i)
        dz1.data()[i] = dh.data()[i] * leaky_grad(t.z1.data()[i], net.negative_slope);
    const Matrix dw1 = kernels::matmul_at_b(attrs, dz1);

    for (std::size_t i = 0; i < grads.w1.size(); ++i) grads.w1.data()[i] += dw1.data()[i];
    for (std::size_t i = 0; i < grads.w2.size(); ++i) grads.w2.data()[i] += dw2.data()[i];
}

double sum_squares(const Matrix& m) {
    double s = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i) s += m.data()[i] * m.data()[i];
    return s;
}

void check_index_list(const std::vector<int>& idx, std::size_t expected, std::size_t limit,
                      const char* what) {
    if (idx.size() != expected)
        throw std::invalid_argument(std::string(what) + ": expected " + std::to_string(expected) +
                                    " indices, got " + std::to_string(idx.size()));
    for (int v : idx)
        if (v < 0 || static_cast<std::size_t>(v) >= limit)
            throw std::invalid_argument(std::string(what) + ": index out of range");
}

}  // namespace

EmbeddingNet EmbeddingNet::random_init(std::size_t attr_dim, std::size_t hidden,
                                       std::size_t feature_dim, double negative_slope,
                                       std::uint64_t seed) {
    if (attr_dim == 0 || hidden == 0 || feature_dim == 0)
        throw std::invalid_argument("EmbeddingNet::random_init: zero dimension");
    EmbeddingNet net;
    net.negative_slope = negative_slope;
    net.w1 = Matrix(attr_dim, hidden);
    net.w2 = Matrix(hidden, feature_dim);
    Rng rng(seed);
    const double b1 = 1.0 / std::sqrt(static_cast<double>(attr_dim));
    for (std::size_t i = 0; i < net.w1.size(); ++i) net.w1.data()[i] = rng.uniform(-b1, b1);
    const double b2 = 1.0 / std::sqrt(static_cast<double>(hidden));
    for (std::size_t i = 0; i < net.w2.size(); ++i) net.w2.data()[i] = rng.uniform(-b2, b2);
    return net;
}

void EmbeddingNet::validate() const {
    if (w1.rows() == 0 || w1.cols() == 0 || w2.cols() == 0)
        throw std::invalid_argument("EmbeddingNet: empty weight matrix");
    if (w1.cols() != w2.rows())
        throw std::invalid_argument("EmbeddingNet: w1 is " + std::to_string(w1.rows()) + "x" +
                                    std::to_string(w1.cols()) + " but w2 is " +
                                    std::to_string(w2.rows()) + "x" + std::to_string(w2.cols()));
    if (negative_slope < 0.0 || negative_slope >= 1.0)
        throw std::invalid_argument("EmbeddingNet: negative_slope outside [0, 1)");
}

Matrix forward(const EmbeddingNet& net, const Matrix& attrs) {
    net.validate();
    if (attrs.cols() != net.attr_dim())
        throw std::invalid_argument("forward: attribute dimension " + std::to_string(attrs.cols()) +
                                    " does not match net (" + std::to_string(net.attr_dim()) + ")");
    return forward_trace(net, attrs).y;
}

Gradients grad_total(const EmbeddingNet& net, const LossSpec& spec, LossBreakdown* breakdown) {
    net.validate();
    if (!spec.seen_attrs || !spec.seen_targets)
        throw std::invalid_argument("grad_total: seen attrs/targets required");
    const Matrix& sa = *spec.seen_attrs;
    const Matrix& st = *spec.seen_targets;
    if (sa.rows() == 0) throw std::invalid_argument("grad_total: no seen rows");
    if (sa.cols() != net.attr_dim() || st.cols() != net.feature_dim() || sa.rows() != st.rows())
        throw std::invalid_argument("grad_total: seen shapes inconsistent with net");

    Gradients grads;
    grads.w1 = Matrix(net.w1.rows(), net.w1.cols());
    grads.w2 = Matrix(net.w2.rows(), net.w2.cols());
    LossBreakdown out;

    // Seen-class MSE stream.
    {
        const ForwardTrace t = forward_trace(net, sa);
        const double inv_s = 1.0 / static_cast<double>(sa.rows());
        Matrix gy(t.y.rows(), t.y.cols());
        double sq = 0.0;
        for (std::size_t i = 0; i < t.y.size(); ++i) {
            const double diff = t.y.data()[i] - st.data()[i];
            sq += diff * diff;
            gy.data()[i] = 2.0 * inv_s * diff;
        }
        out.mse = sq * inv_s;
        backprop(net, sa, t, gy, grads);
    }

    // Structure stream on projected unseen centers vs fixed cluster centers.
    if (spec.structure != LossSpec::Structure::none) {
        if (!spec.unseen_attrs || !spec.cluster_centers)
            throw std::invalid_argument("grad_total: structure term needs unseen attrs and centers");
        const Matrix& ua = *spec.unseen_attrs;
        const Matrix& cc = *spec.cluster_centers;
        if (ua.cols() != net.attr_dim() || cc.cols() != net.feature_dim())
            throw std::invalid_argument("grad_total: structure shapes inconsistent with net");

        const ForwardTrace t = forward_trace(net, ua);
        const Matrix& y = t.y;
        Matrix gy(y.rows(), y.cols());
        double value = 0.0;

        if (spec.structure == LossSpec::Structure::chamfer) {
            check_index_list(spec.nn_ab, y.rows(), cc.rows(), "grad_total: nn_ab");
            check_index_list(spec.nn_ba, cc.rows(), y.rows(), "grad_total: nn_ba");
            for (std::size_t i = 0; i < y.rows(); ++i) {
                const auto yi = y.row(i);
                const auto bj = cc.row(static_cast<std::size_t>(spec.nn_ab[i]));
                auto g = gy.row(i);
                for (std::size_t c = 0; c < yi.size(); ++c) {
                    const double diff = yi[c] - bj[c];
                    value += diff * diff;
                    g[c] += 2.0 * diff;
                }
            }
            for (std::size_t j = 0; j < cc.rows(); ++j) {
                const auto bj = cc.row(j);
                const std::size_t i = static_cast<std::size_t>(spec.nn_ba[j]);
                const auto yi = y.row(i);
                auto g = gy.row(i);
                for (std::size_t c = 0; c < yi.size(); ++c) {
                    const double diff = yi[c] - bj[c];
                    value += diff * diff;
                    g[c] += 2.0 * diff;
                }
            }
        } else {
            if (y.rows() != cc.rows())
                throw std::invalid_argument("grad_total: matching needs equal-size sets");
            check_index_list(spec.assignment, y.rows(), cc.rows(), "grad_total: assignment");
            for (std::size_t i = 0; i < y.rows(); ++i) {
                const auto yi = y.row(i);
                const auto bj = cc.row(static_cast<std::size_t>(spec.assignment[i]));
                auto g = gy.row(i);
                if (spec.cost == CostMode::squared) {
                    for (std::size_t c = 0; c < yi.size(); ++c) {
                        const double diff = yi[c] - bj[c];
                        value += diff * diff;
                        g[c] = 2.0 * diff;
                    }
                } else {
                    double sq = 0.0;
                    for (std::size_t c = 0; c < yi.size(); ++c) {
                        const double diff = yi[c] - bj[c];
                        sq += diff * diff;
                    }
                    const double dist = std::sqrt(sq);
                    value += dist;
                    if (dist > 0.0)
                        for (std::size_t c = 0; c < yi.size(); ++c) g[c] = (yi[c] - bj[c]) / dist;
                }
            }
        }

        out.structure = value;
        // A zero weight contributes nothing; skipping the backward pass keeps
        // the weight trajectory bit-identical to a run without the term.
        if (spec.beta != 0.0) {
            for (std::size_t i = 0; i < gy.size(); ++i) gy.data()[i] *= spec.beta;
            backprop(net, ua, t, gy, grads);
        }
    }

    out.reg = spec.weight_decay * (sum_squares(net.w1) + sum_squares(net.w2));
    if (spec.weight_decay != 0.0) {
        const double two_wd = 2.0 * spec.weight_decay;
        for (std::size_t i = 0; i < grads.w1.size(); ++i)
            grads.w1.data()[i] += two_wd * net.w1.data()[i];
        for (std::size_t i = 0; i < grads.w2.size(); ++i)
            grads.w2.data()[i] += two_wd * net.w2.data()[i];
    }

    out.total = out.mse + spec.beta * out.structure + out.reg;
    if (breakdown) *breakdown = out;
    return grads;
}

AdamState AdamState::init(const EmbeddingNet& net, const AdamParams& params) {
    AdamState s;
    s.m_w1 = Matrix(net.w1.rows(), net.w1.cols());
    s.v_w1 = Matrix(net.w1.rows(), net.w1.cols());
    s.m_w2 = Matrix(net.w2.rows(), net.w2.cols());
    s.v_w2 = Matrix(net.w2.rows(), net.w2.cols());
    s.params = params;
    return s;
}

namespace {

void adam_update(Matrix& w, const Matrix& g, Matrix& m, Matrix& v, const AdamParams& p,
                 double bc1, double bc2) {
    for (std::size_t i = 0; i < w.size(); ++i) {
        const double gi = g.data()[i];
        if (!std::isfinite(gi)) throw std::runtime_error("adam_step: non-finite gradient");
        m.data()[i] = p.beta1 * m.data()[i] + (1.0 - p.beta1) * gi;
        v.data()[i] = p.beta2 * v.data()[i] + (1.0 - p.beta2) * gi * gi;
        const double mhat = m.data()[i] / bc1;
        const double vhat = v.data()[i] / bc2;
        w.data()[i] -= p.learning_rate * mhat / (std::sqrt(vhat) + p.epsilon);
    }
}

}  // namespace

void adam_step(EmbeddingNet& net, const Gradients& grads, AdamState& state) {
    if (!grads.w1.same_shape(net.w1) || !grads.w2.same_shape(net.w2))
        throw std::invalid_argument("adam_step: gradient shape mismatch");
    if (!state.m_w1.same_shape(net.w1) || !state.m_w2.same_shape(net.w2))
        throw std::invalid_argument("adam_step: state shape mismatch");
    state.step += 1;
    const double bc1 = 1.0 - std::pow(state.params.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(state.params.beta2, static_cast<double>(state.step));
    adam_update(net.w1, grads.w1, state.m_w1, state.v_w1, state.params, bc1, bc2);
    adam_update(net.w2, grads.w2, state.m_w2, state.v_w2, state.params, bc1, bc2);
}

namespace {

nlohmann::json nested_rows(const Matrix& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t r = 0; r < m.rows(); ++r) {
        nlohmann::json row = nlohmann::json::array();
        for (double v : m.row(r)) row.push_back(v);
        rows.push_back(std::move(row));
    }
    return rows;
}

Matrix matrix_from_json(const nlohmann::json& rows, std::size_t want_rows, std::size_t want_cols,
                        const std::string& where) {
    if (!rows.is_array() || rows.size() != want_rows)
        throw std::runtime_error(where + ": expected " + std::to_string(want_rows) + " rows");
    Matrix m(want_rows, want_cols);
    for (std::size_t r = 0; r < want_rows; ++r) {
        const auto& row = rows[r];
        if (!row.is_array() || row.size() != want_cols)
            throw std::runtime_error(where + ": row " + std::to_string(r) + " has wrong arity");
        for (std::size_t c = 0; c < want_cols; ++c) m(r, c) = row[c].get<double>();
    }
    return m;
}

}  // namespace

void save_model(const EmbeddingNet& net, const std::filesystem::path& path) {
    net.validate();
    nlohmann::json j;
    j["m"] = net.attr_dim();
    j["h"] = net.hidden_dim();
    j["d"] = net.feature_dim();
    j["negative_slope"] = net.negative_slope;
    j["final_activation"] = net.final_activation;
    j["w1"] = nested_rows(net.w1);
    j["w2"] = nested_rows(net.w2);
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out << j.dump(2) << '\n';
    if (!out) throw std::runtime_error("error writing " + path.string());
}

EmbeddingNet load_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(path.string() + ": " + e.what());
    }
    EmbeddingNet net;
    try {
        const auto m = j.at("m").get<std::size_t>();
        const auto h = j.at("h").get<std::size_t>();
        const auto d = j.at("d").get<std::size_t>();
        net.negative_slope = j.at("negative_slope").get<double>();
        net.final_activation = j.value("final_activation", true);
        net.w1 = matrix_from_json(j.at("w1"), m, h, path.string() + ": w1");
        net.w2 = matrix_from_json(j.at("w2"), h, d, path.string() + ": w2");
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(path.string() + ": " + e.what());
    }
    net.validate();
    return net;
}

}  // namespace vsc
