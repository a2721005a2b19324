#pragma once

// Sequence attention over word-embedding vectors:
//
//   att(u, {v_i}) = sum_i alpha_i * v_i,
//   alpha_i = softmax_i( f(W1 u)^T f(W1 v_i) )
//
// plus analytic Jacobians and a finite-difference checker, and a loader
// for plain-text embedding tables.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "concord/errors.hpp"

namespace concord {

using Vec = std::vector<double>;

struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;  // row-major

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

    double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
};

enum class Nonlinearity { Relu, Tanh, Identity };

struct AttentionParams {
    Matrix w1;  // out_dim x in_dim
    Nonlinearity f = Nonlinearity::Relu;
};

struct AttentionResult {
    Vec output;
    Vec weights;  // the alphas, for inspection
};

namespace detail {

inline double apply_f(Nonlinearity f, double x) {
    switch (f) {
        case Nonlinearity::Relu: return x > 0.0 ? x : 0.0;
        case Nonlinearity::Tanh: return std::tanh(x);
        case Nonlinearity::Identity: return x;
    }
    return x;
}

// relu' at the kink is taken as 0.
inline double apply_df(Nonlinearity f, double x) {
    switch (f) {
        case Nonlinearity::Relu: return x > 0.0 ? 1.0 : 0.0;
        case Nonlinearity::Tanh: {
            const double t = std::tanh(x);
            return 1.0 - t * t;
        }
        case Nonlinearity::Identity: return 1.0;
    }
    return 1.0;
}

inline Vec matvec(const Matrix& m, const Vec& x) {
    Vec out(m.rows, 0.0);
    for (std::size_t r = 0; r < m.rows; ++r) {
        double acc = 0.0;
        for (std::size_t c = 0; c < m.cols; ++c) acc += m(r, c) * x[c];
        out[r] = acc;
    }
    return out;
}

inline Vec map_f(Nonlinearity f, const Vec& x) {
    Vec out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = apply_f(f, x[i]);
    return out;
}

inline double dot(const Vec& a, const Vec& b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

inline void check_dims(const Vec& u, const std::vector<Vec>& vs, const AttentionParams& params) {
    if (vs.empty()) throw DomainError("seq_attention: empty vector sequence");
    if (params.w1.rows == 0 || params.w1.cols == 0) throw DomainError("seq_attention: empty W1");
    if (u.size() != params.w1.cols) {
        throw DomainError("seq_attention: u has dim " + std::to_string(u.size()) + ", W1 expects " +
                          std::to_string(params.w1.cols));
    }
    for (const Vec& v : vs) {
        if (v.size() != params.w1.cols) {
            throw DomainError("seq_attention: v has dim " + std::to_string(v.size()) +
                              ", W1 expects " + std::to_string(params.w1.cols));
        }
    }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// softmax

/// Max-subtracted softmax. Weights are non-negative and sum to 1 within 1e-12.
inline Vec softmax(const Vec& xs) {
    if (xs.empty()) throw DomainError("softmax: empty input");
    double max = xs[0];
    for (double x : xs) {
        if (!std::isfinite(x)) throw DomainError("softmax: non-finite input");
        if (x > max) max = x;
    }
    Vec out(xs.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        out[i] = std::exp(xs[i] - max);
        sum += out[i];
    }
    for (double& w : out) w /= sum;
    return out;
}

/// J[i][j] = alpha_i (delta_ij - alpha_j).
inline Matrix softmax_jacobian(const Vec& xs) {
    const Vec alpha = softmax(xs);
    const std::size_t n = alpha.size();
    Matrix jac(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            jac(i, j) = alpha[i] * ((i == j ? 1.0 : 0.0) - alpha[j]);
        }
    }
    return jac;
}

// ---------------------------------------------------------------------------
// attention forward passes

inline AttentionResult seq_attention(const Vec& u, const std::vector<Vec>& vs,
                                     const AttentionParams& params) {
    detail::check_dims(u, vs, params);
    const Vec a = detail::map_f(params.f, detail::matvec(params.w1, u));
    Vec scores(vs.size());
    for (std::size_t i = 0; i < vs.size(); ++i) {
        scores[i] = detail::dot(a, detail::map_f(params.f, detail::matvec(params.w1, vs[i])));
    }
    AttentionResult result;
    result.weights = softmax(scores);
    result.output.assign(u.size(), 0.0);
    for (std::size_t i = 0; i < vs.size(); ++i) {
        for (std::size_t k = 0; k < u.size(); ++k) result.output[k] += result.weights[i] * vs[i][k];
    }
    return result;
}

/// Attention of the sequence onto itself: row i is seq_attention(v_i, vs).
inline std::vector<Vec> self_attention(const std::vector<Vec>& vs, const AttentionParams& params) {
    std::vector<Vec> out;
    out.reserve(vs.size());
    for (const Vec& v : vs) out.push_back(seq_attention(v, vs, params).output);
    return out;
}

// ---------------------------------------------------------------------------
// analytic Jacobians of seq_attention

/// Full-input Jacobian: d(output)/d(u) and d(output)/d(v_i) for each i.
struct SeqAttentionJacobian {
    Matrix wrt_u;                // dim x dim
    std::vector<Matrix> wrt_v;   // one dim x dim block per v_i
};

inline SeqAttentionJacobian seq_attention_jacobian(const Vec& u, const std::vector<Vec>& vs,
                                                   const AttentionParams& params) {
    detail::check_dims(u, vs, params);
    const std::size_t d = u.size();
    const std::size_t n = vs.size();
    const Matrix& w = params.w1;
    const std::size_t o = w.rows;

    const Vec zu = detail::matvec(w, u);
    const Vec a = detail::map_f(params.f, zu);
    std::vector<Vec> zv(n), b(n);
    Vec scores(n);
    for (std::size_t i = 0; i < n; ++i) {
        zv[i] = detail::matvec(w, vs[i]);
        b[i] = detail::map_f(params.f, zv[i]);
        scores[i] = detail::dot(a, b[i]);
    }
    const Vec alpha = softmax(scores);

    Vec out(d, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < d; ++k) out[k] += alpha[i] * vs[i][k];
    }

    // h[i][l] = d(score_i)/d(u_l);  g[i][l] = d(score_i)/d(v_i[l])
    std::vector<Vec> h(n, Vec(d, 0.0)), g(n, Vec(d, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t l = 0; l < d; ++l) {
            double hu = 0.0, gv = 0.0;
            for (std::size_t r = 0; r < o; ++r) {
                hu += detail::apply_df(params.f, zu[r]) * w(r, l) * b[i][r];
                gv += a[r] * detail::apply_df(params.f, zv[i][r]) * w(r, l);
            }
            h[i][l] = hu;
            g[i][l] = gv;
        }
    }

    SeqAttentionJacobian jac;
    jac.wrt_u = Matrix(d, d);
    jac.wrt_v.assign(n, Matrix(d, d));

    Vec hbar(d, 0.0);
    for (std::size_t m = 0; m < n; ++m) {
        for (std::size_t l = 0; l < d; ++l) hbar[l] += alpha[m] * h[m][l];
    }
    for (std::size_t k = 0; k < d; ++k) {
        for (std::size_t l = 0; l < d; ++l) {
            double acc = 0.0;
            for (std::size_t i = 0; i < n; ++i) acc += vs[i][k] * alpha[i] * (h[i][l] - hbar[l]);
            jac.wrt_u(k, l) = acc;
        }
    }
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t k = 0; k < d; ++k) {
            for (std::size_t l = 0; l < d; ++l) {
                double entry = (k == l) ? alpha[j] : 0.0;
                entry += g[j][l] * alpha[j] * (vs[j][k] - out[k]);
                jac.wrt_v[j](k, l) = entry;
            }
        }
    }
    return jac;
}

// ---------------------------------------------------------------------------
// finite-difference verification

namespace detail {

inline double relative_error(double analytic, double numeric) {
    const double denom = std::max({std::fabs(analytic), std::fabs(numeric), 1e-8});
    return std::fabs(analytic - numeric) / denom;
}

}  // namespace detail

/// Central finite differences against the analytic softmax Jacobian.
/// Returns the max relative error over all entries.
inline double jacobian_check_softmax(const Vec& xs, double h) {
    const Matrix analytic = softmax_jacobian(xs);
    const std::size_t n = xs.size();
    double max_err = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        Vec plus = xs, minus = xs;
        plus[j] += h;
        minus[j] -= h;
        const Vec fp = softmax(plus), fm = softmax(minus);
        for (std::size_t i = 0; i < n; ++i) {
            const double numeric = (fp[i] - fm[i]) / (2.0 * h);
            max_err = std::max(max_err, detail::relative_error(analytic(i, j), numeric));
        }
    }
    return max_err;
}

/// Central finite differences against the analytic seq_attention Jacobian,
/// over every coordinate of u and every v_i.
inline double jacobian_check_seq_attention(const Vec& u, const std::vector<Vec>& vs,
                                           const AttentionParams& params, double h) {
    const SeqAttentionJacobian analytic = seq_attention_jacobian(u, vs, params);
    const std::size_t d = u.size();
    double max_err = 0.0;

    auto fd_column = [&](const Vec& up, const std::vector<Vec>& vsp, const Vec& um,
                         const std::vector<Vec>& vsm) {
        const Vec fp = seq_attention(up, vsp, params).output;
        const Vec fm = seq_attention(um, vsm, params).output;
        Vec col(d);
        for (std::size_t k = 0; k < d; ++k) col[k] = (fp[k] - fm[k]) / (2.0 * h);
        return col;
    };

    for (std::size_t l = 0; l < d; ++l) {
        Vec up = u, um = u;
        up[l] += h;
        um[l] -= h;
        const Vec col = fd_column(up, vs, um, vs);
        for (std::size_t k = 0; k < d; ++k) {
            max_err = std::max(max_err, detail::relative_error(analytic.wrt_u(k, l), col[k]));
        }
    }
    for (std::size_t j = 0; j < vs.size(); ++j) {
        for (std::size_t l = 0; l < d; ++l) {
            std::vector<Vec> vsp = vs, vsm = vs;
            vsp[j][l] += h;
            vsm[j][l] -= h;
            const Vec col = fd_column(u, vsp, u, vsm);
            for (std::size_t k = 0; k < d; ++k) {
                max_err = std::max(max_err, detail::relative_error(analytic.wrt_v[j](k, l), col[k]));
            }
        }
    }
    return max_err;
}

// ---------------------------------------------------------------------------
// embedding tables

struct EmbeddingTable {
    std::unordered_map<std::string, Vec> vectors;
    std::size_t dim = 0;
    std::size_t duplicate_count = 0;

    const Vec* lookup(const std::string& token) const {
        auto it = vectors.find(token);
        return it == vectors.end() ? nullptr : &it->second;
    }
};

/// Plain-text embeddings: one token per line followed by whitespace-separated
/// floats. Dimensionality is fixed by the first line; the first occurrence
/// of a duplicate token wins.
inline EmbeddingTable load_embeddings(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open for reading: " + path);

    EmbeddingTable table;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::istringstream fields(line);
        std::string token;
        fields >> token;
        Vec vec;
        double value = 0.0;
        while (fields >> value) {
            if (!std::isfinite(value)) {
                throw SchemaError(path + ":" + std::to_string(line_no) + ": non-finite component");
            }
            vec.push_back(value);
        }
        if (!fields.eof()) {
            throw SchemaError(path + ":" + std::to_string(line_no) + ": malformed component");
        }
        if (vec.empty()) {
            throw SchemaError(path + ":" + std::to_string(line_no) + ": no components after token");
        }
        if (table.dim == 0) {
            table.dim = vec.size();
        } else if (vec.size() != table.dim) {
            throw SchemaError(path + ":" + std::to_string(line_no) + ": dimension " +
                              std::to_string(vec.size()) + " differs from " + std::to_string(table.dim));
        }
        if (!table.vectors.emplace(std::move(token), std::move(vec)).second) {
            ++table.duplicate_count;
        }
    }
    return table;
}

// ---------------------------------------------------------------------------
// test fixtures

/// Seeded W1 with entries uniform in [-0.1, 0.1]. This library does no
/// training, so standalone weights are fixtures, not learned artifacts.
inline AttentionParams random_attention_params(std::size_t out_dim, std::size_t in_dim,
                                               std::uint64_t seed,
                                               Nonlinearity f = Nonlinearity::Relu) {
    AttentionParams params;
    params.f = f;
    params.w1 = Matrix(out_dim, in_dim);
    std::uint64_t state = seed;
    for (double& entry : params.w1.data) {
        // splitmix64
        state += 0x9e3779b97f4a7c15ULL;
        std::uint64_t z = state;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        z = z ^ (z >> 31);
        const double unit = static_cast<double>(z >> 11) * 0x1.0p-53;
        entry = -0.1 + 0.2 * unit;
    }
    return params;
}

}  // namespace concord
