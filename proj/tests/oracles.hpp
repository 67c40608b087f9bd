// Test-only reference implementations, kept deliberately independent of the
// library: plain nested loops over vector<vector<double>>, no shared kernels.
#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

namespace oracle {

using Mat = std::vector<std::vector<double>>;

inline Mat zeros(std::size_t r, std::size_t c) { return Mat(r, std::vector<double>(c, 0.0)); }

inline Mat matmul(const Mat& a, const Mat& b) {
    Mat out = zeros(a.size(), b[0].size());
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < b[0].size(); ++j)
            for (std::size_t k = 0; k < b.size(); ++k) out[i][j] += a[i][k] * b[k][j];
    return out;
}

inline Mat add(const Mat& a, const Mat& b) {
    Mat out = a;
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < a[0].size(); ++j) out[i][j] += b[i][j];
    return out;
}

inline Mat hadamard(const Mat& a, const Mat& b) {
    Mat out = a;
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < a[0].size(); ++j) out[i][j] *= b[i][j];
    return out;
}

inline Mat transpose(const Mat& a) {
    Mat out = zeros(a[0].size(), a.size());
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < a[0].size(); ++j) out[j][i] = a[i][j];
    return out;
}

inline Mat map(const Mat& a, double (*fn)(double)) {
    Mat out = a;
    for (auto& row : out)
        for (auto& v : row) v = fn(v);
    return out;
}

inline double sigmoid_scalar(double x) { return 1.0 / (1.0 + std::exp(-x)); }
inline double relu_scalar(double x) { return x > 0.0 ? x : 0.0; }

inline Mat softmax_rows(const Mat& a) {
    Mat out = a;
    for (auto& row : out) {
        double mx = row[0];
        for (double v : row) mx = std::max(mx, v);
        double sum = 0.0;
        for (auto& v : row) {
            v = std::exp(v - mx);
            sum += v;
        }
        for (auto& v : row) v /= sum;
    }
    return out;
}

// A_hat = D~^-1/2 (A + I) D~^-1/2 evaluated directly from the formula.
inline Mat normalize_adj(const Mat& a) {
    const std::size_t n = a.size();
    Mat tilde = a;
    for (std::size_t i = 0; i < n; ++i) tilde[i][i] += 1.0;
    std::vector<double> deg(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) deg[i] += tilde[i][j];
    Mat out = zeros(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            out[i][j] = tilde[i][j] / (std::sqrt(deg[i]) * std::sqrt(deg[j]));
    return out;
}

// Slice structural features: A_hat relu(A_hat x W0) W1 with a linear output
// layer, written equation by equation.
inline Mat gcn(const Mat& x, const Mat& a, const Mat& w0, const Mat& w1) {
    Mat a_hat = normalize_adj(a);
    Mat hidden = map(matmul(matmul(a_hat, x), w0), relu_scalar);
    return matmul(matmul(a_hat, hidden), w1);
}

struct EfWeights {
    Mat w0, w1, wz, uz, wr, ur, w, u;
};

// One gated-recurrence step over a slice (update gate, reset gate, candidate,
// convex state update).
inline Mat ef_extract(const Mat& x, const Mat& state, const Mat& a, const EfWeights& wts) {
    Mat z_struct = gcn(x, a, wts.w0, wts.w1);
    Mat update = map(add(matmul(z_struct, wts.wz), matmul(state, wts.uz)), sigmoid_scalar);
    Mat reset = map(add(matmul(z_struct, wts.wr), matmul(state, wts.ur)), sigmoid_scalar);
    Mat candidate =
        map(add(matmul(z_struct, wts.w), matmul(hadamard(reset, state), wts.u)),
            [](double v) { return std::tanh(v); });
    Mat out = state;
    for (std::size_t i = 0; i < out.size(); ++i)
        for (std::size_t j = 0; j < out[0].size(); ++j)
            out[i][j] = (1.0 - update[i][j]) * state[i][j] + update[i][j] * candidate[i][j];
    return out;
}

struct PoolOut {
    Mat h_pool, a_pool, assignment;
};

inline PoolOut pool(const Mat& h, const Mat& a, const Mat& w0, const Mat& w1_sliced) {
    PoolOut out;
    out.assignment = softmax_rows(gcn(h, a, w0, w1_sliced));
    Mat ct = transpose(out.assignment);
    out.h_pool = matmul(ct, h);
    out.a_pool = matmul(matmul(ct, a), out.assignment);
    return out;
}

// Mean over the batch of -sum_j Q_ij ln(p_ij), probabilities clamped below.
inline double cross_entropy(const std::vector<std::vector<double>>& probs,
                            const std::vector<int>& labels) {
    double total = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        double p = probs[i][static_cast<std::size_t>(labels[i])];
        total -= std::log(std::max(p, 1e-12));
    }
    return total / static_cast<double>(probs.size());
}

// Plain scalar GRU cell driven by a constant input vector; the N=1, A=0 case
// of the extractor must collapse to this.
struct ScalarGru {
    std::vector<double> wz, uz, wr, ur, w, u;  // d x d row-major
    std::size_t d;

    std::vector<double> step(const std::vector<double>& z_in,
                             const std::vector<double>& state) const {
        auto mat = [&](const std::vector<double>& m, const std::vector<double>& v) {
            std::vector<double> out(d, 0.0);
            for (std::size_t i = 0; i < d; ++i)
                for (std::size_t j = 0; j < d; ++j) out[j] += v[i] * m[i * d + j];
            return out;
        };
        auto zs = mat(wz, z_in), zh = mat(uz, state);
        auto rs = mat(wr, z_in), rh = mat(ur, state);
        std::vector<double> update(d), reset(d);
        for (std::size_t i = 0; i < d; ++i) {
            update[i] = sigmoid_scalar(zs[i] + zh[i]);
            reset[i] = sigmoid_scalar(rs[i] + rh[i]);
        }
        auto cs = mat(w, z_in);
        std::vector<double> gated(d);
        for (std::size_t i = 0; i < d; ++i) gated[i] = reset[i] * state[i];
        auto ch = mat(u, gated);
        std::vector<double> out(d);
        for (std::size_t i = 0; i < d; ++i) {
            const double cand = std::tanh(cs[i] + ch[i]);
            out[i] = (1.0 - update[i]) * state[i] + update[i] * cand;
        }
        return out;
    }
};

// Brute-force interval assignment: slice t owns [b_t, b_{t+1}) with the last
// boundary inclusive.
inline std::size_t assign_slice(double ts, double lo, double hi, std::size_t t_slices) {
    for (std::size_t t = 0; t < t_slices; ++t) {
        const double left = lo + (hi - lo) * static_cast<double>(t) / static_cast<double>(t_slices);
        const double right =
            lo + (hi - lo) * static_cast<double>(t + 1) / static_cast<double>(t_slices);
        if (ts >= left && (ts < right || t == t_slices - 1)) return t;
    }
    return t_slices - 1;
}

}  // namespace oracle
