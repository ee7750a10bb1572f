#ifndef CAUSALRM_NUMKERNEL_HPP
#define CAUSALRM_NUMKERNEL_HPP

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace causalrm {

using Vec = std::vector<double>;

inline bool all_finite(const Vec& v) {
    for (double x : v) {
        if (!std::isfinite(x)) return false;
    }
    return true;
}

// Dense row-major matrix of doubles.
struct Matrix {
    std::size_t rows{0};
    std::size_t cols{0};
    Vec data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0)
        : rows(r), cols(c), data(r * c, fill) {}

    double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }
};

// y = m * v, accumulated left-to-right per row.
inline Vec matvec(const Matrix& m, const Vec& v) {
    if (m.cols != v.size()) {
        std::ostringstream os;
        os << "matvec: shape mismatch, matrix is " << m.rows << "x" << m.cols
           << " but vector has length " << v.size();
        throw std::invalid_argument(os.str());
    }
    Vec y(m.rows, 0.0);
    for (std::size_t i = 0; i < m.rows; ++i) {
        const double* row = m.data.data() + i * m.cols;
        double acc = 0.0;
        for (std::size_t j = 0; j < m.cols; ++j) acc += row[j] * v[j];
        y[i] = acc;
    }
    return y;
}

// y = m^T * v.
inline Vec matvec_t(const Matrix& m, const Vec& v) {
    if (m.rows != v.size()) {
        std::ostringstream os;
        os << "matvec_t: shape mismatch, matrix is " << m.rows << "x" << m.cols
           << " but vector has length " << v.size();
        throw std::invalid_argument(os.str());
    }
    Vec y(m.cols, 0.0);
    for (std::size_t i = 0; i < m.rows; ++i) {
        const double* row = m.data.data() + i * m.cols;
        const double vi = v[i];
        for (std::size_t j = 0; j < m.cols; ++j) y[j] += row[j] * vi;
    }
    return y;
}

// acc += scale * g * x^T
inline void add_outer(Matrix& acc, const Vec& g, const Vec& x, double scale = 1.0) {
    if (acc.rows != g.size() || acc.cols != x.size()) {
        throw std::invalid_argument("add_outer: shape mismatch");
    }
    for (std::size_t i = 0; i < acc.rows; ++i) {
        double* row = acc.data.data() + i * acc.cols;
        const double gi = scale * g[i];
        for (std::size_t j = 0; j < acc.cols; ++j) row[j] += gi * x[j];
    }
}

inline double dot(const Vec& a, const Vec& b) {
    if (a.size() != b.size()) throw std::invalid_argument("dot: length mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

inline void axpy(Vec& y, double alpha, const Vec& x) {
    if (y.size() != x.size()) throw std::invalid_argument("axpy: length mismatch");
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += alpha * x[i];
}

// Seeded RNG. Gaussian draws use Box-Muller on top of mt19937_64 so that the
// sample stream is identical for identical seeds regardless of the standard
// library implementation.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed), seed_(seed) {}

    std::uint64_t seed() const { return seed_; }

    // Uniform in [0, 1).
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double gaussian() {
        const double u1 = static_cast<double>((gen_() >> 11) + 1) * 0x1.0p-53;  // (0, 1]
        const double u2 = static_cast<double>(gen_() >> 11) * 0x1.0p-53;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
    }

    Vec gaussian_vec(std::size_t n) {
        Vec v(n);
        for (std::size_t i = 0; i < n; ++i) v[i] = gaussian();
        return v;
    }

    std::uint64_t next_u64() { return gen_(); }

    // Derived deterministic substream.
    Rng fork(std::uint64_t stream) const {
        std::uint64_t s = seed_ ^ (0x9e3779b97f4a7c15ULL * (stream + 1));
        s ^= s >> 33;
        s *= 0xff51afd7ed558ccdULL;
        s ^= s >> 33;
        return Rng(s);
    }

private:
    std::mt19937_64 gen_;
    std::uint64_t seed_;
};

// Named view onto a flat parameter block (a matrix's or vector's storage).
struct ParamRef {
    std::string name;
    Vec* data;
};

inline double global_norm(const std::vector<ParamRef>& params) {
    double sq = 0.0;
    for (const auto& p : params) {
        for (double x : *p.data) sq += x * x;
    }
    return std::sqrt(sq);
}

inline void scale_all(const std::vector<ParamRef>& params, double s) {
    for (const auto& p : params) {
        for (double& x : *p.data) x *= s;
    }
}

struct AdamConfig {
    double lr{1e-3};
    double beta1{0.9};
    double beta2{0.999};
    double eps{1e-8};
};

// Standard Adam with bias correction. Moment accumulators mirror the shapes
// of the parameter blocks they track.
class AdamState {
public:
    AdamState() = default;
    explicit AdamState(AdamConfig cfg) : cfg_(cfg) {}

    void init(const std::vector<ParamRef>& params) {
        m_.clear();
        v_.clear();
        for (const auto& p : params) {
            m_.emplace_back(p.data->size(), 0.0);
            v_.emplace_back(p.data->size(), 0.0);
        }
        step_ = 0;
    }

    std::size_t step() const { return step_; }
    AdamConfig& config() { return cfg_; }

    void update(const std::vector<ParamRef>& params, const std::vector<ParamRef>& grads) {
        if (m_.empty()) init(params);
        if (params.size() != grads.size() || params.size() != m_.size()) {
            throw std::invalid_argument("adam_step: parameter/gradient group count mismatch");
        }
        for (std::size_t k = 0; k < params.size(); ++k) {
            if (grads[k].data->size() != params[k].data->size()) {
                throw std::invalid_argument("adam_step: shape mismatch on " + params[k].name);
            }
            if (!all_finite(*grads[k].data)) {
                throw std::runtime_error("adam_step: non-finite gradient on " + params[k].name);
            }
        }
        ++step_;
        const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_));
        const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_));
        for (std::size_t k = 0; k < params.size(); ++k) {
            Vec& w = *params[k].data;
            const Vec& g = *grads[k].data;
            Vec& m = m_[k];
            Vec& v = v_[k];
            for (std::size_t i = 0; i < w.size(); ++i) {
                m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g[i];
                v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g[i] * g[i];
                const double mhat = m[i] / bc1;
                const double vhat = v[i] / bc2;
                w[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
            }
        }
    }

private:
    AdamConfig cfg_;
    std::size_t step_{0};
    std::vector<Vec> m_, v_;
};

struct GradCheckResult {
    double max_rel_err{0.0};
    std::string worst_param;
    std::size_t worst_index{0};
};

// Central-difference check of analytic gradients. loss_fn must be a
// deterministic function of the parameters (noise draws frozen); this is
// probed by evaluating it twice up front. The optional filter restricts the
// check to parameter blocks whose name it accepts.
template <class LossFn>
GradCheckResult finite_diff_check(LossFn&& loss_fn,
                                  const std::vector<ParamRef>& params,
                                  const std::vector<ParamRef>& analytic,
                                  double epsilon,
                                  const std::function<bool(std::string_view)>& filter = {}) {
    if (!(epsilon > 1e-7 && epsilon < 1e-3)) {
        throw std::invalid_argument("finite_diff_check: epsilon must lie in (1e-7, 1e-3)");
    }
    if (params.size() != analytic.size()) {
        throw std::invalid_argument("finite_diff_check: group count mismatch");
    }
    const double l0 = loss_fn();
    const double l1 = loss_fn();
    if (l0 != l1) {
        throw std::runtime_error("finite_diff_check: loss_fn is not deterministic (frozen-noise precondition violated)");
    }
    GradCheckResult res;
    for (std::size_t k = 0; k < params.size(); ++k) {
        if (filter && !filter(params[k].name)) continue;
        Vec& w = *params[k].data;
        const Vec& ga = *analytic[k].data;
        if (w.size() != ga.size()) {
            throw std::invalid_argument("finite_diff_check: shape mismatch on " + params[k].name);
        }
        for (std::size_t i = 0; i < w.size(); ++i) {
            const double orig = w[i];
            w[i] = orig + epsilon;
            const double lp = loss_fn();
            w[i] = orig - epsilon;
            const double lm = loss_fn();
            w[i] = orig;
            const double gf = (lp - lm) / (2.0 * epsilon);
            const double denom = std::max({std::fabs(ga[i]), std::fabs(gf), 1e-8});
            const double rel = std::fabs(ga[i] - gf) / denom;
            if (rel > res.max_rel_err) {
                res.max_rel_err = rel;
                res.worst_param = params[k].name;
                res.worst_index = i;
            }
        }
    }
    return res;
}

}  // namespace causalrm

#endif  // CAUSALRM_NUMKERNEL_HPP
