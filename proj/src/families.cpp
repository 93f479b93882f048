#include "kcf/families.hpp"

#include <cmath>

#include "kcf/dynamics.hpp"
#include "kcf/errors.hpp"
#include "kcf/kernels.hpp"

namespace kcf {

FamilySpec FamilySpec::polynomial(int degree) {
    FamilySpec f;
    f.kind = Kind::Polynomial;
    f.degree = degree;
    return f;
}

FamilySpec FamilySpec::mlp(std::vector<int> widths, Activation act) {
    FamilySpec f;
    f.kind = Kind::Mlp;
    f.widths = std::move(widths);
    f.activation = act;
    return f;
}

FamilySpec FamilySpec::residual_mlp(int blocks, int width, Activation act) {
    FamilySpec f;
    f.kind = Kind::ResidualMlp;
    f.blocks = blocks;
    f.width = width;
    f.activation = act;
    return f;
}

void FamilySpec::validate() const {
    switch (kind) {
        case Kind::Polynomial:
            if (degree < 1) throw ConfigError("polynomial family: degree must be >= 1");
            break;
        case Kind::Mlp:
            if (widths.empty()) throw ConfigError("mlp family: at least one hidden layer is required");
            for (int w : widths)
                if (w < 1) throw ConfigError("mlp family: widths must be positive");
            break;
        case Kind::ResidualMlp:
            if (blocks < 1 || width < 1) throw ConfigError("residual_mlp family: blocks and width must be positive");
            break;
    }
}

std::string to_string(FamilySpec::Kind kind) {
    switch (kind) {
        case FamilySpec::Kind::Polynomial:
            return "polynomial";
        case FamilySpec::Kind::Mlp:
            return "mlp";
        case FamilySpec::Kind::ResidualMlp:
            return "residual_mlp";
    }
    return "?";
}

std::string to_string(Activation act) { return act == Activation::Relu ? "relu" : "softplus"; }

FamilySpec::Kind parse_family_kind(const std::string& s) {
    if (s == "polynomial") return FamilySpec::Kind::Polynomial;
    if (s == "mlp") return FamilySpec::Kind::Mlp;
    if (s == "residual_mlp") return FamilySpec::Kind::ResidualMlp;
    throw ConfigError("unknown family kind '" + s + "'");
}

Activation parse_activation(const std::string& s) {
    if (s == "relu") return Activation::Relu;
    if (s == "softplus") return Activation::Softplus;
    throw ConfigError("unknown activation '" + s + "'");
}

std::string FamilySpec::describe() const {
    switch (kind) {
        case Kind::Polynomial:
            return "polynomial(" + std::to_string(degree) + ")";
        case Kind::Mlp: {
            std::string w;
            for (std::size_t i = 0; i < widths.size(); ++i) w += (i ? "," : "") + std::to_string(widths[i]);
            return "mlp([" + w + "], " + to_string(activation) + ")";
        }
        case Kind::ResidualMlp:
            return "residual_mlp(" + std::to_string(blocks) + ", " + std::to_string(width) + ", " +
                   to_string(activation) + ")";
    }
    return "?";
}

std::vector<std::vector<int>> monomial_exponents(int dim, int degree) {
    std::vector<std::vector<int>> out;
    std::vector<int> cur(static_cast<std::size_t>(dim), 0);
    for (int total = 0; total <= degree; ++total) {
        // all exponent vectors summing to `total`, first variable highest first
        auto rec = [&](auto&& self, int idx, int left) -> void {
            if (idx == dim - 1) {
                cur[static_cast<std::size_t>(idx)] = left;
                out.push_back(cur);
                return;
            }
            for (int e = left; e >= 0; --e) {
                cur[static_cast<std::size_t>(idx)] = e;
                self(self, idx + 1, left - e);
            }
        };
        if (dim == 0) {
            if (total == 0) out.push_back({});
            continue;
        }
        rec(rec, 0, total);
    }
    return out;
}

namespace {

void activate(Activation act, const Matrix& pre, Matrix& out) {
    out.resize(pre.rows(), pre.cols());
    const auto n = static_cast<std::size_t>(pre.size());
    if (act == Activation::Relu) {
        simd::active().relu(pre.data(), out.data(), n);
        return;
    }
    const double* p = pre.data();
    double* o = out.data();
    for (std::size_t i = 0; i < n; ++i) o[i] = p[i] > 30.0 ? p[i] : std::log1p(std::exp(p[i]));
}

// grad <- grad .* act'(pre)
void activate_backward(Activation act, const Matrix& pre, Matrix& grad) {
    const auto n = static_cast<std::size_t>(pre.size());
    if (act == Activation::Relu) {
        simd::active().relu_mask(pre.data(), grad.data(), n);
        return;
    }
    const double* p = pre.data();
    double* g = grad.data();
    for (std::size_t i = 0; i < n; ++i) g[i] *= 1.0 / (1.0 + std::exp(-p[i]));
}

}  // namespace

ParamMap::ParamMap(FamilySpec spec, int in_dim, int out_dim) : spec_(std::move(spec)), in_dim_(in_dim), out_dim_(out_dim) {
    spec_.validate();
    if (in_dim < 1 || out_dim < 0) throw ConfigError("parametric map: invalid dimensions");
    auto add = [&](int in, int out, bool bias) {
        layers_.push_back({in, out, num_params_, bias});
        num_params_ += in * out + (bias ? out : 0);
    };
    if (out_dim == 0) return;
    switch (spec_.kind) {
        case FamilySpec::Kind::Polynomial:
            monomials_ = monomial_exponents(in_dim, spec_.degree);
            add(static_cast<int>(monomials_.size()), out_dim, false);
            break;
        case FamilySpec::Kind::Mlp: {
            int prev = in_dim;
            for (int w : spec_.widths) {
                add(prev, w, true);
                prev = w;
            }
            add(prev, out_dim, true);
            break;
        }
        case FamilySpec::Kind::ResidualMlp:
            add(in_dim, spec_.width, true);
            for (int b = 0; b < spec_.blocks; ++b) {
                add(spec_.width, spec_.width, true);
                add(spec_.width, spec_.width, true);
            }
            add(spec_.width, out_dim, true);
            break;
    }
}

void ParamMap::initialize(std::span<double> params, std::uint64_t seed) const {
    UniformSampler rng(seed);
    const bool residual = spec_.kind == FamilySpec::Kind::ResidualMlp;
    for (std::size_t li = 0; li < layers_.size(); ++li) {
        const Dense& d = layers_[li];
        // second layer of each residual block starts small so blocks begin near identity
        const bool block_out = residual && li > 0 && li + 1 < layers_.size() && (li % 2 == 0);
        const double bound = (block_out ? 0.1 : 1.0) * std::sqrt(6.0 / static_cast<double>(d.in + d.out));
        for (int i = 0; i < d.in * d.out; ++i) params[static_cast<std::size_t>(d.offset + i)] = rng.uniform(-bound, bound);
        if (d.bias)
            for (int i = 0; i < d.out; ++i)
                params[static_cast<std::size_t>(d.offset + d.in * d.out + i)] = rng.uniform(-0.1, 0.1);
    }
}

Matrix ParamMap::features(const Matrix& in) const {
    Matrix f(static_cast<Eigen::Index>(monomials_.size()), in.cols());
    for (Eigen::Index j = 0; j < in.cols(); ++j)
        for (std::size_t k = 0; k < monomials_.size(); ++k) {
            double v = 1.0;
            for (int d = 0; d < in_dim_; ++d)
                for (int e = 0; e < monomials_[k][static_cast<std::size_t>(d)]; ++e) v *= in(d, j);
            f(static_cast<Eigen::Index>(k), j) = v;
        }
    return f;
}

namespace {

struct DenseView {
    const double* W;
    const double* b;
    int in, out;
};

Matrix dense_forward(const DenseView& d, const Matrix& x) {
    const auto& k = simd::active();
    Matrix y(d.out, x.cols());
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        const double* xj = x.col(j).data();
        for (int o = 0; o < d.out; ++o)
            y(o, j) = k.dot(d.W + static_cast<std::ptrdiff_t>(o) * d.in, xj, static_cast<std::size_t>(d.in)) +
                      (d.b ? d.b[o] : 0.0);
    }
    return y;
}

// dW, db accumulate; returns dX when requested
void dense_backward(const DenseView& d, const Matrix& x, const Matrix& dy, double* dW, double* db, Matrix* dx) {
    const auto& k = simd::active();
    if (dx) dx->setZero(d.in, x.cols());
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        const double* xj = x.col(j).data();
        for (int o = 0; o < d.out; ++o) {
            const double g = dy(o, j);
            if (g == 0.0) continue;
            k.axpy(g, xj, dW + static_cast<std::ptrdiff_t>(o) * d.in, static_cast<std::size_t>(d.in));
            if (db) db[o] += g;
            if (dx) k.axpy(g, d.W + static_cast<std::ptrdiff_t>(o) * d.in, dx->col(j).data(), static_cast<std::size_t>(d.in));
        }
    }
}

}  // namespace

Matrix ParamMap::forward(std::span<const double> params, const Matrix& in, Cache* cache) const {
    if (in.rows() != in_dim_) throw DimensionMismatch("parametric map: input has wrong dimension");
    if (cache) {
        cache->inputs.clear();
        cache->pre.clear();
    }
    if (out_dim_ == 0) return Matrix(0, in.cols());
    auto view = [&](const Dense& d) {
        const double* base = params.data() + d.offset;
        return DenseView{base, d.bias ? base + d.in * d.out : nullptr, d.in, d.out};
    };
    const Activation act = spec_.activation;
    switch (spec_.kind) {
        case FamilySpec::Kind::Polynomial: {
            Matrix f = features(in);
            Matrix y = dense_forward(view(layers_[0]), f);
            if (cache) cache->inputs.push_back(std::move(f));
            return y;
        }
        case FamilySpec::Kind::Mlp: {
            Matrix h = in;
            for (std::size_t li = 0; li + 1 < layers_.size(); ++li) {
                Matrix pre = dense_forward(view(layers_[li]), h);
                Matrix next;
                activate(act, pre, next);
                if (cache) {
                    cache->inputs.push_back(std::move(h));
                    cache->pre.push_back(std::move(pre));
                }
                h = std::move(next);
            }
            Matrix y = dense_forward(view(layers_.back()), h);
            if (cache) cache->inputs.push_back(std::move(h));
            return y;
        }
        case FamilySpec::Kind::ResidualMlp: {
            Matrix pre0 = dense_forward(view(layers_[0]), in);
            Matrix h;
            activate(act, pre0, h);
            if (cache) {
                cache->inputs.push_back(in);
                cache->pre.push_back(std::move(pre0));
            }
            for (int b = 0; b < spec_.blocks; ++b) {
                const Dense& l1 = layers_[static_cast<std::size_t>(1 + 2 * b)];
                const Dense& l2 = layers_[static_cast<std::size_t>(2 + 2 * b)];
                Matrix pre = dense_forward(view(l1), h);
                Matrix a;
                activate(act, pre, a);
                Matrix next = h + dense_forward(view(l2), a);
                if (cache) {
                    cache->inputs.push_back(std::move(h));
                    cache->pre.push_back(std::move(pre));
                    cache->inputs.push_back(std::move(a));
                }
                h = std::move(next);
            }
            Matrix y = dense_forward(view(layers_.back()), h);
            if (cache) cache->inputs.push_back(std::move(h));
            return y;
        }
    }
    return {};
}

void ParamMap::backward(std::span<const double> params, const Cache& cache, const Matrix& grad_out,
                        std::span<double> grad) const {
    if (out_dim_ == 0) return;
    auto view = [&](const Dense& d) {
        const double* base = params.data() + d.offset;
        return DenseView{base, d.bias ? base + d.in * d.out : nullptr, d.in, d.out};
    };
    auto gW = [&](const Dense& d) { return grad.data() + d.offset; };
    auto gb = [&](const Dense& d) { return d.bias ? grad.data() + d.offset + d.in * d.out : nullptr; };
    const Activation act = spec_.activation;

    switch (spec_.kind) {
        case FamilySpec::Kind::Polynomial: {
            const Dense& d = layers_[0];
            dense_backward(view(d), cache.inputs[0], grad_out, gW(d), gb(d), nullptr);
            return;
        }
        case FamilySpec::Kind::Mlp: {
            Matrix g = grad_out;
            for (std::size_t li = layers_.size(); li-- > 0;) {
                const Dense& d = layers_[li];
                Matrix dx;
                dense_backward(view(d), cache.inputs[li], g, gW(d), gb(d), li > 0 ? &dx : nullptr);
                if (li == 0) break;
                activate_backward(act, cache.pre[li - 1], dx);
                g = std::move(dx);
            }
            return;
        }
        case FamilySpec::Kind::ResidualMlp: {
            // inputs: [x, h0, a0, h1, a1, ..., h_B]; pre: [pre0, pre_b0, pre_b1, ...]
            const std::size_t last = layers_.size() - 1;
            Matrix gh;
            dense_backward(view(layers_[last]), cache.inputs.back(), grad_out, gW(layers_[last]), gb(layers_[last]), &gh);
            for (int b = spec_.blocks - 1; b >= 0; --b) {
                const Dense& l1 = layers_[static_cast<std::size_t>(1 + 2 * b)];
                const Dense& l2 = layers_[static_cast<std::size_t>(2 + 2 * b)];
                const Matrix& h = cache.inputs[static_cast<std::size_t>(1 + 2 * b)];
                const Matrix& a = cache.inputs[static_cast<std::size_t>(2 + 2 * b)];
                Matrix ga;
                dense_backward(view(l2), a, gh, gW(l2), gb(l2), &ga);
                activate_backward(act, cache.pre[static_cast<std::size_t>(1 + b)], ga);
                Matrix gh_inner;
                dense_backward(view(l1), h, ga, gW(l1), gb(l1), &gh_inner);
                gh += gh_inner;
            }
            activate_backward(act, cache.pre[0], gh);
            dense_backward(view(layers_[0]), cache.inputs[0], gh, gW(layers_[0]), gb(layers_[0]), nullptr);
            return;
        }
    }
}

double ParamMap::min_abs_preactivation(const Cache& cache) const {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& p : cache.pre)
        if (p.size() > 0) best = std::min(best, p.cwiseAbs().minCoeff());
    return best;
}

ParametricDictionary::ParametricDictionary(FamilySpec spec, int state_dim, int input_dim, int s, int l,
                                           std::vector<int> fixed_head)
    : spec_(spec),
      n_(state_dim),
      m_(input_dim),
      s_(s),
      l_(l),
      head_(std::move(fixed_head)),
      hnet_(spec, state_dim, l - static_cast<int>(head_.size())) {
    if (l < 1 || s < l) throw ConfigError("parametric dictionary: need 1 <= l <= s");
    if (static_cast<int>(head_.size()) > l) throw ConfigError("parametric dictionary: fixed head longer than l");
    for (int i : head_)
        if (i < 0 || i >= state_dim) throw ConfigError("parametric dictionary: fixed head index out of range");
    if (s > l) gnet_.emplace(spec, input_dim, (s - l) * l);
    x_scale = Vector::Ones(state_dim);
    u_scale = Vector::Ones(input_dim);
    params_ = Vector::Zero(num_params());
}

void ParametricDictionary::initialize(std::uint64_t seed) {
    params_.resize(num_params());
    std::span<double> all(params_.data(), static_cast<std::size_t>(params_.size()));
    hnet_.initialize(all.subspan(0, static_cast<std::size_t>(hnet_.num_params())), seed);
    if (gnet_)
        gnet_->initialize(all.subspan(static_cast<std::size_t>(hnet_.num_params())), seed ^ 0x9e3779b97f4a7c15ULL);
}

Matrix ParametricDictionary::head_block(const Matrix& X) const {
    Matrix out(static_cast<Eigen::Index>(head_.size()), X.cols());
    for (std::size_t k = 0; k < head_.size(); ++k) {
        const double scale = head_scaled ? x_scale(head_[k]) : 1.0;
        out.row(static_cast<Eigen::Index>(k)) = scale * X.row(head_[k]);
    }
    return out;
}

Matrix ParametricDictionary::bottom_block(const Matrix& Gflat, const Matrix& H) const {
    const int rows = s_ - l_;
    Matrix out(rows, H.cols());
    for (Eigen::Index j = 0; j < H.cols(); ++j) {
        const Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> g(
            Gflat.col(j).data(), rows, l_);
        out.col(j) = g * H.col(j);
    }
    return out;
}

ParametricDictionary::Pass ParametricDictionary::forward(const Matrix& X, const Matrix& Xplus, const Matrix& U) const {
    if (X.rows() != n_ || Xplus.rows() != n_ || U.rows() != m_ || X.cols() != U.cols() || Xplus.cols() != U.cols())
        throw DimensionMismatch("parametric dictionary: batch shapes do not match");
    const std::span<const double> all(params_.data(), static_cast<std::size_t>(params_.size()));
    const auto hp = all.subspan(0, static_cast<std::size_t>(hnet_.num_params()));
    const int hs = head_size();
    Pass p;
    const Eigen::Index B = X.cols();

    p.H.resize(l_, B);
    p.H.topRows(hs) = head_block(X);
    p.H.bottomRows(l_ - hs) = hnet_.forward(hp, x_scale.asDiagonal() * X, &p.hcache);
    p.HPlus.resize(l_, B);
    p.HPlus.topRows(hs) = head_block(Xplus);
    p.HPlus.bottomRows(l_ - hs) = hnet_.forward(hp, x_scale.asDiagonal() * Xplus, &p.hpcache);

    p.Phi.resize(s_, B);
    p.PhiPlus.resize(s_, B);
    p.Phi.topRows(l_) = p.H;
    p.PhiPlus.topRows(l_) = p.HPlus;
    if (gnet_) {
        p.Gflat = gnet_->forward(all.subspan(static_cast<std::size_t>(hnet_.num_params())), u_scale.asDiagonal() * U,
                                 &p.gcache);
        p.Phi.bottomRows(s_ - l_) = bottom_block(p.Gflat, p.H);
        p.PhiPlus.bottomRows(s_ - l_) = bottom_block(p.Gflat, p.HPlus);
    }
    return p;
}

Vector ParametricDictionary::backward(const Pass& p, const Matrix& dPhi, const Matrix& dPhiPlus) const {
    Vector grad = Vector::Zero(num_params());
    const std::span<const double> all(params_.data(), static_cast<std::size_t>(params_.size()));
    const std::span<double> gall(grad.data(), static_cast<std::size_t>(grad.size()));
    const auto hn = static_cast<std::size_t>(hnet_.num_params());
    const Eigen::Index B = dPhi.cols();
    const int hs = head_size();

    Matrix dH = dPhi.topRows(l_);
    Matrix dHPlus = dPhiPlus.topRows(l_);
    if (gnet_) {
        const int rows = s_ - l_;
        Matrix dG = Matrix::Zero(rows * l_, B);
        using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
        for (Eigen::Index j = 0; j < B; ++j) {
            const Eigen::Map<const RowMajor> g(p.Gflat.col(j).data(), rows, l_);
            Eigen::Map<RowMajor> dg(dG.col(j).data(), rows, l_);
            const auto db = dPhi.col(j).tail(rows);
            const auto dbp = dPhiPlus.col(j).tail(rows);
            dH.col(j) += g.transpose() * db;
            dHPlus.col(j) += g.transpose() * dbp;
            dg += db * p.H.col(j).transpose() + dbp * p.HPlus.col(j).transpose();
        }
        gnet_->backward(all.subspan(hn), p.gcache, dG, gall.subspan(hn));
    }
    if (l_ > hs) {
        hnet_.backward(all.subspan(0, hn), p.hcache, dH.bottomRows(l_ - hs), gall.subspan(0, hn));
        hnet_.backward(all.subspan(0, hn), p.hpcache, dHPlus.bottomRows(l_ - hs), gall.subspan(0, hn));
    }
    return grad;
}

Matrix ParametricDictionary::eval_H(const Matrix& X) const {
    const std::span<const double> all(params_.data(), static_cast<std::size_t>(params_.size()));
    Matrix H(l_, X.cols());
    H.topRows(head_size()) = head_block(X);
    H.bottomRows(l_ - head_size()) =
        hnet_.forward(all.subspan(0, static_cast<std::size_t>(hnet_.num_params())), x_scale.asDiagonal() * X);
    return H;
}

Matrix ParametricDictionary::eval(const Matrix& Z) const {
    if (Z.rows() != n_ + m_) throw DimensionMismatch("parametric dictionary: data has wrong row count");
    const Matrix X = Z.topRows(n_);
    const Matrix U = Z.bottomRows(m_);
    const Matrix H = eval_H(X);
    Matrix Phi(s_, Z.cols());
    Phi.topRows(l_) = H;
    if (gnet_) {
        const std::span<const double> all(params_.data(), static_cast<std::size_t>(params_.size()));
        const Matrix Gflat =
            gnet_->forward(all.subspan(static_cast<std::size_t>(hnet_.num_params())), u_scale.asDiagonal() * U);
        Phi.bottomRows(s_ - l_) = bottom_block(Gflat, H);
    }
    return Phi;
}

double ParametricDictionary::min_abs_preactivation(const Pass& p) const {
    double best = std::min(hnet_.min_abs_preactivation(p.hcache), hnet_.min_abs_preactivation(p.hpcache));
    if (gnet_) best = std::min(best, gnet_->min_abs_preactivation(p.gcache));
    return best;
}

NormalDictionary ParametricDictionary::as_normal() const {
    auto self = std::make_shared<const ParametricDictionary>(*this);
    NormalDictionary nd;
    nd.name = "parametric:" + spec_.describe();
    nd.input_dim_hint = m_;
    nd.H.state_dim = n_;
    nd.H.dim = l_;
    for (int i : head_) nd.H.tags.push_back("x" + std::to_string(i + 1));
    for (int k = head_size(); k < l_; ++k) nd.H.tags.push_back("h" + std::to_string(k + 1));
    nd.H.eval = [self](const Vector& x) -> Vector { return self->eval_H(x).col(0); };
    if (gnet_) {
        InputMatrixFunction g;
        g.input_dim = m_;
        g.rows = s_ - l_;
        g.cols = l_;
        g.eval = [self](const Vector& u) -> Matrix {
            const ParamMap& net = *self->gnet();
            const std::span<const double> all(self->params().data(), static_cast<std::size_t>(self->params().size()));
            const Matrix flat = net.forward(all.subspan(static_cast<std::size_t>(self->hnet().num_params())),
                                            self->u_scale.asDiagonal() * u);
            const int rows = self->s() - self->l();
            Matrix out(rows, self->l());
            for (int r = 0; r < rows; ++r)
                for (int c = 0; c < self->l(); ++c) out(r, c) = flat(r * self->l() + c, 0);
            return out;
        };
        nd.Gtilde = g;
    }
    return nd;
}

}  // namespace kcf
