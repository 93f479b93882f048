#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "kcf/linalg.hpp"
#include "kcf/observables.hpp"

namespace kcf {

enum class Activation { Relu, Softplus };

struct FamilySpec {
    enum class Kind { Polynomial, Mlp, ResidualMlp };

    Kind kind = Kind::Polynomial;
    int degree = 2;               // polynomial
    std::vector<int> widths;      // mlp hidden widths
    int blocks = 0;               // residual_mlp
    int width = 0;                // residual_mlp
    Activation activation = Activation::Relu;

    static FamilySpec polynomial(int degree);
    static FamilySpec mlp(std::vector<int> widths, Activation act = Activation::Relu);
    static FamilySpec residual_mlp(int blocks, int width, Activation act = Activation::Relu);

    /// Throws ConfigError on non-positive sizes.
    void validate() const;
    std::string describe() const;
};

std::string to_string(FamilySpec::Kind kind);
std::string to_string(Activation act);
FamilySpec::Kind parse_family_kind(const std::string& s);
Activation parse_activation(const std::string& s);

/// Exponent tuples of all monomials in `dim` variables with total degree <= degree,
/// graded, constant first.
std::vector<std::vector<int>> monomial_exponents(int dim, int degree);

/// A parameterized map R^in -> R^out acting on batches (columns).
/// Dense weights live row-major in the flat parameter vector, followed by the bias.
class ParamMap {
public:
    ParamMap(FamilySpec spec, int in_dim, int out_dim);

    int in_dim() const { return in_dim_; }
    int out_dim() const { return out_dim_; }
    int num_params() const { return num_params_; }
    const FamilySpec& spec() const { return spec_; }

    void initialize(std::span<double> params, std::uint64_t seed) const;

    struct Cache {
        std::vector<Matrix> inputs;  // input of each dense layer
        std::vector<Matrix> pre;     // pre-activation of each activated layer
    };

    Matrix forward(std::span<const double> params, const Matrix& in, Cache* cache = nullptr) const;

    /// Accumulates d(loss)/d(params) into grad given d(loss)/d(output).
    void backward(std::span<const double> params, const Cache& cache, const Matrix& grad_out,
                  std::span<double> grad) const;

    /// Preactivations closest to zero, used to keep finite-difference checks
    /// away from ReLU kinks.
    double min_abs_preactivation(const Cache& cache) const;

private:
    struct Dense {
        int in = 0;
        int out = 0;
        int offset = 0;
        bool bias = true;
    };

    FamilySpec spec_;
    int in_dim_;
    int out_dim_;
    int num_params_ = 0;
    std::vector<Dense> layers_;
    std::vector<std::vector<int>> monomials_;

    Matrix features(const Matrix& in) const;
};

/// Normal-form dictionary Phi = [H(x); G~(u) H(x)] with
/// H(x) = [x_head; net_H(D_x x)] and G~(u) = reshape(net_G(D_u u)).
/// The identity top block of G is structural; only the two networks train.
class ParametricDictionary {
public:
    ParametricDictionary(FamilySpec spec, int state_dim, int input_dim, int s, int l,
                         std::vector<int> fixed_head = {});

    int state_dim() const { return n_; }
    int input_dim() const { return m_; }
    int s() const { return s_; }
    int l() const { return l_; }
    int head_size() const { return static_cast<int>(head_.size()); }
    const std::vector<int>& fixed_head() const { return head_; }
    const FamilySpec& spec() const { return spec_; }

    int num_params() const { return hnet_.num_params() + (gnet_ ? gnet_->num_params() : 0); }
    Vector& params() { return params_; }
    const Vector& params() const { return params_; }
    void initialize(std::uint64_t seed);

    /// Coordinate scaling applied before the networks (x -> x_scale .* x).
    Vector x_scale;
    Vector u_scale;
    /// While true the fixed head reports x_scale .* x; false reports raw x.
    bool head_scaled = false;

    struct Pass {
        Matrix Phi;      // on Z
        Matrix PhiPlus;  // on Z+
        Matrix H, HPlus, Gflat;
        ParamMap::Cache hcache, hpcache, gcache;
    };

    /// Phi(Z), Phi(Z+) for a batch with shared inputs U.
    Pass forward(const Matrix& X, const Matrix& Xplus, const Matrix& U) const;

    /// Gradient w.r.t. all trainable parameters.
    Vector backward(const Pass& pass, const Matrix& dPhi, const Matrix& dPhiPlus) const;

    Matrix eval(const Matrix& Z) const;
    Matrix eval_H(const Matrix& X) const;

    double min_abs_preactivation(const Pass& pass) const;

    /// Immutable snapshot usable wherever a NormalDictionary is expected.
    NormalDictionary as_normal() const;

    const ParamMap& hnet() const { return hnet_; }
    const ParamMap* gnet() const { return gnet_ ? &*gnet_ : nullptr; }

private:
    FamilySpec spec_;
    int n_, m_, s_, l_;
    std::vector<int> head_;
    ParamMap hnet_;
    std::optional<ParamMap> gnet_;
    Vector params_;

    Matrix head_block(const Matrix& X) const;
    Matrix bottom_block(const Matrix& Gflat, const Matrix& H) const;
};

}  // namespace kcf
