#pragma once

#include <variant>
#include <vector>

#include "json.hpp"

#include "dpdd/common.hpp"

namespace dpdd {

/// prod_j x_j^{exponents[j]}
struct MonomialTerm {
    std::vector<int> exponents;
    bool operator==(const MonomialTerm&) const = default;
};

/// Normalized probabilists' Hermite polynomial He_k(x) / sqrt(k!), scalar input only.
struct HermiteTerm {
    int degree = 0;
    bool operator==(const HermiteTerm&) const = default;
};

/// (w . x)^power
struct LinearPowerTerm {
    std::vector<double> weights;
    int power = 0;
    bool operator==(const LinearPowerTerm&) const = default;
};

using TermSpec = std::variant<MonomialTerm, HermiteTerm, LinearPowerTerm>;

/// Ordered, immutable list of observables psi_1 .. psi_N on R^d.
class Dictionary {
public:
    Dictionary() = default;
    Dictionary(std::vector<TermSpec> terms, int dim_state);

    int size() const { return static_cast<int>(terms_.size()); }
    int dim_state() const { return dim_; }
    bool has_constant() const { return has_constant_; }
    const std::vector<TermSpec>& terms() const { return terms_; }

    /// psi(x) for one state.
    Vector eval(const Eigen::Ref<const Vector>& x) const;
    /// N x M matrix of psi_i(x_m).
    Matrix eval_matrix(const Matrix& X) const;

private:
    std::vector<TermSpec> terms_;
    int dim_ = 0;
    bool has_constant_ = false;
    int max_hermite_ = -1;
};

bool is_constant_term(const TermSpec& term);

/// All monomials of total degree <= max_degree, constant first, then graded
/// lexicographic order (d = 2, degree 2: 1, u, v, u^2, uv, v^2).
Dictionary monomial_dict(int dim_state, int max_degree);

/// He_k / sqrt(k!) for k = 0 .. max_degree; dim_state must be 1.
Dictionary hermite_dict(int max_degree, int dim_state = 1);

/// Tensor convenience: each term is (weights . x)^power.
Dictionary linear_power_dict(const std::vector<LinearPowerTerm>& terms);

Matrix eval_matrix(const Dictionary& dict, const Matrix& X);

nlohmann::json term_to_json(const TermSpec& term);
TermSpec term_from_json(const nlohmann::json& j);
nlohmann::json dictionary_to_json(const Dictionary& dict);
Dictionary dictionary_from_json(const nlohmann::json& j);

} // namespace dpdd
