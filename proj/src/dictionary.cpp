#include "dpdd/dictionary.hpp"

#include <cmath>
#include <functional>

namespace dpdd {

bool is_constant_term(const TermSpec& term) {
    return std::visit(
        [](const auto& t) -> bool {
            using T = std::decay_t<decltype(t)>;
            if constexpr (std::is_same_v<T, MonomialTerm>) {
                for (int e : t.exponents)
                    if (e != 0) return false;
                return true;
            } else if constexpr (std::is_same_v<T, HermiteTerm>) {
                return t.degree == 0;
            } else {
                return t.power == 0;
            }
        },
        term);
}

Dictionary::Dictionary(std::vector<TermSpec> terms, int dim_state)
    : terms_(std::move(terms)), dim_(dim_state) {
    if (dim_ < 1) throw InputError("dictionary dimension must be positive");
    if (terms_.size() < 2) throw InputError("a dictionary needs at least two observables");
    for (std::size_t i = 0; i < terms_.size(); ++i) {
        std::visit(
            [&](const auto& t) {
                using T = std::decay_t<decltype(t)>;
                if constexpr (std::is_same_v<T, MonomialTerm>) {
                    if (static_cast<int>(t.exponents.size()) != dim_)
                        throw InputError("monomial term " + std::to_string(i) +
                                         " has the wrong number of exponents");
                    for (int e : t.exponents)
                        if (e < 0) throw InputError("monomial exponents must be nonnegative");
                } else if constexpr (std::is_same_v<T, HermiteTerm>) {
                    if (dim_ != 1)
                        throw UnsupportedError("Hermite terms require a one-dimensional state");
                    if (t.degree < 0) throw InputError("Hermite degree must be nonnegative");
                    max_hermite_ = std::max(max_hermite_, t.degree);
                } else {
                    if (static_cast<int>(t.weights.size()) != dim_)
                        throw InputError("linear-power term " + std::to_string(i) +
                                         " has the wrong number of weights");
                    if (t.power < 0) throw InputError("linear-power exponent must be nonnegative");
                }
            },
            terms_[i]);
        for (std::size_t j = 0; j < i; ++j)
            if (terms_[i] == terms_[j])
                throw InputError("duplicate dictionary term at positions " + std::to_string(j) +
                                 " and " + std::to_string(i));
    }
    has_constant_ = is_constant_term(terms_.front());
}

namespace {
inline double ipow(double x, int n) {
    double r = 1.0;
    while (n > 0) {
        if (n & 1) r *= x;
        x *= x;
        n >>= 1;
    }
    return r;
}
} // namespace

Vector Dictionary::eval(const Eigen::Ref<const Vector>& x) const {
    if (x.size() != dim_)
        throw InputError("state has length " + std::to_string(x.size()) + ", dictionary expects " +
                         std::to_string(dim_));
    std::vector<double> hermite;
    if (max_hermite_ >= 0) {
        hermite.resize(static_cast<std::size_t>(max_hermite_) + 1);
        hermite[0] = 1.0;
        if (max_hermite_ >= 1) hermite[1] = x[0];
        for (int k = 1; k < max_hermite_; ++k)
            hermite[k + 1] = (x[0] * hermite[k] - std::sqrt(static_cast<double>(k)) * hermite[k - 1]) /
                             std::sqrt(static_cast<double>(k + 1));
    }
    Vector out(size());
    for (int i = 0; i < size(); ++i) {
        out[i] = std::visit(
            [&](const auto& t) -> double {
                using T = std::decay_t<decltype(t)>;
                if constexpr (std::is_same_v<T, MonomialTerm>) {
                    double v = 1.0;
                    for (int j = 0; j < dim_; ++j) v *= ipow(x[j], t.exponents[j]);
                    return v;
                } else if constexpr (std::is_same_v<T, HermiteTerm>) {
                    return hermite[t.degree];
                } else {
                    double s = 0.0;
                    for (int j = 0; j < dim_; ++j) s += t.weights[j] * x[j];
                    return ipow(s, t.power);
                }
            },
            terms_[i]);
    }
    return out;
}

Matrix Dictionary::eval_matrix(const Matrix& X) const {
    if (X.rows() != dim_)
        throw InputError("state matrix has " + std::to_string(X.rows()) +
                         " rows, dictionary expects " + std::to_string(dim_));
    Matrix out(size(), X.cols());
    for (Eigen::Index m = 0; m < X.cols(); ++m) out.col(m) = eval(X.col(m));
    return out;
}

Matrix eval_matrix(const Dictionary& dict, const Matrix& X) { return dict.eval_matrix(X); }

Dictionary monomial_dict(int dim_state, int max_degree) {
    if (dim_state < 1) throw InputError("dimension must be positive");
    if (max_degree < 1) throw InputError("monomial dictionary needs max_degree >= 1");
    std::vector<TermSpec> terms;
    std::vector<int> e(static_cast<std::size_t>(dim_state), 0);
    for (int degree = 0; degree <= max_degree; ++degree) {
        // Lexicographically descending exponent vectors with sum == degree.
        std::function<void(int, int)> fill = [&](int pos, int remaining) {
            if (pos == dim_state - 1) {
                e[static_cast<std::size_t>(pos)] = remaining;
                terms.push_back(MonomialTerm{e});
                return;
            }
            for (int k = remaining; k >= 0; --k) {
                e[static_cast<std::size_t>(pos)] = k;
                fill(pos + 1, remaining - k);
            }
        };
        fill(0, degree);
    }
    return Dictionary(std::move(terms), dim_state);
}

Dictionary hermite_dict(int max_degree, int dim_state) {
    if (dim_state != 1) throw UnsupportedError("Hermite dictionary is defined for d = 1 only");
    if (max_degree < 1) throw InputError("Hermite dictionary needs max_degree >= 1");
    std::vector<TermSpec> terms;
    for (int k = 0; k <= max_degree; ++k) terms.push_back(HermiteTerm{k});
    return Dictionary(std::move(terms), 1);
}

Dictionary linear_power_dict(const std::vector<LinearPowerTerm>& terms) {
    if (terms.empty()) throw InputError("empty linear-power dictionary");
    std::vector<TermSpec> specs(terms.begin(), terms.end());
    return Dictionary(std::move(specs), static_cast<int>(terms.front().weights.size()));
}

nlohmann::json term_to_json(const TermSpec& term) {
    return std::visit(
        [](const auto& t) -> nlohmann::json {
            using T = std::decay_t<decltype(t)>;
            if constexpr (std::is_same_v<T, MonomialTerm>)
                return {{"kind", "monomial"}, {"exponents", t.exponents}};
            else if constexpr (std::is_same_v<T, HermiteTerm>)
                return {{"kind", "hermite"}, {"degree", t.degree}};
            else
                return {{"kind", "linear-power"}, {"weights", t.weights}, {"power", t.power}};
        },
        term);
}

TermSpec term_from_json(const nlohmann::json& j) {
    try {
        const std::string kind = j.at("kind").get<std::string>();
        if (kind == "monomial") return MonomialTerm{j.at("exponents").get<std::vector<int>>()};
        if (kind == "hermite") return HermiteTerm{j.at("degree").get<int>()};
        if (kind == "linear-power")
            return LinearPowerTerm{j.at("weights").get<std::vector<double>>(), j.at("power").get<int>()};
        throw InputError("unknown dictionary term kind '" + kind + "'");
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("malformed dictionary term: ") + e.what());
    }
}

nlohmann::json dictionary_to_json(const Dictionary& dict) {
    nlohmann::json terms = nlohmann::json::array();
    for (const auto& t : dict.terms()) terms.push_back(term_to_json(t));
    return {{"dim_state", dict.dim_state()}, {"terms", terms}};
}

Dictionary dictionary_from_json(const nlohmann::json& j) {
    try {
        std::vector<TermSpec> terms;
        for (const auto& t : j.at("terms")) terms.push_back(term_from_json(t));
        return Dictionary(std::move(terms), j.at("dim_state").get<int>());
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("malformed dictionary: ") + e.what());
    }
}

} // namespace dpdd
