#include "dpdd/specs.hpp"

#include <charconv>
#include <cmath>

#include "dpdd/io.hpp"

namespace dpdd {

namespace {

std::vector<std::string> split_on(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

int parse_nonneg_int(const std::string& s, const std::string& what) {
    int v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size() || v < 0)
        throw InputError(what + ": '" + s + "' is not a nonnegative integer");
    return v;
}

Vector parse_vector(const std::string& s, int dim, const std::string& what) {
    const auto vals = parse_real_list(s);
    if (vals.size() == 1 && dim > 1) return Vector::Constant(dim, vals[0]);
    if (static_cast<int>(vals.size()) != dim)
        throw InputError(what + ": expected " + std::to_string(dim) + " values, got " + std::to_string(vals.size()));
    return Eigen::Map<const Vector>(vals.data(), dim);
}

} // namespace

std::vector<double> parse_real_list(const std::string& spec) {
    if (spec.empty()) throw InputError("empty list");
    std::vector<double> out;
    for (const auto& item : split_on(spec, ',')) out.push_back(parse_double(item));
    return out;
}

std::vector<int> parse_int_list(const std::string& spec) {
    if (spec.empty()) throw InputError("empty list");
    std::vector<int> out;
    for (const auto& item : split_on(spec, ',')) out.push_back(parse_nonneg_int(item, "integer list"));
    return out;
}

Dictionary parse_dict_spec(const std::string& spec, int dim) {
    const auto colon = spec.find(':');
    if (colon == std::string::npos)
        throw InputError("dictionary spec '" + spec + "' must be monomial:<deg>, hermite:<deg> or linpow:<w>:<p>");
    const std::string kind = spec.substr(0, colon);
    const std::string rest = spec.substr(colon + 1);
    if (kind == "monomial") {
        const int deg = parse_nonneg_int(rest, "monomial degree");
        if (deg < 1) throw InputError("monomial degree must be at least 1");
        return monomial_dict(dim, deg);
    }
    if (kind == "hermite") {
        if (dim != 1) throw UnsupportedError("hermite dictionaries require one-dimensional states");
        return hermite_dict(parse_nonneg_int(rest, "hermite degree"), dim);
    }
    if (kind == "linpow") {
        // w1,..,wd:p,w1,..,wd:p,...: the segment between two colons holds a power and the next weights.
        const auto segs = split_on(rest, ':');
        if (segs.size() < 2) throw InputError("linpow spec must be linpow:<w1,..,wd>:<p>[,<w1,..,wd>:<p>...]");
        std::vector<LinearPowerTerm> terms;
        std::vector<double> weights = parse_real_list(segs[0]);
        for (std::size_t i = 1; i < segs.size(); ++i) {
            if (static_cast<int>(weights.size()) != dim)
                throw InputError("linpow terms need " + std::to_string(dim) + " weights each");
            const auto items = split_on(segs[i], ',');
            const bool last = i + 1 == segs.size();
            if (last != (items.size() == 1)) throw InputError("linpow spec '" + rest + "' is malformed");
            LinearPowerTerm t;
            t.weights = weights;
            t.power = parse_nonneg_int(items[0], "linpow power");
            terms.push_back(t);
            weights.clear();
            for (std::size_t k = 1; k < items.size(); ++k) weights.push_back(parse_double(items[k]));
        }
        return linear_power_dict(terms);
    }
    throw InputError("unknown dictionary kind '" + kind + "' (valid: monomial, hermite, linpow)");
}

StationaryDensity parse_stationary_spec(const std::string& spec, const Matrix& samples) {
    const auto parts = split_on(spec, ':');
    const int d = static_cast<int>(samples.rows());
    if (parts[0] == "analytic" && parts.size() >= 2) {
        if (parts[1] == "doublewell" || parts[1] == "double-well") {
            if (d != 1) throw InputError("analytic:doublewell is one-dimensional");
            if (parts.size() == 2) return analytic_doublewell(std::sqrt(2.0));
            if (parts.size() == 3) return analytic_doublewell(parse_double(parts[2]));
        } else if (parts[1] == "gaussian") {
            if (parts.size() == 2) return analytic_gaussian(Vector::Zero(d), Matrix::Identity(d, d));
            if (parts.size() == 4) {
                const Vector var = parse_vector(parts[3], d, "gaussian variance");
                return analytic_gaussian(parse_vector(parts[2], d, "gaussian mean"), var.asDiagonal());
            }
        }
    } else if (parts[0] == "kde" && parts.size() == 2) {
        if (parts[1] == "silverman") return kde_fit(samples, KdeRule::Silverman);
        if (parts[1] == "knn") return kde_fit(samples, KdeRule::KnnVariable);
    }
    throw InputError("stationary spec '" + spec +
                     "' must be analytic:doublewell[:sigma], analytic:gaussian[:m:v], kde:silverman or kde:knn");
}

InitialDensity parse_p0_spec(const std::string& spec, int dim) {
    if (spec == "stationary") return InitialDensity::stationary(dim);
    const auto parts = split_on(spec, ':');
    if (parts.size() == 3 && parts[0] == "gaussian") {
        const Vector var = parse_vector(parts[2], dim, "p0 variance");
        return InitialDensity::gaussian(parse_vector(parts[1], dim, "p0 mean"), var.asDiagonal());
    }
    throw InputError("p0 spec '" + spec + "' must be gaussian:<mean>:<variance> or stationary");
}

Grid parse_grid_spec(const std::string& spec) {
    std::vector<Axis> axes;
    for (const auto& item : split_on(spec, ',')) {
        const auto p = split_on(item, ':');
        if (p.size() != 3) throw InputError("grid axis '" + item + "' must be a:b:n");
        Axis ax{parse_double(p[0]), parse_double(p[1]), static_cast<std::size_t>(parse_nonneg_int(p[2], "grid points"))};
        axes.push_back(ax);
    }
    return Grid(axes);
}

std::map<std::string, double> parse_overrides(const std::vector<std::string>& items) {
    std::map<std::string, double> out;
    for (const auto& item : items) {
        const auto eq = item.find('=');
        if (eq == std::string::npos || eq == 0) throw InputError("parameter '" + item + "' must be name=value");
        out[item.substr(0, eq)] = parse_double(item.substr(eq + 1));
    }
    return out;
}

} // namespace dpdd
