#pragma once

#include <map>
#include <string>
#include <vector>

#include "dpdd/densities.hpp"
#include "dpdd/dictionary.hpp"
#include "dpdd/grid.hpp"

namespace dpdd {

/// monomial:<deg> | hermite:<deg> | linpow:<w1,..,wd>:<p>[,<w1,..,wd>:<p>...]
Dictionary parse_dict_spec(const std::string& spec, int dim);

/// analytic:doublewell[:sigma] | analytic:gaussian[:<m>:<v>] | kde:silverman | kde:knn.
/// Without parameters analytic:gaussian is the standard normal; KDE variants fit `samples`.
StationaryDensity parse_stationary_spec(const std::string& spec, const Matrix& samples);

/// gaussian:<m1,..,md>:<v1,..,vd> (diagonal covariance) | stationary
InitialDensity parse_p0_spec(const std::string& spec, int dim);

/// a:b:n[,a2:b2:n2[,a3:b3:n3]]
Grid parse_grid_spec(const std::string& spec);

std::vector<double> parse_real_list(const std::string& spec);
std::vector<int> parse_int_list(const std::string& spec);

/// key=value pairs for model parameter overrides.
std::map<std::string, double> parse_overrides(const std::vector<std::string>& items);

} // namespace dpdd
