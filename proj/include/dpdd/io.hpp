#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "dpdd/diffusion_map.hpp"
#include "dpdd/forecast.hpp"
#include "dpdd/grid.hpp"
#include "dpdd/oracle.hpp"
#include "dpdd/sde.hpp"

namespace dpdd {

/// Shortest form that parses back to the same double (at most 17 significant digits).
std::string format_double(double v);
/// Whole-field parse; throws InputError on trailing characters or non-numbers.
double parse_double(const std::string& s);

/// `# dt=<value>` (and optional `# seed=<value>`), header x1..xd,y1..yd, one pair per row.
void write_pairs_csv(const std::string& path, const SnapshotPairs& pairs);
SnapshotPairs read_pairs_csv(const std::string& path);

/// Columns t, x1[, x2[, x3]], p; rows in grid order for each time.
void write_density_csv(const std::string& path, const DensityField& field);
DensityField read_density_csv(const std::string& path);

/// Columns t, x1..xd, p at scattered points (one block per time).
void write_scatter_csv(const std::string& path, const std::vector<double>& times, const Matrix& points,
                       const std::vector<Vector>& values);

/// Columns t, dim, order, value.
void write_moments_csv(const std::string& path, const MomentSeries& series);
MomentSeries read_moments_csv(const std::string& path);

/// Columns t, x1..xd.
void write_cloud_csv(const std::string& path, double t, const Matrix& cloud);

/// Columns t, rel_l2, l1, linf.
void write_error_csv(const std::string& path, const ErrorReport& report);

struct Provenance {
    std::optional<std::uint64_t> seed;
    std::size_t M = 0;
    std::string tool_version;
    std::string command;
};

nlohmann::json stationary_to_json(const StationaryDensity& ps, const Matrix* train_X = nullptr);
StationaryDensity stationary_from_json(const nlohmann::json& j, const Matrix* train_X = nullptr);

nlohmann::json forecast_model_to_json(const SpectralForecastModel& model, const Provenance& prov);
SpectralForecastModel forecast_model_from_json(const nlohmann::json& j, Provenance* prov = nullptr);

nlohmann::json df_model_to_json(const DfModel& model, const StationaryDensity& ps, const Provenance& prov);
DfModel df_model_from_json(const nlohmann::json& j, StationaryDensity* ps = nullptr, Provenance* prov = nullptr);

void write_json(const std::string& path, const nlohmann::json& j);
nlohmann::json read_json(const std::string& path);

/// Model type tag of a model file: "spectral" or "diffusion-forecast".
std::string model_type(const nlohmann::json& j);

} // namespace dpdd
