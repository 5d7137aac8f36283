#include "dpdd/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace dpdd {

using nlohmann::json;

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

double parse_double(const std::string& s) {
    double v = 0.0;
    const char* b = s.data();
    const char* e = s.data() + s.size();
    if (b != e && *b == '+') ++b;
    const auto res = std::from_chars(b, e, v);
    if (res.ec != std::errc() || res.ptr != e || s.empty()) throw InputError("'" + s + "' is not a number");
    return v;
}

namespace {

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot open '" + path + "' for writing");
    return out;
}

std::ifstream open_in(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open '" + path + "'");
    return in;
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

/// Lines of a CSV file with comment lines (leading '#') split off.
struct CsvFile {
    std::vector<std::string> comments;
    std::string header;
    std::vector<std::pair<std::size_t, std::string>> rows;  // 1-based line number, content
};

CsvFile read_csv(const std::string& path) {
    auto in = open_in(path);
    CsvFile f;
    std::string line;
    std::size_t lineno = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') throw InputError(path + ":" + std::to_string(lineno) + ": CR line ending");
        if (line.empty()) continue;
        if (line[0] == '#') {
            if (have_header) throw InputError(path + ":" + std::to_string(lineno) + ": comment after header");
            f.comments.push_back(line.substr(1));
            continue;
        }
        if (!have_header) {
            f.header = line;
            have_header = true;
        } else {
            f.rows.emplace_back(lineno, line);
        }
    }
    if (!have_header) throw InputError(path + ": missing header");
    return f;
}

std::vector<double> parse_row(const std::string& path, std::size_t lineno, const std::string& line,
                              std::size_t expected) {
    const auto fields = split(line);
    if (fields.size() != expected)
        throw InputError(path + ": row at line " + std::to_string(lineno) + " has " + std::to_string(fields.size()) +
                         " columns, expected " + std::to_string(expected));
    std::vector<double> out(expected);
    for (std::size_t i = 0; i < expected; ++i) {
        try {
            out[i] = parse_double(fields[i]);
        } catch (const InputError& e) {
            throw InputError(path + ": row at line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

std::string coord_header(const std::string& prefix, int d) {
    std::string h;
    for (int j = 1; j <= d; ++j) h += (j > 1 ? "," : "") + prefix + std::to_string(j);
    return h;
}

std::map<std::string, std::string> parse_comments(const std::vector<std::string>& comments) {
    std::map<std::string, std::string> kv;
    for (auto c : comments) {
        c.erase(0, c.find_first_not_of(' '));
        const auto eq = c.find('=');
        if (eq == std::string::npos) continue;
        kv[c.substr(0, eq)] = c.substr(eq + 1);
    }
    return kv;
}

} // namespace

void write_pairs_csv(const std::string& path, const SnapshotPairs& pairs) {
    pairs.validate();
    auto out = open_out(path);
    out << "# dt=" << format_double(pairs.dt) << '\n';
    if (pairs.source_seed) out << "# seed=" << *pairs.source_seed << '\n';
    const int d = pairs.dim();
    out << coord_header("x", d) << ',' << coord_header("y", d) << '\n';
    for (Eigen::Index m = 0; m < pairs.X.cols(); ++m) {
        for (int j = 0; j < d; ++j) out << format_double(pairs.X(j, m)) << ',';
        for (int j = 0; j < d; ++j) out << format_double(pairs.Y(j, m)) << (j + 1 < d ? "," : "\n");
    }
    if (!out) throw InputError("failed writing '" + path + "'");
}

SnapshotPairs read_pairs_csv(const std::string& path) {
    const CsvFile f = read_csv(path);
    const auto kv = parse_comments(f.comments);
    SnapshotPairs pairs;
    const auto dt = kv.find("dt");
    if (dt == kv.end()) throw InputError(path + ": missing '# dt=<value>' line");
    pairs.dt = parse_double(dt->second);
    if (const auto s = kv.find("seed"); s != kv.end()) pairs.source_seed = std::stoull(s->second);
    const auto cols = split(f.header);
    if (cols.size() < 2 || cols.size() % 2 != 0) throw InputError(path + ": header must be x1..xd,y1..yd");
    const int d = static_cast<int>(cols.size() / 2);
    if (f.header != coord_header("x", d) + "," + coord_header("y", d))
        throw InputError(path + ": header must be " + coord_header("x", d) + "," + coord_header("y", d));
    const auto M = static_cast<Eigen::Index>(f.rows.size());
    pairs.X.resize(d, M);
    pairs.Y.resize(d, M);
    for (Eigen::Index m = 0; m < M; ++m) {
        const auto& [lineno, line] = f.rows[static_cast<std::size_t>(m)];
        const auto v = parse_row(path, lineno, line, cols.size());
        for (int j = 0; j < d; ++j) {
            pairs.X(j, m) = v[static_cast<std::size_t>(j)];
            pairs.Y(j, m) = v[static_cast<std::size_t>(d + j)];
        }
    }
    pairs.validate();
    return pairs;
}

void write_density_csv(const std::string& path, const DensityField& field) {
    field.validate();
    auto out = open_out(path);
    const int d = field.grid.dim();
    out << "t," << coord_header("x", d) << ",p\n";
    const Matrix P = field.grid.points();
    for (std::size_t k = 0; k < field.times.size(); ++k) {
        const std::string t = format_double(field.times[k]);
        for (Eigen::Index i = 0; i < P.cols(); ++i) {
            out << t;
            for (int j = 0; j < d; ++j) out << ',' << format_double(P(j, i));
            out << ',' << format_double(field.values[k][i]) << '\n';
        }
    }
    if (!out) throw InputError("failed writing '" + path + "'");
}

DensityField read_density_csv(const std::string& path) {
    const CsvFile f = read_csv(path);
    const auto cols = split(f.header);
    if (cols.size() < 3 || cols.size() > 5) throw InputError(path + ": header must be t,x1[,x2[,x3]],p");
    const int d = static_cast<int>(cols.size()) - 2;
    if (f.header != "t," + coord_header("x", d) + ",p") throw InputError(path + ": header must be t,x1[,x2[,x3]],p");
    if (f.rows.empty()) throw InputError(path + ": no rows");

    std::vector<double> times;
    std::vector<std::vector<double>> vals;
    std::vector<std::vector<double>> coords(static_cast<std::size_t>(d));
    for (const auto& [lineno, line] : f.rows) {
        const auto v = parse_row(path, lineno, line, cols.size());
        if (times.empty() || v[0] != times.back()) {
            if (!times.empty() && !(v[0] > times.back()))
                throw InputError(path + ": times are not ascending at line " + std::to_string(lineno));
            times.push_back(v[0]);
            vals.emplace_back();
        }
        if (times.size() == 1)
            for (int j = 0; j < d; ++j) coords[static_cast<std::size_t>(j)].push_back(v[static_cast<std::size_t>(j + 1)]);
        vals.back().push_back(v.back());
    }
    std::vector<Axis> axes;
    for (int j = 0; j < d; ++j) {
        std::set<double> uniq(coords[static_cast<std::size_t>(j)].begin(), coords[static_cast<std::size_t>(j)].end());
        if (uniq.size() < 2) throw InputError(path + ": axis x" + std::to_string(j + 1) + " has fewer than two points");
        axes.push_back(Axis{*uniq.begin(), *uniq.rbegin(), uniq.size()});
    }
    DensityField field;
    field.grid = Grid(axes);
    field.producer = "file";
    const std::size_t P = field.grid.size();
    if (vals.front().size() != P) throw InputError(path + ": points do not form a tensor grid");
    const Matrix pts = field.grid.points();
    for (std::size_t i = 0; i < P; ++i)
        for (int j = 0; j < d; ++j) {
            const double expect = pts(j, static_cast<Eigen::Index>(i));
            const double got = coords[static_cast<std::size_t>(j)][i];
            const double scale = std::max({1.0, std::abs(axes[static_cast<std::size_t>(j)].lower),
                                           std::abs(axes[static_cast<std::size_t>(j)].upper)});
            if (std::abs(expect - got) > 1e-9 * scale)
                throw InputError(path + ": points are not a uniform grid in row order (point " + std::to_string(i) + ")");
        }
    for (std::size_t k = 0; k < times.size(); ++k) {
        if (vals[k].size() != P)
            throw InputError(path + ": time " + format_double(times[k]) + " has " + std::to_string(vals[k].size()) +
                             " rows, expected " + std::to_string(P));
        Vector v = Eigen::Map<const Vector>(vals[k].data(), static_cast<Eigen::Index>(P));
        FieldInfo info;
        info.mass = grid_integral(field.grid, v);
        info.min_value = v.minCoeff();
        field.push(times[k], std::move(v), info);
    }
    return field;
}

void write_scatter_csv(const std::string& path, const std::vector<double>& times, const Matrix& points,
                       const std::vector<Vector>& values) {
    if (times.size() != values.size()) throw InputError("scatter output needs one value vector per time");
    auto out = open_out(path);
    const auto d = static_cast<int>(points.rows());
    out << "t," << coord_header("x", d) << ",p\n";
    for (std::size_t k = 0; k < times.size(); ++k) {
        if (values[k].size() != points.cols()) throw InputError("scatter values do not match the points");
        const std::string t = format_double(times[k]);
        for (Eigen::Index i = 0; i < points.cols(); ++i) {
            out << t;
            for (int j = 0; j < d; ++j) out << ',' << format_double(points(j, i));
            out << ',' << format_double(values[k][i]) << '\n';
        }
    }
    if (!out) throw InputError("failed writing '" + path + "'");
}

void write_moments_csv(const std::string& path, const MomentSeries& series) {
    auto out = open_out(path);
    out << "t,dim,order,value\n";
    for (const auto& r : series.rows)
        out << format_double(r.t) << ',' << r.dim << ',' << r.order << ',' << format_double(r.value) << '\n';
    if (!out) throw InputError("failed writing '" + path + "'");
}

MomentSeries read_moments_csv(const std::string& path) {
    const CsvFile f = read_csv(path);
    if (f.header != "t,dim,order,value") throw InputError(path + ": header must be t,dim,order,value");
    MomentSeries s;
    for (const auto& [lineno, line] : f.rows) {
        const auto v = parse_row(path, lineno, line, 4);
        if (v[1] != std::floor(v[1]) || v[2] != std::floor(v[2]) || v[1] < 1 || v[2] < 1)
            throw InputError(path + ": dim and order must be positive integers at line " + std::to_string(lineno));
        s.rows.push_back({v[0], static_cast<int>(v[1]), static_cast<int>(v[2]), v[3]});
    }
    return s;
}

void write_cloud_csv(const std::string& path, double t, const Matrix& cloud) {
    auto out = open_out(path);
    const auto d = static_cast<int>(cloud.rows());
    out << "t," << coord_header("x", d) << '\n';
    const std::string ts = format_double(t);
    for (Eigen::Index i = 0; i < cloud.cols(); ++i) {
        out << ts;
        for (int j = 0; j < d; ++j) out << ',' << format_double(cloud(j, i));
        out << '\n';
    }
    if (!out) throw InputError("failed writing '" + path + "'");
}

void write_error_csv(const std::string& path, const ErrorReport& report) {
    auto out = open_out(path);
    out << "# max rel_l2=" << format_double(report.rel_l2) << " l1=" << format_double(report.l1)
        << " linf=" << format_double(report.linf) << '\n';
    out << "t,rel_l2,l1,linf\n";
    for (const auto& p : report.per_time)
        out << format_double(p.t) << ',' << format_double(p.rel_l2) << ',' << format_double(p.l1) << ','
            << format_double(p.linf) << '\n';
    if (!out) throw InputError("failed writing '" + path + "'");
}

namespace {

json vec_json(const Vector& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

Vector vec_from(const json& j) {
    const auto v = j.get<std::vector<double>>();
    return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

json mat_json(const Matrix& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) rows.push_back(vec_json(m.row(i).transpose()));
    return rows;
}

Matrix mat_from(const json& j) {
    if (!j.is_array()) throw InputError("matrix must be an array of rows");
    const auto r = static_cast<Eigen::Index>(j.size());
    if (r == 0) return Matrix();
    const auto c = static_cast<Eigen::Index>(j[0].size());
    Matrix m(r, c);
    for (Eigen::Index i = 0; i < r; ++i) {
        const Vector row = vec_from(j[static_cast<std::size_t>(i)]);
        if (row.size() != c) throw InputError("matrix rows differ in length");
        m.row(i) = row.transpose();
    }
    return m;
}

json cvec_json(const CVector& v) { return {{"re", vec_json(v.real())}, {"im", vec_json(v.imag())}}; }

CVector cvec_from(const json& j) {
    const Vector re = vec_from(j.at("re"));
    const Vector im = vec_from(j.at("im"));
    if (re.size() != im.size()) throw InputError("complex vector parts differ in length");
    CVector v(re.size());
    v.real() = re;
    v.imag() = im;
    return v;
}

json cmat_json(const CMatrix& m) { return {{"re", mat_json(m.real())}, {"im", mat_json(m.imag())}}; }

CMatrix cmat_from(const json& j) {
    const Matrix re = mat_from(j.at("re"));
    const Matrix im = mat_from(j.at("im"));
    if (re.rows() != im.rows() || re.cols() != im.cols()) throw InputError("complex matrix parts differ in shape");
    CMatrix m(re.rows(), re.cols());
    m.real() = re;
    m.imag() = im;
    return m;
}

json provenance_json(const Provenance& p) {
    json j{{"M", p.M}, {"tool_version", p.tool_version}, {"command", p.command}};
    j["seed"] = p.seed ? json(*p.seed) : json(nullptr);
    return j;
}

Provenance provenance_from(const json& j) {
    Provenance p;
    if (!j.is_object()) return p;
    if (j.contains("seed") && !j["seed"].is_null()) p.seed = j["seed"].get<std::uint64_t>();
    p.M = j.value("M", std::size_t{0});
    p.tool_version = j.value("tool_version", std::string());
    p.command = j.value("command", std::string());
    return p;
}

template <class Fn>
auto guarded(const char* what, Fn&& fn) {
    try {
        return fn();
    } catch (const json::exception& e) {
        throw InputError(std::string("malformed ") + what + ": " + e.what());
    }
}

} // namespace

json stationary_to_json(const StationaryDensity& ps, const Matrix* train_X) {
    return std::visit(
        [&](const auto& s) -> json {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, Gaussian>) {
                return {{"kind", "analytic-gaussian"}, {"mean", vec_json(s.mean())}, {"cov", mat_json(s.cov())}};
            } else if constexpr (std::is_same_v<T, DoubleWellDensity>) {
                return {{"kind", "analytic-doublewell"}, {"sigma", s.sigma}, {"log_z", s.log_z}};
            } else {
                json j{{"kind", "kde"},
                       {"rule", s.rule == KdeRule::Silverman ? "silverman" : "knn"},
                       {"base", vec_json(s.base)},
                       {"factor", vec_json(s.factor)}};
                if (train_X && train_X->rows() == s.samples.rows() && train_X->cols() == s.samples.cols() &&
                    *train_X == s.samples)
                    j["samples"] = "train_X";
                else
                    j["samples"] = mat_json(s.samples);
                return j;
            }
        },
        ps.spec());
}

StationaryDensity stationary_from_json(const json& j, const Matrix* train_X) {
    return guarded("stationary density", [&] {
        const std::string kind = j.at("kind").get<std::string>();
        if (kind == "analytic-gaussian") return analytic_gaussian(vec_from(j.at("mean")), mat_from(j.at("cov")));
        if (kind == "analytic-doublewell") {
            DoubleWellDensity dw;
            dw.sigma = j.at("sigma").get<double>();
            dw.log_z = j.at("log_z").get<double>();
            return StationaryDensity(dw);
        }
        if (kind == "kde") {
            KernelDensity k;
            const std::string rule = j.at("rule").get<std::string>();
            if (rule != "silverman" && rule != "knn") throw InputError("unknown KDE rule '" + rule + "'");
            k.rule = rule == "silverman" ? KdeRule::Silverman : KdeRule::KnnVariable;
            k.base = vec_from(j.at("base"));
            k.factor = vec_from(j.at("factor"));
            if (j.at("samples").is_string()) {
                if (!train_X) throw InputError("KDE refers to training samples that are not available");
                k.samples = *train_X;
            } else {
                k.samples = mat_from(j.at("samples"));
            }
            if (k.base.size() != k.samples.rows() || k.factor.size() != k.samples.cols())
                throw InputError("KDE bandwidths do not match its samples");
            return StationaryDensity(std::move(k));
        }
        throw InputError("unknown stationary density kind '" + kind + "'");
    });
}

json forecast_model_to_json(const SpectralForecastModel& model, const Provenance& prov) {
    const KoopmanModel& km = model.koopman;
    json diag{{"max_imag_ratio", km.diagnostics.max_imag_ratio},
              {"max_abs_imag", km.diagnostics.max_abs_imag},
              {"spectral_radius", km.diagnostics.spectral_radius},
              {"non_contractive", km.diagnostics.non_contractive},
              {"unstable_modes", km.diagnostics.unstable_modes},
              {"warnings", km.diagnostics.warnings}};
    json j{{"format", "dpdd-model"},
           {"version", 1},
           {"type", "spectral"},
           {"dictionary", dictionary_to_json(km.dict)},
           {"dt", km.dt},
           {"rank", km.rank},
           {"K", mat_json(km.K)},
           {"mu", cvec_json(km.mu)},
           {"lambda", cvec_json(km.lambda)},
           {"xi", cmat_json(km.Xi)},
           {"diagnostics", diag},
           {"stationary", stationary_to_json(model.ps, &model.train_X)},
           {"train_X", mat_json(model.train_X)},
           {"provenance", provenance_json(prov)}};
    j["c0"] = model.c0.size() ? cvec_json(model.c0) : json(nullptr);
    return j;
}

SpectralForecastModel forecast_model_from_json(const json& j, Provenance* prov) {
    return guarded("model file", [&] {
        if (model_type(j) != "spectral") throw InputError("model file does not hold a spectral forecast model");
        SpectralForecastModel m;
        KoopmanModel& km = m.koopman;
        km.dict = dictionary_from_json(j.at("dictionary"));
        km.dt = j.at("dt").get<double>();
        km.rank = j.at("rank").get<int>();
        km.K = mat_from(j.at("K"));
        km.mu = cvec_from(j.at("mu"));
        km.lambda = cvec_from(j.at("lambda"));
        km.Xi = cmat_from(j.at("xi"));
        const auto N = static_cast<Eigen::Index>(km.dict.size());
        if (km.K.rows() != N || km.K.cols() != N || km.mu.size() != N || km.lambda.size() != N ||
            km.Xi.rows() != N || km.Xi.cols() != N)
            throw InputError("model file: spectral arrays do not match the dictionary size");
        if (const auto& d = j.at("diagnostics"); d.is_object()) {
            km.diagnostics.max_imag_ratio = d.value("max_imag_ratio", 0.0);
            km.diagnostics.max_abs_imag = d.value("max_abs_imag", 0.0);
            km.diagnostics.spectral_radius = d.value("spectral_radius", 0.0);
            km.diagnostics.non_contractive = d.value("non_contractive", false);
            km.diagnostics.unstable_modes = d.value("unstable_modes", std::vector<int>{});
            km.diagnostics.warnings = d.value("warnings", std::vector<std::string>{});
        }
        m.train_X = mat_from(j.at("train_X"));
        if (m.train_X.rows() != km.dict.dim_state()) throw InputError("model file: training states have the wrong dimension");
        m.ps = stationary_from_json(j.at("stationary"), &m.train_X);
        if (j.contains("c0") && !j["c0"].is_null()) {
            m.c0 = cvec_from(j["c0"]);
            if (m.c0.size() != N) throw InputError("model file: coefficient vector has the wrong length");
        }
        m.phi_train = km.eigenfunctions(m.train_X);
        if (prov) *prov = provenance_from(j.value("provenance", json()));
        return m;
    });
}

json df_model_to_json(const DfModel& model, const StationaryDensity& ps, const Provenance& prov) {
    const DiffusionMapModel& dm = model.dm;
    json j{{"format", "dpdd-model"},
           {"version", 1},
           {"type", "diffusion-forecast"},
           {"dt", model.dt},
           {"epsilon", dm.epsilon},
           {"generator_scale", dm.generator_scale},
           {"scale_mode", dm.mode == GeneratorScale::Standard ? "standard" : "literal"},
           {"kernel_cutoff", dm.kernel_cutoff},
           {"samples", mat_json(dm.samples)},
           {"q_eps", vec_json(dm.q_eps)},
           {"degree", vec_json(dm.degree)},
           {"eigvals", vec_json(dm.eigvals)},
           {"eigvecs", mat_json(dm.eigvecs)},
           {"converged", dm.converged},
           {"B", mat_json(model.B)},
           {"importance_weight", model.importance_weight},
           {"stationary", stationary_to_json(ps, &dm.samples)},
           {"provenance", provenance_json(prov)}};
    j["c0_hat"] = model.c0_hat.size() ? vec_json(model.c0_hat) : json(nullptr);
    return j;
}

DfModel df_model_from_json(const json& j, StationaryDensity* ps, Provenance* prov) {
    return guarded("model file", [&] {
        if (model_type(j) != "diffusion-forecast") throw InputError("model file does not hold a diffusion forecast model");
        DfModel m;
        DiffusionMapModel& dm = m.dm;
        m.dt = j.at("dt").get<double>();
        dm.epsilon = j.at("epsilon").get<double>();
        dm.generator_scale = j.at("generator_scale").get<double>();
        dm.mode = j.at("scale_mode").get<std::string>() == "literal" ? GeneratorScale::Literal : GeneratorScale::Standard;
        dm.kernel_cutoff = j.at("kernel_cutoff").get<double>();
        dm.samples = mat_from(j.at("samples"));
        dm.q_eps = vec_from(j.at("q_eps"));
        dm.degree = vec_from(j.at("degree"));
        dm.eigvals = vec_from(j.at("eigvals"));
        dm.eigvecs = mat_from(j.at("eigvecs"));
        dm.converged = j.value("converged", true);
        m.B = mat_from(j.at("B"));
        m.importance_weight = j.value("importance_weight", true);
        const auto k = dm.eigvals.size();
        if (dm.eigvecs.rows() != dm.samples.cols() || dm.eigvecs.cols() != k || m.B.rows() != k || m.B.cols() != k)
            throw InputError("model file: diffusion-map arrays have inconsistent shapes");
        if (j.contains("c0_hat") && !j["c0_hat"].is_null()) m.c0_hat = vec_from(j["c0_hat"]);
        if (ps) *ps = stationary_from_json(j.at("stationary"), &dm.samples);
        if (prov) *prov = provenance_from(j.value("provenance", json()));
        return m;
    });
}

void write_json(const std::string& path, const json& j) {
    auto out = open_out(path);
    out << j.dump(1) << '\n';
    if (!out) throw InputError("failed writing '" + path + "'");
}

json read_json(const std::string& path) {
    auto in = open_in(path);
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw InputError("'" + path + "' is not valid JSON: " + e.what());
    }
}

std::string model_type(const json& j) {
    if (!j.is_object() || j.value("format", std::string()) != "dpdd-model")
        throw InputError("not a model file (missing format tag)");
    return j.value("type", std::string());
}

} // namespace dpdd
