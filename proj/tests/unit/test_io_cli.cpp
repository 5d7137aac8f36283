#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "doctest.h"
#include "dpdd/cli.hpp"
#include "dpdd/diffusion_map.hpp"
#include "dpdd/io.hpp"
#include "dpdd/oracle.hpp"
#include "dpdd/specs.hpp"

using namespace dpdd;
namespace fs = std::filesystem;

namespace {

fs::path scratch() {
    const fs::path dir = fs::temp_directory_path() / "dpdd_unit_io";
    fs::create_directories(dir);
    return dir;
}

std::string tmp(const std::string& name) { return (scratch() / name).string(); }

struct CliResult {
    int rc;
    std::string out;
    std::string err;
};

CliResult run(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    const int rc = run_cli(args, out, err);
    return {rc, out.str(), err.str()};
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

std::vector<std::string> data_lines(const std::string& path) {
    std::ifstream in(path);
    std::vector<std::string> lines;
    for (std::string l; std::getline(in, l);)
        if (!l.empty() && l[0] != '#') lines.push_back(l);
    return lines;
}

SnapshotPairs ou_pairs(std::size_t M, std::uint64_t seed) {
    SimConfig cfg;
    cfg.seed = seed;
    return sample_stationary_pairs(builtin_model("ou"), cfg, M, SamplingMode::SingleTrajectory);
}

} // namespace

TEST_SUITE("cli-io") {

TEST_CASE("doubles round-trip bit-exactly") {
    Philox4x32 rng(5, 0);
    for (int i = 0; i < 10000; ++i) {
        const double v = rng.normal() * std::pow(10.0, static_cast<int>(rng.uniform() * 40) - 20);
        CHECK(parse_double(format_double(v)) == v);
    }
    for (double v : {0.0, -0.0, 1.0, 0.1, 1e-310, std::numeric_limits<double>::max(),
                     std::numeric_limits<double>::denorm_min()})
        CHECK(parse_double(format_double(v)) == v);
    CHECK(format_double(0.1) == "0.1");
    CHECK(format_double(0.5) == "0.5");
    for (const char* bad : {"", "1.0x", "abc", " 1", "1,2"}) CHECK_THROWS_AS(parse_double(bad), InputError);
}

TEST_CASE("pairs CSV round trip and row errors") {
    SnapshotPairs p = ou_pairs(200, 3);
    p.source_seed = 3;
    const std::string path = tmp("pairs.csv");
    write_pairs_csv(path, p);
    const SnapshotPairs q = read_pairs_csv(path);
    CHECK(q.X == p.X);
    CHECK(q.Y == p.Y);
    CHECK(q.dt == p.dt);
    CHECK(q.source_seed == p.source_seed);

    std::string text = slurp(path);
    const auto pos = text.find('\n', text.find("x1,y1") + 1);
    const auto next = text.find('\n', pos + 1);
    text.replace(pos + 1, next - pos - 1, "1.0,oops");
    std::ofstream(tmp("bad.csv"), std::ios::binary) << text;
    try {
        read_pairs_csv(tmp("bad.csv"));
        FAIL("expected an error");
    } catch (const InputError& e) {
        CHECK(std::string(e.what()).find("line") != std::string::npos);
    }
    std::ofstream(tmp("nodt.csv")) << "x1,y1\n1,2\n";
    CHECK_THROWS_AS(read_pairs_csv(tmp("nodt.csv")), InputError);
    CHECK_THROWS_AS(read_pairs_csv(tmp("does_not_exist.csv")), InputError);
}

TEST_CASE("density and moment CSV round trips") {
    const Grid g({Axis{-2.0, 2.0, 41}});
    const DensityField f = ou_analytic(0.3, 0.7, {0.0, 0.5, 1.25}, g);
    write_density_csv(tmp("density.csv"), f);
    const DensityField h = read_density_csv(tmp("density.csv"));
    CHECK(h.grid == f.grid);
    CHECK(h.times == f.times);
    for (std::size_t k = 0; k < f.values.size(); ++k) CHECK(h.values[k] == f.values[k]);

    const Grid g2({Axis{0.0, 1.0, 3}, Axis{-1.0, 1.0, 4}});
    DensityField f2;
    f2.grid = g2;
    f2.push(0.0, Vector::LinSpaced(12, 0.0, 1.1));
    write_density_csv(tmp("density2.csv"), f2);
    const DensityField h2 = read_density_csv(tmp("density2.csv"));
    CHECK(h2.grid == g2);
    CHECK(h2.values[0] == f2.values[0]);

    MomentSeries m;
    m.rows = {{0.0, 1, 1, 0.25}, {0.0, 1, 2, 1.0 / 3.0}, {2.5, 2, 4, -1e-17}};
    write_moments_csv(tmp("moments.csv"), m);
    const MomentSeries n = read_moments_csv(tmp("moments.csv"));
    REQUIRE(n.rows.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(n.rows[i].t == m.rows[i].t);
        CHECK(n.rows[i].dim == m.rows[i].dim);
        CHECK(n.rows[i].order == m.rows[i].order);
        CHECK(n.rows[i].value == m.rows[i].value);
    }
}

TEST_CASE("model JSON round trips are bit-exact") {
    const SnapshotPairs p = ou_pairs(2000, 4);
    const StationaryDensity ps = kde_fit(p.X, KdeRule::Silverman);
    const SpectralForecastModel model = make_forecast_model(
        fit_koopman(p, monomial_dict(1, 3)), ps,
        InitialDensity::gaussian(Vector::Constant(1, 0.5), Matrix::Constant(1, 1, 0.5)), p.X);
    Provenance prov;
    prov.seed = 4;
    prov.M = 2000;
    prov.command = "fit";
    const nlohmann::json j = forecast_model_to_json(model, prov);
    write_json(tmp("model.json"), j);
    Provenance back;
    const SpectralForecastModel m2 = forecast_model_from_json(read_json(tmp("model.json")), &back);
    CHECK(model_type(j) == "spectral");
    CHECK(m2.koopman.K == model.koopman.K);
    CHECK(m2.koopman.lambda == model.koopman.lambda);
    CHECK(m2.koopman.Xi == model.koopman.Xi);
    CHECK(m2.c0 == model.c0);
    CHECK(m2.train_X == model.train_X);
    CHECK(back.seed == prov.seed);
    CHECK(forecast_model_to_json(m2, back).dump() == j.dump());
    const Grid g({Axis{-3.0, 3.0, 61}});
    CHECK(forecast_density(m2, 0.7, g).values[0] == forecast_density(model, 0.7, g).values[0]);

    DfModel df = make_df_model(diffusion_map(p.X.leftCols(500), 4),
                               SnapshotPairs{p.X.leftCols(500), p.Y.leftCols(500), p.dt, {}});
    df_forecast(df, ps, InitialDensity::stationary(1), 0);
    const nlohmann::json jd = df_model_to_json(df, ps, prov);
    CHECK(model_type(jd) == "diffusion-forecast");
    StationaryDensity ps2;
    const DfModel df2 = df_model_from_json(nlohmann::json::parse(jd.dump()), &ps2);
    CHECK(df2.B == df.B);
    CHECK(df2.dm.eigvecs == df.dm.eigvecs);
    CHECK(df2.dm.eigvals == df.dm.eigvals);
    CHECK(df2.c0_hat == df.c0_hat);
    CHECK(df_model_to_json(df2, ps2, prov).dump() == jd.dump());
}

TEST_CASE("spec parsers") {
    CHECK(parse_dict_spec("monomial:3", 1).size() == 4);
    CHECK(parse_dict_spec("monomial:2", 2).size() == 6);
    CHECK(parse_dict_spec("hermite:4", 1).size() == 5);
    CHECK(parse_dict_spec("linpow:1,0:0,1,0:1,0,1:1,1,1:2", 2).size() == 4);
    CHECK_THROWS_AS(parse_dict_spec("poly:3", 1), InputError);
    CHECK_THROWS_AS(parse_dict_spec("monomial:x", 1), InputError);

    const Grid g = parse_grid_spec("-1:1:5,0:2:3");
    REQUIRE(g.dim() == 2);
    CHECK(g.axes()[0] == Axis{-1.0, 1.0, 5});
    CHECK(g.axes()[1] == Axis{0.0, 2.0, 3});
    CHECK_THROWS_AS(parse_grid_spec("0:1"), InputError);

    CHECK(parse_real_list("0,0.5,2") == std::vector<double>{0.0, 0.5, 2.0});
    CHECK(parse_int_list("1,2,4") == std::vector<int>{1, 2, 4});
    CHECK_THROWS_AS(parse_int_list("1,2.5"), InputError);

    const InitialDensity p0 = parse_p0_spec("gaussian:1,2:0.5,0.25", 2);
    const auto& gs = std::get<Gaussian>(p0.spec());
    CHECK(gs.mean() == Eigen::Vector2d(1.0, 2.0));
    CHECK(gs.cov() == Eigen::Vector2d(0.5, 0.25).asDiagonal().toDenseMatrix());
    CHECK(parse_p0_spec("stationary", 1).is_stationary());
    const InitialDensity broadcast = parse_p0_spec("gaussian:1:0.5", 2);
    CHECK(std::get<Gaussian>(broadcast.spec()).mean() == Eigen::Vector2d(1.0, 1.0));
    CHECK_THROWS_AS(parse_p0_spec("gaussian:1,2,3:0.5", 2), InputError);

    const Matrix none(1, 0);
    const StationaryDensity n01 = parse_stationary_spec("analytic:gaussian", none);
    CHECK(n01.eval(Vector::Zero(1)) == doctest::Approx(1.0 / std::sqrt(2.0 * 3.141592653589793)));
    CHECK(std::holds_alternative<DoubleWellDensity>(parse_stationary_spec("analytic:doublewell", none).spec()));
    CHECK_THROWS_AS(parse_stationary_spec("kde:other", Matrix::Random(1, 50)), InputError);

    const auto ov = parse_overrides({"lambda=2", "beta=0.5"});
    CHECK(ov.at("lambda") == 2.0);
    CHECK(ov.at("beta") == 0.5);
    CHECK_THROWS_AS(parse_overrides({"lambda"}), InputError);
}

TEST_CASE("cli simulate") {
    const std::string out = tmp("sim.csv");
    const CliResult r = run({"simulate", "--model", "ou", "--m", "10000", "--seed", "1", "--out", out});
    REQUIRE(r.rc == 0);
    const auto lines = data_lines(out);
    REQUIRE(lines.size() == 10001);
    CHECK(lines[0] == "x1,y1");
    CHECK(slurp(out).rfind("# dt=0.01", 0) == 0);

    const std::string again = tmp("sim2.csv");
    REQUIRE(run({"simulate", "--model", "ou", "--m", "10000", "--seed", "1", "--out", again}).rc == 0);
    CHECK(slurp(out) == slurp(again));

    const CliResult bad = run({"simulate", "--model", "nosuch", "--out", tmp("x.csv")});
    CHECK(bad.rc == 2);
    for (const char* name : {"double-well", "ou", "turbulence2d", "lorenz63"})
        CHECK(bad.err.find(name) != std::string::npos);

    const CliResult div = run({"simulate", "--model", "ou", "--param", "lambda=-1000", "--m", "100", "--out",
                               tmp("div.csv")});
    CHECK(div.rc == 3);
    CHECK(div.err.find("diverged at step") != std::string::npos);

    CHECK(run({"simulate", "--model", "ou", "--param", "nope=1", "--out", tmp("x.csv")}).rc == 2);
}

TEST_CASE("cli fit, forecast and compare") {
    const std::string pairs = tmp("fit_pairs.csv");
    REQUIRE(run({"simulate", "--model", "ou", "--m", "10000", "--seed", "2", "--out", pairs}).rc == 0);

    const CliResult mono = run({"fit", "--pairs", pairs, "--dict", "monomial:2", "--stationary", "analytic:gaussian",
                                "--out", tmp("mono.json")});
    REQUIRE(mono.rc == 0);
    CHECK(mono.out.find("i,re_lambda,im_lambda,re_mu,im_mu") != std::string::npos);
    const CliResult herm = run({"fit", "--pairs", pairs, "--dict", "hermite:2", "--stationary", "analytic:gaussian",
                                "--out", tmp("herm.json")});
    REQUIRE(herm.rc == 0);
    const SpectralForecastModel a = forecast_model_from_json(read_json(tmp("mono.json")));
    const SpectralForecastModel b = forecast_model_from_json(read_json(tmp("herm.json")));
    for (int i = 0; i < 3; ++i) CHECK(std::abs(a.koopman.lambda[i] - b.koopman.lambda[i]) < 1e-2);

    std::string text = slurp(pairs);
    text.resize(text.size() - 5);
    std::ofstream(tmp("trunc.csv"), std::ios::binary) << text.substr(0, text.rfind(',') + 1) << '\n';
    CHECK(run({"fit", "--pairs", tmp("trunc.csv"), "--dict", "monomial:2", "--out", tmp("t.json")}).rc == 2);

    const std::string dens = tmp("forecast.csv");
    const CliResult fc = run({"forecast", "--model", tmp("mono.json"), "--p0", "stationary", "--times", "0,1,5",
                              "--grid", "-4:4:81", "--out", dens, "--moments", "1,2", "--moments-out",
                              tmp("fm.csv")});
    REQUIRE(fc.rc == 0);
    CHECK(fc.out.find("mass=") != std::string::npos);
    const DensityField f = read_density_csv(dens);
    const Vector ps = analytic_gaussian(Vector::Zero(1), Matrix::Identity(1, 1)).eval_many(f.grid.points());
    for (const Vector& v : f.values) CHECK((v - ps).cwiseAbs().maxCoeff() <= 0.05 * ps.maxCoeff());
    CHECK(read_moments_csv(tmp("fm.csv")).rows.size() == 6);
    CHECK(slurp(dens).find('\r') == std::string::npos);

    // importance-weighted moments use independent pairs
    REQUIRE(run({"simulate", "--model", "ou", "--m", "10000", "--mode", "ensemble", "--seed", "2", "--out",
                 tmp("ens_pairs.csv")}).rc == 0);
    REQUIRE(run({"fit", "--pairs", tmp("ens_pairs.csv"), "--dict", "monomial:2", "--stationary", "analytic:gaussian",
                 "--out", tmp("ens.json")}).rc == 0);
    REQUIRE(run({"forecast", "--model", tmp("ens.json"), "--p0", "gaussian:1:0.5", "--times", "10", "--moments",
                 "1,2,3,4", "--moments-out", tmp("fm4.csv")}).rc == 0);
    const MomentSeries m4 = read_moments_csv(tmp("fm4.csv"));
    CHECK(std::abs(m4.at(10.0, 1, 1)) <= 0.05);
    CHECK(std::abs(m4.at(10.0, 1, 2) - 1.0) <= 0.05);
    CHECK(std::abs(m4.at(10.0, 1, 3)) <= 0.2);
    CHECK(std::abs(m4.at(10.0, 1, 4) - 3.0) <= 0.3);

    const CliResult same = run({"compare", dens, dens});
    REQUIRE(same.rc == 0);
    CHECK(same.out.find("max rel_l2=0 l1=0") != std::string::npos);
    CHECK(run({"forecast", "--model", tmp("nothing.json"), "--out", dens}).rc == 2);
}

TEST_CASE("cli double-well forecast error decreases against the fpe reference") {
    const std::string pairs = tmp("dw_pairs.csv");
    REQUIRE(run({"simulate", "--model", "double-well", "--m", "10000", "--mode", "ensemble", "--seed", "5", "--out",
                 pairs}).rc == 0);
    REQUIRE(run({"fit", "--pairs", pairs, "--dict", "monomial:5", "--stationary", "analytic:doublewell", "--out",
                 tmp("dw.json")}).rc == 0);
    const std::string times = "0.5,1,2,3,4,5";
    REQUIRE(run({"fpe", "--model", "doublewell", "--grid", "-2.5:2.5:2000", "--p0", "gaussian:0:1", "--times", times,
                 "--out", tmp("dw_fpe.csv")}).rc == 0);
    const Grid cells = read_density_csv(tmp("dw_fpe.csv")).grid;
    const Axis& ax = cells.axes()[0];
    const std::string grid = format_double(ax.lower) + ":" + format_double(ax.upper) + ":" + std::to_string(ax.n);
    REQUIRE(run({"forecast", "--model", tmp("dw.json"), "--p0", "gaussian:0:1", "--times", times, "--grid", grid,
                 "--out", tmp("dw_fc.csv")}).rc == 0);
    const ErrorReport rep = error_metrics(read_density_csv(tmp("dw_fc.csv")), read_density_csv(tmp("dw_fpe.csv")));
    REQUIRE(rep.per_time.size() == 6);
    CHECK(rep.per_time.back().rel_l2 < rep.per_time.front().rel_l2);
}

TEST_CASE("cli fpe, ensemble, df and version") {
    const CliResult fp = run({"fpe", "--model", "doublewell", "--grid", "-2.5:2.5:2000", "--p0", "gaussian:0:1",
                              "--times", "40", "--out", tmp("fpe.csv")});
    REQUIRE(fp.rc == 0);
    const auto pos = fp.out.find("linf_vs_analytic_ps=");
    REQUIRE(pos != std::string::npos);
    CHECK(std::stod(fp.out.substr(pos + 20)) < 1e-3);

    const CliResult en = run({"ensemble", "--model", "ou", "--p0", "gaussian:1:0.5", "--n", "2000", "--times", "0.5",
                              "--grid", "-4:4:41", "--out", tmp("ens.csv"), "--seed", "3"});
    REQUIRE(en.rc == 0);
    CHECK(read_density_csv(tmp("ens.csv")).times == std::vector<double>{0.5});
    REQUIRE(run({"ensemble", "--model", "ou", "--p0", "gaussian:1:0.5", "--n", "2000", "--times", "0.5", "--grid",
                 "-4:4:41", "--out", tmp("ens2.csv"), "--seed", "3"}).rc == 0);
    CHECK(slurp(tmp("ens.csv")) == slurp(tmp("ens2.csv")));

    const std::string pairs = tmp("df_pairs.csv");
    REQUIRE(run({"simulate", "--model", "ou", "--m", "1000", "--seed", "4", "--out", pairs}).rc == 0);
    const CliResult df = run({"df", "--pairs", pairs, "--k", "4", "--stationary", "analytic:gaussian", "--p0",
                              "gaussian:1:0.5", "--times", "0,10", "--out", tmp("df.csv"), "--save-model",
                              tmp("df.json")});
    REQUIRE(df.rc == 0);
    CHECK(df.out.find("i,lambda,B_ii") != std::string::npos);
    CHECK(model_type(read_json(tmp("df.json"))) == "diffusion-forecast");
    CHECK(run({"df", "--pairs", pairs, "--lookup", "exact", "--out", tmp("df2.csv")}).rc == 2);

    const CliResult timing = run({"compare", "--timing-pairs", pairs, "--dict", "monomial:4", "--k", "50"});
    REQUIRE(timing.rc == 0);
    CHECK(timing.out.find("dpdd_basis_seconds=") != std::string::npos);
    CHECK(timing.out.find("df_basis_seconds=") != std::string::npos);
    CHECK(timing.out.find("speedup=") != std::string::npos);

    const CliResult v = run({"--version"});
    CHECK(v.rc == 0);
    CHECK(v.out == std::string(kToolVersion) + "\n");
    CHECK(run({}).rc == 2);
    CHECK(run({"bogus"}).rc == 2);
}

} // TEST_SUITE
