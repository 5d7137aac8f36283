#include "dpdd/cli.hpp"

#include <chrono>
#include <cmath>
#include <iomanip>
#include <iostream>
#include <optional>

#include "CLI11.hpp"

#include "dpdd/diffusion_map.hpp"
#include "dpdd/edmd.hpp"
#include "dpdd/forecast.hpp"
#include "dpdd/io.hpp"
#include "dpdd/oracle.hpp"
#include "dpdd/parallel.hpp"
#include "dpdd/sde.hpp"
#include "dpdd/specs.hpp"

namespace dpdd {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Common {
    unsigned threads = 0;
    std::uint64_t seed = 0;
    bool seed_set = false;
};

void add_common(CLI::App* app, Common& c) {
    app->add_option("--threads", c.threads, "Worker threads (0 = all cores)");
    app->add_option_function<std::uint64_t>(
        "--seed", [&c](const std::uint64_t& s) { c.seed = s; c.seed_set = true; }, "Random seed");
}

std::string join_args(const std::vector<std::string>& args) {
    std::string s;
    for (const auto& a : args) s += (s.empty() ? "" : " ") + a;
    return s;
}

std::vector<int> times_to_steps(const std::vector<double>& times, double dt) {
    std::vector<int> steps;
    for (double t : times) {
        const double n = std::round(t / dt);
        if (t < 0.0 || std::abs(n * dt - t) > 1e-9 * std::max(1.0, std::abs(t)))
            throw InputError("time " + format_double(t) + " is not a nonnegative multiple of dt = " + format_double(dt));
        steps.push_back(static_cast<int>(n));
    }
    return steps;
}

void print_warnings(std::ostream& err, const std::vector<std::string>& warnings) {
    for (const auto& w : warnings) err << "warning: " << w << '\n';
}

// ---------------------------------------------------------------- simulate
struct SimulateArgs {
    std::string model;
    std::vector<std::string> params;
    std::size_t m = 10000;
    double dt = 0.01;
    std::optional<std::size_t> burn_in;
    std::string scheme = "em";
    std::string mode = "single";
    std::string out;
};

int cmd_simulate(const SimulateArgs& a, const Common& c, std::ostream& out) {
    const SdeModel model = builtin_model(a.model, parse_overrides(a.params));
    SimConfig cfg;
    cfg.dt = a.dt;
    cfg.seed = c.seed;
    cfg.burn_in_steps = a.burn_in;
    if (a.scheme == "em") cfg.scheme = Scheme::EulerMaruyama;
    else if (a.scheme == "milstein") cfg.scheme = Scheme::Milstein;
    else throw InputError("scheme must be em or milstein");
    SamplingMode mode;
    if (a.mode == "single") mode = SamplingMode::SingleTrajectory;
    else if (a.mode == "ensemble") mode = SamplingMode::Ensemble;
    else throw InputError("mode must be single or ensemble");
    if (a.m == 0) throw InputError("--m must be positive");
    cfg.n_steps = a.m;

    SnapshotPairs pairs = sample_stationary_pairs(model, cfg, a.m, mode);
    pairs.source_seed = c.seed;
    write_pairs_csv(a.out, pairs);

    const std::size_t burn = a.burn_in ? *a.burn_in : (mode == SamplingMode::SingleTrajectory ? default_burn_in(a.m) : 10000);
    out << "model=" << model.name << " M=" << pairs.size() << " dt=" << format_double(pairs.dt) << " burn_in=" << burn
        << " seed=" << c.seed << '\n';
    for (int j = 0; j < pairs.dim(); ++j) {
        const auto row = pairs.X.row(j).array();
        const double mean = row.mean();
        const double var = (row - mean).square().mean();
        out << "x" << j + 1 << " mean=" << format_double(mean) << " var=" << format_double(var) << '\n';
    }
    return 0;
}

// ---------------------------------------------------------------- fit
struct FitArgs {
    std::string pairs;
    std::string dict;
    std::string stationary = "kde:silverman";
    std::string p0 = "stationary";
    double rtol = 1e-10;
    std::string out;
};

int cmd_fit(const FitArgs& a, const Common& c, const std::string& cmdline, std::ostream& out, std::ostream& err) {
    const SnapshotPairs pairs = read_pairs_csv(a.pairs);
    const Dictionary dict = parse_dict_spec(a.dict, pairs.dim());
    const auto start = Clock::now();
    KoopmanModel km = fit_koopman(pairs, dict, a.rtol);
    const double basis_seconds = seconds_since(start);
    print_warnings(err, km.diagnostics.warnings);

    StationaryDensity ps = parse_stationary_spec(a.stationary, pairs.X);
    const InitialDensity p0 = parse_p0_spec(a.p0, pairs.dim());
    const SpectralForecastModel model = make_forecast_model(std::move(km), std::move(ps), p0, pairs.X);

    Provenance prov;
    prov.seed = c.seed_set ? std::optional<std::uint64_t>(c.seed) : pairs.source_seed;
    prov.M = pairs.size();
    prov.tool_version = kToolVersion;
    prov.command = cmdline;
    write_json(a.out, forecast_model_to_json(model, prov));

    out << "N=" << model.koopman.size() << " M=" << pairs.size() << " rank=" << model.koopman.rank
        << " basis_seconds=" << format_double(basis_seconds) << '\n';
    out << "i,re_lambda,im_lambda,re_mu,im_mu\n";
    for (int i = 0; i < model.koopman.size(); ++i)
        out << i << ',' << format_double(model.koopman.lambda[i].real()) << ','
            << format_double(model.koopman.lambda[i].imag()) << ',' << format_double(model.koopman.mu[i].real()) << ','
            << format_double(model.koopman.mu[i].imag()) << '\n';
    return 0;
}

// ---------------------------------------------------------------- forecast
struct ForecastArgs {
    std::string model;
    std::string p0 = "stationary";
    std::string times = "0";
    std::string grid;
    std::string out;
    std::string moments;
    std::string moments_out;
    bool drop_unstable = false;
    bool clip_negative = false;
};

int cmd_forecast(const ForecastArgs& a, std::ostream& out, std::ostream& err) {
    SpectralForecastModel model = forecast_model_from_json(read_json(a.model));
    const int d = model.koopman.dict.dim_state();
    model.c0 = coefficients(model.phi_train, model.ps, parse_p0_spec(a.p0, d), model.train_X);
    ForecastOptions opts;
    opts.drop_unstable = a.drop_unstable;
    opts.clip_negative = a.clip_negative;
    std::vector<double> times = parse_real_list(a.times);

    if (!a.out.empty()) {
        if (!a.grid.empty()) {
            const DensityField field = forecast_density_series(model, times, parse_grid_spec(a.grid), opts);
            write_density_csv(a.out, field);
            for (std::size_t k = 0; k < field.times.size(); ++k) {
                const auto& fi = field.info[k];
                out << "t=" << format_double(field.times[k]) << " mass=" << format_double(fi.mass)
                    << " max_imag=" << format_double(fi.max_imag) << " min=" << format_double(fi.min_value)
                    << " renorm=" << format_double(fi.renorm_factor) << '\n';
            }
        } else {
            std::vector<Vector> values;
            for (double t : times) {
                double imag = 0.0;
                values.push_back(forecast_at_points(model, t, model.train_X, opts, &imag));
                out << "t=" << format_double(t) << " points=" << model.train_X.cols()
                    << " max_imag=" << format_double(imag) << '\n';
            }
            write_scatter_csv(a.out, times, model.train_X, values);
        }
    }
    if (!a.moments.empty()) {
        const MomentSeries ms = raw_moments(model, parse_int_list(a.moments), times, opts);
        print_warnings(err, ms.warnings);
        if (!a.moments_out.empty()) write_moments_csv(a.moments_out, ms);
        for (const auto& r : ms.rows)
            out << "moment t=" << format_double(r.t) << " dim=" << r.dim << " order=" << r.order
                << " value=" << format_double(r.value) << '\n';
    }
    if (a.out.empty() && a.moments.empty()) throw InputError("nothing to do: give --out and/or --moments");
    return 0;
}

// ---------------------------------------------------------------- df
struct DfArgs {
    std::string pairs;
    int k = 1000;
    double epsilon = 0.0;
    bool literal = false;
    std::string lookup = "nearest";
    std::string stationary = "kde:silverman";
    std::string p0 = "stationary";
    std::string times = "0";
    bool no_weight = false;
    std::string out;
    std::string moments;
    std::string moments_out;
    std::string save_model;
};

int cmd_df(const DfArgs& a, const Common& c, const std::string& cmdline, std::ostream& out, std::ostream& err) {
    const SnapshotPairs pairs = read_pairs_csv(a.pairs);
    const auto M = static_cast<int>(pairs.size());
    int k = a.k;
    if (k > M / 10) {
        k = std::max(1, M / 10);
        err << "warning: k reduced to " << k << " (M / 10)\n";
    }
    DiffusionMapOptions opts;
    opts.epsilon = a.epsilon;
    opts.scale = a.literal ? GeneratorScale::Literal : GeneratorScale::Standard;
    opts.eig.seed = c.seed;
    const LookupMode lookup = a.lookup == "exact" ? LookupMode::Exact
                              : a.lookup == "nearest" ? LookupMode::Nearest
                                                      : throw InputError("lookup must be nearest or exact");
    const auto start = Clock::now();
    DiffusionMapModel dm = diffusion_map(pairs.X, k, opts);
    const double basis_seconds = seconds_since(start);
    print_warnings(err, dm.warnings);
    DfModel model = make_df_model(std::move(dm), pairs, lookup);

    const StationaryDensity ps = parse_stationary_spec(a.stationary, pairs.X);
    const InitialDensity p0 = parse_p0_spec(a.p0, pairs.dim());
    model.c0_hat = df_initial_coefficients(model.dm, ps, p0, !a.no_weight);
    model.importance_weight = !a.no_weight;

    out << "k=" << model.dm.size() << " M=" << M << " epsilon=" << format_double(model.dm.epsilon)
        << " basis_seconds=" << format_double(basis_seconds) << '\n';
    out << "i,lambda,B_ii\n";
    for (int i = 0; i < std::min(model.dm.size(), 10); ++i)
        out << i << ',' << format_double(model.dm.eigvals[i]) << ',' << format_double(model.B(i, i)) << '\n';

    const std::vector<double> times = parse_real_list(a.times);
    const std::vector<int> steps = times_to_steps(times, pairs.dt);
    if (!a.out.empty()) {
        std::vector<Vector> values;
        for (int n : steps) values.push_back(df_forecast(model, ps, n).density);
        write_scatter_csv(a.out, times, model.dm.samples, values);
    }
    if (!a.moments.empty()) {
        const MomentSeries ms = df_raw_moments(model, parse_int_list(a.moments), steps);
        if (!a.moments_out.empty()) write_moments_csv(a.moments_out, ms);
        for (const auto& r : ms.rows)
            out << "moment t=" << format_double(r.t) << " dim=" << r.dim << " order=" << r.order
                << " value=" << format_double(r.value) << '\n';
    }
    if (!a.save_model.empty()) {
        Provenance prov;
        prov.seed = c.seed_set ? std::optional<std::uint64_t>(c.seed) : pairs.source_seed;
        prov.M = pairs.size();
        prov.tool_version = kToolVersion;
        prov.command = cmdline;
        write_json(a.save_model, df_model_to_json(model, ps, prov));
    }
    return 0;
}

// ---------------------------------------------------------------- fpe
struct FpeArgs {
    std::string model;
    std::vector<std::string> params;
    std::string grid = "-2.5:2.5:2000";
    double dt = 1e-3;
    std::string p0 = "gaussian:0:1";
    std::string times = "1";
    std::string out;
};

int cmd_fpe(const FpeArgs& a, std::ostream& out, std::ostream& err) {
    const SdeModel model = builtin_model(a.model, parse_overrides(a.params));
    if (model.dim_state != 1) throw UnsupportedError("fpe supports one-dimensional models only");
    const Grid g = parse_grid_spec(a.grid);
    if (g.dim() != 1) throw InputError("fpe needs a one-dimensional grid a:b:n_cells");
    FpeConfig cfg;
    cfg.a = g.axes()[0].lower;
    cfg.b = g.axes()[0].upper;
    cfg.n_cells = g.axes()[0].n;
    cfg.dt = a.dt;
    cfg.validate();
    const Grid centres = cfg.grid();
    const double h = cfg.cell_width();

    Vector p0;
    const InitialDensity init = parse_p0_spec(a.p0, 1);
    if (init.is_stationary()) {
        p0 = fpe_stationary_1d(model, cfg);
    } else {
        const Matrix P = centres.points();
        p0.resize(P.cols());
        for (Eigen::Index i = 0; i < P.cols(); ++i) p0[i] = init.eval(P.col(i));
        p0 /= h * p0.sum();
    }
    const DensityField field = fpe_solve_1d(model, p0, cfg, parse_real_list(a.times));
    write_density_csv(a.out, field);
    for (std::size_t k = 0; k < field.times.size(); ++k)
        out << "t=" << format_double(field.times[k]) << " mass=" << format_double(h * field.values[k].sum())
            << " min=" << format_double(field.info[k].min_value) << '\n';
    if (model.name == "double-well") {
        const DensityField ps = doublewell_ps(centres, model.params.at("sigma"));
        print_warnings(err, ps.warnings);
        const double linf = (field.values.back() - ps.values[0]).cwiseAbs().maxCoeff();
        out << "linf_vs_analytic_ps=" << format_double(linf) << '\n';
    }
    return 0;
}

// ---------------------------------------------------------------- ensemble
struct EnsembleArgs {
    std::string model;
    std::vector<std::string> params;
    std::string p0;
    std::size_t n = 100000;
    std::string times = "1";
    std::string grid;
    double dt = 0.01;
    std::string out;
    std::string cloud_out;
    std::string moments;
    std::string moments_out;
};

int cmd_ensemble(const EnsembleArgs& a, const Common& c, std::ostream& out) {
    const SdeModel model = builtin_model(a.model, parse_overrides(a.params));
    const InitialDensity p0 = parse_p0_spec(a.p0, model.dim_state);
    const std::vector<double> times = parse_real_list(a.times);
    std::optional<Grid> grid;
    if (!a.grid.empty()) grid = parse_grid_spec(a.grid);
    std::vector<int> orders;
    if (!a.moments.empty()) orders = parse_int_list(a.moments);

    DensityField field;
    MomentSeries ms;
    for (std::size_t k = 0; k < times.size(); ++k) {
        const EnsembleResult r = ensemble_forecast(model, p0, a.n, times[k], grid, c.seed, a.dt);
        if (r.field) {
            if (k == 0) {
                field.grid = r.field->grid;
                field.producer = "ensemble";
            }
            field.push(times[k], r.field->values[0], r.field->info[0]);
        }
        if (!a.cloud_out.empty()) {
            std::string path = a.cloud_out;
            if (times.size() > 1) path += "." + std::to_string(k);
            write_cloud_csv(path, times[k], r.cloud);
        }
        if (!orders.empty()) {
            const auto vals = sample_raw_moments(r.cloud, orders);
            std::size_t idx = 0;
            for (int j = 0; j < model.dim_state; ++j)
                for (int o : orders) ms.rows.push_back({times[k], j + 1, o, vals[idx++]});
        }
        out << "t=" << format_double(times[k]) << " particles=" << a.n << '\n';
    }
    if (grid && !a.out.empty()) write_density_csv(a.out, field);
    if (!a.moments_out.empty()) write_moments_csv(a.moments_out, ms);
    for (const auto& r : ms.rows)
        out << "moment t=" << format_double(r.t) << " dim=" << r.dim << " order=" << r.order
            << " value=" << format_double(r.value) << '\n';
    return 0;
}

// ---------------------------------------------------------------- compare
struct CompareArgs {
    std::vector<std::string> files;
    std::string out;
    std::string timing_pairs;
    std::string dict = "monomial:4";
    int k = 1000;
    double epsilon = 0.0;
};

int cmd_compare(const CompareArgs& a, const Common& c, std::ostream& out) {
    if (a.files.size() != 2 && a.timing_pairs.empty())
        throw InputError("compare needs two density files and/or --timing-pairs");
    if (a.files.size() == 2) {
        const DensityField cand = read_density_csv(a.files[0]);
        const DensityField ref = read_density_csv(a.files[1]);
        const ErrorReport rep = error_metrics(cand, ref);
        if (!a.out.empty()) write_error_csv(a.out, rep);
        out << "t,rel_l2,l1,linf\n";
        for (const auto& p : rep.per_time)
            out << format_double(p.t) << ',' << format_double(p.rel_l2) << ',' << format_double(p.l1) << ','
                << format_double(p.linf) << '\n';
        out << "max rel_l2=" << format_double(rep.rel_l2) << " l1=" << format_double(rep.l1)
            << " linf=" << format_double(rep.linf) << '\n';
    } else if (!a.files.empty()) {
        throw InputError("compare takes exactly two density files");
    }
    if (!a.timing_pairs.empty()) {
        const SnapshotPairs pairs = read_pairs_csv(a.timing_pairs);
        const Dictionary dict = parse_dict_spec(a.dict, pairs.dim());
        auto start = Clock::now();
        const KoopmanModel km = fit_koopman(pairs, dict);
        const double t_dpdd = seconds_since(start);
        DiffusionMapOptions opts;
        opts.epsilon = a.epsilon;
        opts.eig.seed = c.seed;
        start = Clock::now();
        const DiffusionMapModel dm = diffusion_map(pairs.X, a.k, opts);
        const double t_df = seconds_since(start);
        out << "dpdd_basis_seconds=" << format_double(t_dpdd) << " (N=" << km.size() << ")\n";
        out << "df_basis_seconds=" << format_double(t_df) << " (k=" << dm.size() << ")\n";
        out << "speedup=" << format_double(t_df / std::max(t_dpdd, 1e-9)) << '\n';
    }
    return 0;
}

} // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Probability density forecasting from snapshot data"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kToolVersion);
    Common common;

    SimulateArgs sim;
    auto* s = app.add_subcommand("simulate", "Sample stationary snapshot pairs from a benchmark SDE");
    s->add_option("--model", sim.model, "double-well | ou | turbulence2d | lorenz63")->required();
    s->add_option("--param", sim.params, "Parameter override name=value");
    s->add_option("--m", sim.m, "Number of pairs");
    s->add_option("--dt", sim.dt, "Time step");
    s->add_option("--burn-in", sim.burn_in, "Burn-in steps");
    s->add_option("--scheme", sim.scheme, "em | milstein");
    s->add_option("--mode", sim.mode, "single | ensemble");
    s->add_option("--out", sim.out, "Pairs CSV")->required();
    add_common(s, common);

    FitArgs fit;
    auto* f = app.add_subcommand("fit", "Fit the Koopman spectrum and stationary density");
    f->add_option("--pairs", fit.pairs, "Pairs CSV")->required();
    f->add_option("--dict", fit.dict, "monomial:<deg> | hermite:<deg> | linpow:<w>:<p>,...")->required();
    f->add_option("--stationary", fit.stationary, "analytic:doublewell | analytic:gaussian[:m:v] | kde:silverman | kde:knn");
    f->add_option("--p0", fit.p0, "Initial density stored with the model");
    f->add_option("--rtol", fit.rtol, "Pseudoinverse relative tolerance");
    f->add_option("--out", fit.out, "Model JSON")->required();
    add_common(f, common);

    ForecastArgs fc;
    auto* fo = app.add_subcommand("forecast", "Forecast densities and moments from a fitted model");
    fo->add_option("--model", fc.model, "Model JSON")->required();
    fo->add_option("--p0", fc.p0, "gaussian:<mean>:<var> | stationary");
    fo->add_option("--times", fc.times, "t1,t2,...");
    fo->add_option("--grid", fc.grid, "a:b:n[,a:b:n...]; omitted: training samples");
    fo->add_option("--out", fc.out, "Density CSV");
    fo->add_option("--moments", fc.moments, "Orders, e.g. 1,2,3,4");
    fo->add_option("--moments-out", fc.moments_out, "Moment CSV");
    fo->add_flag("--drop-unstable", fc.drop_unstable, "Exclude modes with Re(lambda) > 1e-6");
    fo->add_flag("--clip-negative", fc.clip_negative, "Zero negative values and renormalize");
    add_common(fo, common);

    DfArgs df;
    auto* dfc = app.add_subcommand("df", "Diffusion-forecast baseline");
    dfc->add_option("--pairs", df.pairs, "Pairs CSV")->required();
    dfc->add_option("--k", df.k, "Number of basis functions");
    dfc->add_option("--epsilon", df.epsilon, "Kernel bandwidth (0 = automatic)");
    dfc->add_flag("--literal-paper", df.literal, "Generator divisor eps instead of eps^2/2");
    dfc->add_option("--lookup", df.lookup, "nearest | exact");
    dfc->add_option("--stationary", df.stationary, "Stationary density spec");
    dfc->add_option("--p0", df.p0, "gaussian:<mean>:<var> | stationary");
    dfc->add_option("--times", df.times, "Multiples of dt");
    dfc->add_flag("--no-importance-weight", df.no_weight, "Drop 1/p_s from the initial coefficients");
    dfc->add_option("--out", df.out, "Density CSV at the samples");
    dfc->add_option("--moments", df.moments, "Orders");
    dfc->add_option("--moments-out", df.moments_out, "Moment CSV");
    dfc->add_option("--save-model", df.save_model, "Model JSON");
    add_common(dfc, common);

    FpeArgs fpe;
    auto* fp = app.add_subcommand("fpe", "Reference Fokker-Planck solution (1-D)");
    fp->add_option("--model", fpe.model, "double-well | ou")->required();
    fp->add_option("--param", fpe.params, "Parameter override name=value");
    fp->add_option("--grid", fpe.grid, "a:b:n_cells");
    fp->add_option("--dt", fpe.dt, "Time step");
    fp->add_option("--p0", fpe.p0, "gaussian:<mean>:<var> | stationary");
    fp->add_option("--times", fpe.times, "t1,t2,...");
    fp->add_option("--out", fpe.out, "Density CSV")->required();
    add_common(fp, common);

    EnsembleArgs ens;
    auto* en = app.add_subcommand("ensemble", "Particle ensemble reference");
    en->add_option("--model", ens.model, "Benchmark model")->required();
    en->add_option("--param", ens.params, "Parameter override name=value");
    en->add_option("--p0", ens.p0, "gaussian:<mean>:<var>")->required();
    en->add_option("--n", ens.n, "Particles");
    en->add_option("--times", ens.times, "t1,t2,...");
    en->add_option("--grid", ens.grid, "KDE grid (d <= 2)");
    en->add_option("--dt", ens.dt, "Time step");
    en->add_option("--out", ens.out, "Density CSV");
    en->add_option("--cloud-out", ens.cloud_out, "Particle CSV");
    en->add_option("--moments", ens.moments, "Orders");
    en->add_option("--moments-out", ens.moments_out, "Moment CSV");
    add_common(en, common);

    CompareArgs cmp;
    auto* co = app.add_subcommand("compare", "Error metrics between density files and basis timings");
    co->add_option("files", cmp.files, "candidate.csv reference.csv");
    co->add_option("--out", cmp.out, "Error CSV");
    co->add_option("--timing-pairs", cmp.timing_pairs, "Pairs CSV for basis timing");
    co->add_option("--dict", cmp.dict, "Dictionary for the timing fit");
    co->add_option("--k", cmp.k, "Diffusion-map basis size for the timing fit");
    co->add_option("--epsilon", cmp.epsilon, "Kernel bandwidth (0 = automatic)");
    add_common(co, common);

    std::vector<std::string> rev(args.rbegin(), args.rend());
    try {
        app.parse(rev);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::CallForVersion&) {
        out << kToolVersion << '\n';
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    }

    const std::string cmdline = join_args(args);
    try {
        set_num_threads(common.threads);
        if (s->parsed()) return cmd_simulate(sim, common, out);
        if (f->parsed()) return cmd_fit(fit, common, cmdline, out, err);
        if (fo->parsed()) return cmd_forecast(fc, out, err);
        if (dfc->parsed()) return cmd_df(df, common, cmdline, out, err);
        if (fp->parsed()) return cmd_fpe(fpe, out, err);
        if (en->parsed()) return cmd_ensemble(ens, common, out);
        if (co->parsed()) return cmd_compare(cmp, common, out);
    } catch (const InputError& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    } catch (const SimulationDivergedError& e) {
        err << "error: simulation diverged at step " << e.step() << ": " << e.what() << '\n';
        return 3;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return 4;
    }
    return 2;
}

} // namespace dpdd
