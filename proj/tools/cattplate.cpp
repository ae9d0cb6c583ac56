// Command-line front end: configuration-driven simulations, jets, spectra,
// parameter sweeps and the invariant check suite. Emits CSV time series and
// JSON summaries; exit codes encode halt reasons so scripts can branch:
//   0 completed, 1 configuration error, 2 degeneracy, 3 blow-up,
//   4 Picard divergence, 5 failed invariant.

#include <atomic>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cattplate/checks.hpp"
#include "cattplate/config.hpp"
#include "cattplate/diagnostics.hpp"
#include "cattplate/oracle.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace cattplate;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitDegeneracy = 2;
constexpr int kExitBlowUp = 3;
constexpr int kExitPicard = 4;
constexpr int kExitCheckFailed = 5;

int exit_code_for(HaltReason halt) {
    switch (halt) {
        case HaltReason::completed: return kExitOk;
        case HaltReason::degeneracy: return kExitDegeneracy;
        case HaltReason::blow_up: return kExitBlowUp;
        case HaltReason::picard_divergence: return kExitPicard;
    }
    return kExitConfig;
}

struct CliOptions {
    std::string config_path;
    std::string out_dir;  // overrides config when nonempty
    int threads = 1;
    bool quiet = false;
};

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read config file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

RunConfig load_config(const CliOptions& cli) {
    RunConfig cfg = parse_config(slurp(cli.config_path));
    if (!cli.out_dir.empty()) cfg.output.dir = cli.out_dir;
    return cfg;
}

std::string fmt(double v, int precision) { return config_detail::format_double(v, precision); }

void info(const CliOptions& cli, const std::string& msg) {
    if (!cli.quiet) std::cerr << msg << "\n";
}

json coeff_array(const SpectralField& f, int precision) {
    json arr = json::array();
    for (double c : f.coeffs) arr.push_back(json::parse(fmt(c, precision)));
    return arr;
}

int cmd_simulate(const CliOptions& cli) {
    RunConfig cfg = load_config(cli);
    const ModelParams params = cfg.resolved_params();
    const Nonlinearity nl = cfg.make_nonlinearity();
    const PlateState initial = cfg.make_initial_state();
    params.validate(true);

    fs::create_directories(cfg.output.dir);
    std::ofstream csv(fs::path(cfg.output.dir) / "series.csv", std::ios::binary);
    if (!csv) throw ConfigError("cannot open series.csv for writing");
    csv << "t,E1,E2,E3,E,X,Y,ellipticity_min,picard_iters\n";

    const int prec = cfg.output.precision;
    std::vector<Jet> jets;
    std::vector<std::pair<double, double>> x_series, e1_series;
    auto sink = [&](const Record& rec) {
        const EnergyReport rep = energy_levels(rec.jet, params);
        csv << fmt(rec.t, prec) << ',' << fmt(rep.E1, prec) << ',' << fmt(rep.E2, prec) << ','
            << fmt(rep.E3, prec) << ',' << fmt(rep.E, prec) << ',' << fmt(rep.X, prec) << ','
            << fmt(rep.Y, prec) << ',' << fmt(rec.ellipticity, prec) << ',' << rec.picard_iters
            << '\n';
        jets.push_back(rec.jet);
        x_series.emplace_back(rec.t, rep.X);
        e1_series.emplace_back(rec.t, rep.E1);
    };

    info(cli, std::string("simulate: scheme ") + to_string(cfg.sim.scheme) + ", dt " +
                  fmt(cfg.sim.dt, 6) + ", t_end " + fmt(cfg.sim.t_end, 6));
    const SimResult result = simulate(initial, params, nl, cfg.sim, sink);
    csv.close();

    json summary;
    summary["tool"] = kToolVersion;
    summary["halt_reason"] = to_string(result.halt);
    summary["final_time"] = result.final_state.t;
    summary["steps_taken"] = result.steps_taken;
    summary["picard"] = {{"max_iters", result.max_picard_iters},
                         {"mean_iters", result.mean_picard_iters}};
    if (!e1_series.empty()) {
        summary["E1_initial"] = e1_series.front().second;
        summary["E1_final"] = e1_series.back().second;
        summary["X_initial"] = x_series.front().second;
        summary["X_final"] = x_series.back().second;
    }
    summary["dissipation_residual"] = nullptr;
    if (params.sigma == 0.0 && jets.size() >= 2) {
        try {
            summary["dissipation_residual"] = dissipation_residual(jets, params, nl);
        } catch (const std::exception&) {
            // non-uniform sampling (halted run or trailing record); skip
        }
    }
    summary["decay_fit"] = nullptr;
    try {
        auto fit = decay_fit(x_series);
        summary["decay_fit"] = {{"kappa_hat", fit.kappa_hat},
                                {"C_hat", fit.C_hat},
                                {"r_squared", fit.r_squared},
                                {"window", {fit.t_a, fit.t_b}}};
    } catch (const std::exception&) {
    }
    if (!x_series.empty()) {
        auto barrier = barrier_report(x_series, e1_series, x_series.front().second,
                                      e1_series.front().second);
        summary["barrier"] = {{"sup_X_ratio", barrier.sup_X_ratio},
                              {"sup_E1_ratio", barrier.sup_E1_ratio},
                              {"eventually_monotone", barrier.eventually_monotone}};
    }
    summary["config"] = canonicalize(cfg);

    std::ofstream js(fs::path(cfg.output.dir) / "summary.json", std::ios::binary);
    js << summary.dump(2) << "\n";

    info(cli, std::string("halt: ") + to_string(result.halt) + " at t = " +
                  fmt(result.final_state.t, 6));
    return exit_code_for(result.halt);
}

int cmd_jets(const CliOptions& cli) {
    RunConfig cfg = load_config(cli);
    const ModelParams params = cfg.resolved_params();
    const Nonlinearity nl = cfg.make_nonlinearity();
    const PlateState initial = cfg.make_initial_state();
    params.validate(true);

    Jet jet;
    try {
        jet = initial_jet(initial.z, initial.v, initial.theta, initial.p, params, nl,
                          cfg.sim.degeneracy_eps);
    } catch (const DegeneracyError& e) {
        std::cerr << "degenerate initial data: " << e.what() << "\n";
        return kExitDegeneracy;
    }

    const int prec = cfg.output.precision;
    json out;
    out["tool"] = kToolVersion;
    out["z0"] = coeff_array(jet.z, prec);
    out["z1"] = coeff_array(jet.zt, prec);
    out["z2"] = coeff_array(jet.ztt, prec);
    out["z3"] = coeff_array(jet.zttt, prec);
    out["theta0"] = coeff_array(jet.theta, prec);
    out["theta1"] = coeff_array(jet.theta_t, prec);
    out["theta2"] = coeff_array(jet.theta_tt, prec);
    out["p0"] = coeff_array(jet.p, prec);
    out["p1"] = coeff_array(jet.pt, prec);
    out["p2"] = coeff_array(jet.ptt, prec);
    // initial data arrive as modal coefficients, so nothing is discarded when
    // projecting div q0 onto the sine span
    out["p0_complement_norm"] = 0.0;
    out["config"] = canonicalize(cfg);

    fs::create_directories(cfg.output.dir);
    std::ofstream js(fs::path(cfg.output.dir) / "jets.json", std::ios::binary);
    js << out.dump(2) << "\n";
    return kExitOk;
}

int cmd_spectrum(const CliOptions& cli) {
    RunConfig cfg = load_config(cli);
    const ModelParams params = cfg.resolved_params();
    const double length = cfg.basis.lengths[0];

    fs::create_directories(cfg.output.dir);
    std::ofstream csv(fs::path(cfg.output.dir) / "spectrum.csv", std::ios::binary);
    csv << "k,lambda,re1,im1,re2,im2,re3,im3,re4,im4,abscissa\n";
    const int prec = cfg.output.precision;
    for (int k = 1; k <= cfg.spectrum.k_max; ++k) {
        const double w = k * std::numbers::pi / length;
        auto sp = spectral_abscissa(mode_matrix(w * w, params));
        csv << k << ',' << fmt(w * w, prec);
        for (int i = 0; i < 4; ++i) {
            if (i < static_cast<int>(sp.eigenvalues.size()))
                csv << ',' << fmt(sp.eigenvalues[i].real(), prec) << ','
                    << fmt(sp.eigenvalues[i].imag(), prec);
            else
                csv << ",nan,nan";
        }
        csv << ',' << fmt(sp.abscissa, prec) << '\n';
    }
    info(cli, "spectrum: wrote " + std::to_string(cfg.spectrum.k_max) + " modes");
    return kExitOk;
}

int cmd_sweep(const CliOptions& cli) {
    RunConfig cfg = load_config(cli);
    const ModelParams params = cfg.resolved_params();
    const double length = cfg.basis.lengths[0];

    // cells are independent; results are stored by index so the output order
    // stays deterministic at any thread count
    std::vector<std::pair<double, double>> cells;
    for (double g : cfg.sweep.gamma_list)
        for (double t : cfg.sweep.tau_list) cells.emplace_back(g, t);

    std::vector<SweepCell> results(cells.size());
    const int threads = std::max(1, cli.threads);
    std::atomic<size_t> next{0};
    auto worker = [&] {
        for (size_t i = next.fetch_add(1); i < cells.size(); i = next.fetch_add(1)) {
            auto sw = stability_sweep(params, {cells[i].first}, {cells[i].second}, cfg.sweep.k_max,
                                      length);
            results[i] = std::move(sw.cells.front());
        }
    };
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::future<void>> futures;
        for (int i = 0; i < threads; ++i)
            futures.push_back(std::async(std::launch::async, worker));
        for (auto& f : futures) f.get();
    }

    fs::create_directories(cfg.output.dir);
    std::ofstream csv(fs::path(cfg.output.dir) / "sweep.csv", std::ios::binary);
    csv << "gamma,tau,inf_neg_abscissa,trend_ratio,classification\n";
    const int prec = cfg.output.precision;
    for (const auto& c : results)
        csv << fmt(c.gamma, prec) << ',' << fmt(c.tau, prec) << ','
            << fmt(c.inf_neg_abscissa, prec) << ',' << fmt(c.trend_ratio, prec) << ','
            << c.classification << '\n';
    info(cli, "sweep: wrote " + std::to_string(results.size()) + " cells");
    return kExitOk;
}

int cmd_check(const std::string& level_name) {
    CheckLevel level;
    if (level_name == "quick")
        level = CheckLevel::quick;
    else if (level_name == "full")
        level = CheckLevel::full;
    else {
        std::cerr << "unknown check level '" << level_name << "' (quick|full)\n";
        return kExitConfig;
    }
    auto results = run_checks(level);
    size_t failed = 0;
    for (const auto& r : results) {
        std::cout << (r.pass ? "[PASS] " : "[FAIL] ") << r.name;
        if (!r.detail.empty()) std::cout << "  (" << r.detail << ")";
        std::cout << "\n";
        if (!r.pass) ++failed;
    }
    std::cout << results.size() - failed << "/" << results.size() << " checks passed\n";
    return failed == 0 ? kExitOk : kExitCheckFailed;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Spectral simulator for thermoelastic plates with Cattaneo heat conduction"};
    app.require_subcommand(1);

    CliOptions cli;
    std::string check_level = "quick";

    auto add_common = [&](CLI::App* sub, bool needs_config) {
        if (needs_config)
            sub->add_option("--config", cli.config_path, "configuration file")->required();
        sub->add_option("--out", cli.out_dir, "output directory (overrides config)");
        sub->add_option("--threads", cli.threads, "worker threads (1 = deterministic default)");
        sub->add_flag("--quiet", cli.quiet, "suppress progress messages");
    };

    auto* sim = app.add_subcommand("simulate", "run a time integration");
    add_common(sim, true);
    auto* spec = app.add_subcommand("spectrum", "per-mode eigenvalues and abscissas");
    add_common(spec, true);
    auto* sweep = app.add_subcommand("sweep", "(gamma, tau) stability sweep");
    add_common(sweep, true);
    auto* jets = app.add_subcommand("jets", "compatibility jets of the initial data");
    add_common(jets, true);
    auto* check = app.add_subcommand("check", "run the invariant suite");
    check->add_option("--level", check_level, "quick|full");
    add_common(check, false);

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim->parsed()) return cmd_simulate(cli);
        if (spec->parsed()) return cmd_spectrum(cli);
        if (sweep->parsed()) return cmd_sweep(cli);
        if (jets->parsed()) return cmd_jets(cli);
        if (check->parsed()) return cmd_check(check_level);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    }
    return kExitConfig;
}
