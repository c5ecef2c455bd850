// cars: command-line front end for survival screening.
//
// Exit codes: 0 success, 2 invalid input or configuration, 3 numerical
// failure. Errors are reported on stderr as
//   error: kind=<Kind> message=<text>

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "cars/cars.hpp"

namespace {

struct GlobalOptions {
    std::optional<std::uint64_t> seed;
    unsigned threads = 1;
    double nu = cars::default_nu;
};

/// Writes to `path`, or to stdout when the path is empty or "-".
template <class Fn>
void with_output(const std::string& path, Fn&& fn) {
    if (path.empty() || path == "-") {
        fn(std::cout);
        std::cout.flush();
        return;
    }
    auto out = cars::detail::open_output(path);
    fn(out);
    if (!out) throw cars::Error(cars::ErrorKind::Io, "write to '" + path + "' failed");
}

std::ifstream open_input(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw cars::Error(cars::ErrorKind::Io, "cannot open '" + path + "'");
    return in;
}

cars::WhiteningPath parse_path(const std::string& s) {
    if (s == "auto") return cars::WhiteningPath::Auto;
    if (s == "dense") return cars::WhiteningPath::Dense;
    return cars::WhiteningPath::Structured;
}

// score ----------------------------------------------------------------------

struct ScoreArgs {
    std::string input, output, method = "cars", time_col = "time", status_col = "status", km_output,
                whitening = "auto";
    std::optional<double> lambda;
};

void run_score(const ScoreArgs& a, const GlobalOptions& g) {
    const auto sample = cars::load_sample(a.input, a.time_col, a.status_col);
    cars::ScoreVector sv;
    if (a.method == "cars") {
        cars::CarsOptions opt;
        opt.nu = g.nu;
        opt.lambda_override = a.lambda;
        opt.path = parse_path(a.whitening);
        sv = cars::cars_score(sample, opt);
        const auto& dg = sv.diagnostics;
        std::cerr << "info: lambda=" << cars::detail::format_double(dg.lambda)
                  << " min_eigenvalue=" << cars::detail::format_double(dg.min_eigenvalue)
                  << " whitening=" << (dg.structured_whitening ? "structured" : "dense")
                  << " floored_weights=" << dg.floored_count << '\n';
        if (!dg.correlation_out_of_range.empty())
            std::cerr << "warning: " << dg.correlation_out_of_range.size()
                      << " weighted correlations fell outside [-1,1]\n";
    } else {
        sv = cars::cox_scores(sample);
        const auto sep = std::count(sv.diagnostics.separation.begin(), sv.diagnostics.separation.end(), true);
        if (sep > 0) std::cerr << "warning: " << sep << " covariates show monotone likelihood; fits capped\n";
    }
    const auto deg = std::count(sv.diagnostics.degenerate.begin(), sv.diagnostics.degenerate.end(), true);
    if (deg > 0) std::cerr << "warning: " << deg << " constant covariates scored 0\n";
    if (!a.km_output.empty())
        with_output(a.km_output, [&](std::ostream& o) { cars::write_curve_csv(o, cars::censoring_km(sample)); });
    with_output(a.output, [&](std::ostream& o) { cars::write_scores(o, sv); });
}

// select ---------------------------------------------------------------------

struct SelectArgs {
    std::string scores, output, density_output;
    double alpha = 0.05;
};

void write_density(std::ostream& out, const cars::VectorXd& scores, const cars::SelectionResult& sel) {
    std::vector<double> mag(static_cast<std::size_t>(scores.size()));
    for (cars::Index j = 0; j < scores.size(); ++j) mag[static_cast<std::size_t>(j)] = std::abs(scores[j]);
    const cars::GrenanderDensity mixture(mag);
    const double top = *std::max_element(mag.begin(), mag.end());
    constexpr int points = 200;
    cars::detail::write_row(out, {"magnitude", "null_density", "mixture_density"});
    for (int i = 0; i <= points; ++i) {
        const double x = top * i / points;
        cars::detail::write_row(out, {cars::detail::format_double(x),
                                      cars::detail::format_double(sel.eta0 *
                                                                  cars::detail::half_normal_pdf(x, sel.null_scale)),
                                      cars::detail::format_double(mixture(x))});
    }
}

void run_select(const SelectArgs& a) {
    auto in = open_input(a.scores);
    const auto table = cars::read_scores(in);
    const auto sel = cars::select(table.scores, a.alpha);
    std::cerr << "info: eta0=" << cars::detail::format_double(sel.eta0)
              << " null_scale=" << cars::detail::format_double(sel.null_scale) << " selected=" << sel.selected.size()
              << '\n';
    if (!a.density_output.empty())
        with_output(a.density_output, [&](std::ostream& o) { write_density(o, table.scores, sel); });
    with_output(a.output, [&](std::ostream& o) { cars::write_selection(o, table.names, table.scores, sel); });
}

// simulate -------------------------------------------------------------------

struct SimulateArgs {
    std::string config, output_dir;
    std::uint64_t replicates = 1;
};

void run_simulate(const SimulateArgs& a, const GlobalOptions& g) {
    auto in = open_input(a.config);
    auto cfg = cars::read_scenario_config(in);
    if (g.seed) cfg.seed = *g.seed;
    const auto sc = cars::prepare_scenario(cfg);
    std::error_code ec;
    std::filesystem::create_directories(a.output_dir, ec);
    if (ec) throw cars::Error(cars::ErrorKind::Io, "cannot create '" + a.output_dir + "': " + ec.message());
    const auto dir = std::filesystem::path(a.output_dir);
    for (std::uint64_t r = 0; r < a.replicates; ++r) {
        const auto sample = cars::generate_replicate(sc, 0, r);
        cars::save_sample((dir / ("data_" + std::to_string(r) + ".csv")).string(), sample);
        with_output((dir / ("truth_" + std::to_string(r) + ".csv")).string(),
                    [&](std::ostream& o) { cars::write_truth(o, sc.truth, sample.covariate_names); });
    }
}

// evaluate -------------------------------------------------------------------

struct EvaluateArgs {
    std::string scores, truth, output;
    double alpha = 0.05;
};

void run_evaluate(const EvaluateArgs& a) {
    auto sin = open_input(a.scores);
    const auto st = cars::read_scores(sin);
    auto tin = open_input(a.truth);
    const auto truth = cars::read_truth(tin);
    const auto idx = cars::align_by_name(st.names, truth.names);
    const auto d = static_cast<cars::Index>(idx.size());
    cars::VectorXd scores(d);
    for (cars::Index j = 0; j < d; ++j) scores[j] = st.scores[static_cast<cars::Index>(idx[static_cast<std::size_t>(j)])];

    std::vector<cars::Index> selected, influential;
    if (st.selected) {
        for (cars::Index j = 0; j < d; ++j)
            if ((*st.selected)[idx[static_cast<std::size_t>(j)]]) selected.push_back(j);
    } else {
        selected = cars::select(scores, a.alpha).selected;
    }
    for (cars::Index j = 0; j < d; ++j)
        if (truth.influential[static_cast<std::size_t>(j)]) influential.push_back(j);

    const auto pr = cars::pr_auc(scores, truth.influential);
    const auto rc = cars::rank_correlation(truth.beta, scores);
    if (rc.degenerate) std::cerr << "warning: rank correlation undefined (constant ranks); reported as 0\n";
    const auto c = cars::selection_confusion(selected, influential, d);
    with_output(a.output, [&](std::ostream& o) {
        cars::detail::write_row(o, {"pr_auc", "rank_correlation", "tp", "fp", "fn", "tn"});
        cars::detail::write_row(o, {cars::detail::format_double(pr.auc), cars::detail::format_double(rc.value),
                                    std::to_string(c.tp), std::to_string(c.fp), std::to_string(c.fn),
                                    std::to_string(c.tn)});
    });
}

// bench / plotdata -------------------------------------------------------------

struct BenchArgs {
    std::string config, output, timings;
    std::optional<std::uint64_t> replicates;
};

void run_bench_cmd(const BenchArgs& a, const GlobalOptions& g) {
    auto in = open_input(a.config);
    auto grid = cars::read_grid_config(in);
    if (g.seed) grid.seed = *g.seed;
    if (a.replicates) grid.replicates = static_cast<cars::Index>(*a.replicates);
    cars::BenchOptions opt;
    opt.threads = g.threads;
    opt.cars.nu = g.nu;
    const auto report = cars::run_bench(grid, opt);
    const auto failed = std::count_if(report.rows.begin(), report.rows.end(),
                                      [](const cars::BenchRow& r) { return r.status != "ok"; });
    if (failed > 0) std::cerr << "warning: " << failed << " method rows failed; see status column\n";
    if (!a.timings.empty()) with_output(a.timings, [&](std::ostream& o) { cars::write_timings(o, report); });
    with_output(a.output, [&](std::ostream& o) { cars::write_report(o, report); });
}

struct PlotdataArgs {
    std::string report, output;
    std::vector<std::string> group_by;
};

void run_plotdata(const PlotdataArgs& a) {
    const auto table = cars::detail::read_csv_file(a.report);
    std::vector<std::string> fields;
    for (const auto& g : a.group_by)
        for (auto& f : cars::detail::split_fields(g))
            if (!f.empty()) fields.push_back(f);
    with_output(a.output, [&](std::ostream& o) { cars::emit_plotdata(o, table, fields); });
}

int report_error(cars::ErrorKind kind, const std::string& message) {
    std::cerr << "error: kind=" << cars::to_string(kind) << " message=" << message << '\n';
    return cars::is_numerical(kind) ? 3 : 2;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Correlation-adjusted survival screening"};
    app.require_subcommand(1);
    app.fallthrough();
    GlobalOptions g;
    app.add_option("--seed", g.seed, "Master seed for simulation and bench");
    app.add_option("--threads", g.threads, "Worker threads for bench")->check(CLI::PositiveNumber);
    app.add_option("--nu", g.nu, "Floor on the censoring survivor curve for IPC weights");

    ScoreArgs score;
    auto* sc = app.add_subcommand("score", "Score covariates of a survival CSV");
    sc->add_option("--input", score.input, "time,status,covariates... CSV")->required();
    sc->add_option("--output", score.output, "Output CSV (default stdout)");
    sc->add_option("--method", score.method, "cars or cox")->check(CLI::IsMember({"cars", "cox"}));
    sc->add_option("--time-col", score.time_col);
    sc->add_option("--status-col", score.status_col);
    sc->add_option("--km-output", score.km_output, "Write the censoring survivor curve");
    sc->add_option("--lambda", score.lambda, "Fixed shrinkage intensity in [0,1]");
    sc->add_option("--whitening", score.whitening)->check(CLI::IsMember({"auto", "dense", "structured"}));

    SelectArgs sel;
    auto* se = app.add_subcommand("select", "Select covariates by q-value");
    se->add_option("--scores", sel.scores, "CSV with name,score")->required();
    se->add_option("--alpha", sel.alpha, "q-value threshold");
    se->add_option("--output", sel.output);
    se->add_option("--density-output", sel.density_output, "Fitted null and mixture densities");

    SimulateArgs sim;
    auto* si = app.add_subcommand("simulate", "Generate simulated datasets");
    si->add_option("--config", sim.config, "key=value scenario file")->required();
    si->add_option("--output-dir", sim.output_dir)->required();
    si->add_option("--replicates", sim.replicates)->check(CLI::PositiveNumber);

    EvaluateArgs ev;
    auto* eo = app.add_subcommand("evaluate", "Compare scores against ground truth");
    eo->add_option("--scores", ev.scores)->required();
    eo->add_option("--truth", ev.truth)->required();
    eo->add_option("--output", ev.output);
    eo->add_option("--alpha", ev.alpha, "Selection level when the scores carry no selected column");

    BenchArgs bench;
    auto* be = app.add_subcommand("bench", "Run a scenario grid");
    be->add_option("--config", bench.config, "key=value grid file")->required();
    be->add_option("--output", bench.output);
    be->add_option("--replicates", bench.replicates);
    be->add_option("--timings", bench.timings, "Per-row wall times (kept out of the report)");

    PlotdataArgs plot;
    auto* pl = app.add_subcommand("plotdata", "Summarize a bench report");
    pl->add_option("--report", plot.report)->required();
    pl->add_option("--group-by", plot.group_by, "Report fields, comma separated")->delimiter(',');
    pl->add_option("--output", plot.output);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return report_error(cars::ErrorKind::BadConfig, e.what());
    }

    try {
        if (!(g.nu > 0.0 && g.nu < 1.0)) throw cars::Error(cars::ErrorKind::BadConfig, "--nu must lie in (0,1)");
        if (*sc) run_score(score, g);
        else if (*se) run_select(sel);
        else if (*si) run_simulate(sim, g);
        else if (*eo) run_evaluate(ev);
        else if (*be) run_bench_cmd(bench, g);
        else if (*pl) run_plotdata(plot);
    } catch (const cars::Error& e) {
        return report_error(e.kind(), e.what());
    } catch (const std::exception& e) {
        std::cerr << "error: kind=Internal message=" << e.what() << '\n';
        return 1;
    }
    return 0;
}
