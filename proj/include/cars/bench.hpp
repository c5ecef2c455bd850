#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "cars/cars_score.hpp"
#include "cars/cox.hpp"
#include "cars/detail/config.hpp"
#include "cars/detail/csv.hpp"
#include "cars/detail/quantile.hpp"
#include "cars/evalmetrics.hpp"
#include "cars/simgen.hpp"

namespace cars {

/// Cartesian grid over the swept scenario factors. Keys n, d, block,
/// fraction, ev, censoring take comma lists; block_magnitudes,
/// cutoff_quantile, seed and replicates are scalars.
struct GridConfig {
    std::vector<Index> n{250};
    std::vector<Index> d{150};
    std::vector<int> block{3};
    std::vector<double> fraction{0.1};
    std::vector<double> ev{0.75};
    std::vector<double> censoring{0.25};
    std::array<double, 3> block_magnitudes{0.25, 0.5, 0.75};
    double cutoff_quantile = 0.9;
    std::uint64_t seed = 1;
    Index replicates = 10;
};

inline GridConfig read_grid_config(std::istream& in) {
    using namespace detail;
    GridConfig g;
    for (const auto& [key, value] : read_key_values(in)) {
        const auto items = config_list(value);
        auto reals = [&] {
            std::vector<double> v;
            for (const auto& s : items) v.push_back(config_real(key, s));
            return v;
        };
        auto counts = [&] {
            std::vector<Index> v;
            for (const auto& s : items) v.push_back(static_cast<Index>(config_unsigned(key, s)));
            return v;
        };
        auto scalar = [&] {
            if (items.size() != 1) throw Error(ErrorKind::BadConfig, "'" + key + "' takes a single value");
            return items.front();
        };
        if (key == "n") g.n = counts();
        else if (key == "d") g.d = counts();
        else if (key == "block") {
            g.block.clear();
            for (Index b : counts()) g.block.push_back(static_cast<int>(b));
        } else if (key == "fraction") g.fraction = reals();
        else if (key == "ev") g.ev = reals();
        else if (key == "censoring") g.censoring = reals();
        else if (key == "block_magnitudes") g.block_magnitudes = parse_magnitudes(value);
        else if (key == "cutoff_quantile") g.cutoff_quantile = config_real(key, scalar());
        else if (key == "seed") g.seed = config_unsigned(key, scalar());
        else if (key == "replicates") g.replicates = static_cast<Index>(config_unsigned(key, scalar()));
        else throw Error(ErrorKind::BadConfig, "unknown grid key '" + key + "'");
    }
    return g;
}

/// Scenarios in canonical order: n outermost, censoring innermost.
inline std::vector<ScenarioConfig> expand_grid(const GridConfig& g) {
    std::vector<ScenarioConfig> out;
    for (Index n : g.n)
        for (Index d : g.d)
            for (int block : g.block)
                for (double fraction : g.fraction)
                    for (double ev : g.ev)
                        for (double censoring : g.censoring) {
                            ScenarioConfig c;
                            c.n = n;
                            c.d = d;
                            c.block_magnitudes = g.block_magnitudes;
                            c.influential_fraction = fraction;
                            c.influential_block = block;
                            c.explained_variance = ev;
                            c.censoring_rate = censoring;
                            c.cutoff_quantile = g.cutoff_quantile;
                            c.seed = g.seed;
                            validate(c);
                            out.push_back(c);
                        }
    return out;
}

struct BenchRow {
    Index scenario = 0;
    ScenarioConfig config;
    Index replicate = 0;
    ScoreMethod method = ScoreMethod::Cars;
    double pr_auc = std::numeric_limits<double>::quiet_NaN();
    double rank_correlation = std::numeric_limits<double>::quiet_NaN();
    std::string status = "ok";  // or "error:<Kind>"
    double wall_time_seconds = 0.0;
};

struct BenchReport {
    std::vector<BenchRow> rows;  // order (scenario, replicate, method)
};

namespace detail {

inline BenchRow evaluate_method(const SurvivalSample& sample, const GroundTruth& truth, ScoreMethod method,
                                const CarsOptions& cars_opt) {
    BenchRow row;
    row.method = method;
    const auto start = std::chrono::steady_clock::now();
    try {
        const ScoreVector sv = method == ScoreMethod::Cars ? cars_score(sample, cars_opt) : cox_scores(sample);
        row.wall_time_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        row.pr_auc = pr_auc(sv.scores, truth.influential_mask()).auc;
        row.rank_correlation = rank_correlation(truth.beta, sv.scores).value;
    } catch (const Error& e) {
        row.status = "error:" + std::string(to_string(e.kind()));
        row.pr_auc = row.rank_correlation = std::numeric_limits<double>::quiet_NaN();
    }
    return row;
}

}  // namespace detail

struct BenchOptions {
    unsigned threads = 1;
    CarsOptions cars{};
};

/**
 * Runs every scenario x replicate with both scoring methods. Replicates are
 * distributed over a worker pool; each writes into its own pre-sized slot,
 * so the report is independent of the thread count. Failures become rows
 * with an error status.
 */
inline BenchReport run_bench(const GridConfig& grid, const BenchOptions& opt = {}) {
    const auto configs = expand_grid(grid);
    std::vector<Scenario> scenarios;
    scenarios.reserve(configs.size());
    for (const auto& c : configs) scenarios.push_back(prepare_scenario(c));

    const auto reps = static_cast<std::size_t>(grid.replicates);
    const std::size_t tasks = scenarios.size() * reps;
    constexpr std::array methods{ScoreMethod::Cars, ScoreMethod::Cox};
    BenchReport report;
    report.rows.resize(tasks * methods.size());

    auto run_task = [&](std::size_t t) {
        const std::size_t s = t / reps;
        const std::size_t r = t % reps;
        std::vector<BenchRow> rows;
        try {
            const auto sample = generate_replicate(scenarios[s], s, r);
            for (auto m : methods) rows.push_back(detail::evaluate_method(sample, scenarios[s].truth, m, opt.cars));
        } catch (const Error& e) {
            for (auto m : methods) {
                BenchRow row;
                row.method = m;
                row.status = "error:" + std::string(to_string(e.kind()));
                rows.push_back(row);
            }
        }
        for (std::size_t k = 0; k < methods.size(); ++k) {
            rows[k].scenario = static_cast<Index>(s);
            rows[k].config = scenarios[s].config;
            rows[k].replicate = static_cast<Index>(r);
            report.rows[t * methods.size() + k] = std::move(rows[k]);
        }
    };

    const unsigned workers = std::max(1u, std::min<unsigned>(opt.threads, static_cast<unsigned>(std::max<std::size_t>(tasks, 1))));
    std::atomic<std::size_t> next{0};
    {
        std::vector<std::jthread> pool;
        for (unsigned w = 0; w < workers; ++w)
            pool.emplace_back([&] {
                for (std::size_t t = next++; t < tasks; t = next++) run_task(t);
            });
    }
    return report;
}

inline const std::vector<std::string>& report_header() {
    static const std::vector<std::string> h{"scenario", "n",         "d",      "block",  "fraction",
                                            "ev",       "censoring", "replicate", "method", "pr_auc",
                                            "rank_correlation", "status"};
    return h;
}

inline std::vector<std::string> report_fields(const BenchRow& r) {
    using detail::format_double;
    return {std::to_string(r.scenario),
            std::to_string(r.config.n),
            std::to_string(r.config.d),
            std::to_string(r.config.influential_block),
            format_double(r.config.influential_fraction),
            format_double(r.config.explained_variance),
            format_double(r.config.censoring_rate),
            std::to_string(r.replicate),
            std::string(to_string(r.method)),
            format_double(r.pr_auc),
            format_double(r.rank_correlation),
            r.status};
}

inline void write_report(std::ostream& out, const BenchReport& report) {
    detail::write_row(out, report_header());
    for (const auto& r : report.rows) detail::write_row(out, report_fields(r));
}

/// Wall times live apart from the report so the report stays byte-stable.
inline void write_timings(std::ostream& out, const BenchReport& report) {
    detail::write_row(out, {"scenario", "replicate", "method", "wall_time_seconds"});
    for (const auto& r : report.rows)
        detail::write_row(out, {std::to_string(r.scenario), std::to_string(r.replicate),
                                std::string(to_string(r.method)), detail::format_double(r.wall_time_seconds)});
}

inline detail::CsvTable report_table(const BenchReport& report) {
    detail::CsvTable t;
    t.header = report_header();
    for (const auto& r : report.rows) t.rows.push_back(report_fields(r));
    return t;
}

struct SummaryRow {
    std::vector<std::string> group;  // values of the group_by fields
    std::string method;
    std::string metric;
    Index count = 0;
    double q1 = std::numeric_limits<double>::quiet_NaN();
    double median = std::numeric_limits<double>::quiet_NaN();
    double q3 = std::numeric_limits<double>::quiet_NaN();
};

inline constexpr std::array<std::string_view, 2> report_metrics{"pr_auc", "rank_correlation"};

/**
 * Quartile summaries (type-7) of each metric per group x method over rows
 * with status ok and a finite value. Groups follow first appearance in the
 * report.
 */
inline std::vector<SummaryRow> summarize(const detail::CsvTable& report, const std::vector<std::string>& group_by) {
    std::vector<std::size_t> group_cols;
    for (const auto& f : group_by) {
        const auto col = report.column(f);
        const bool reserved = f == "method" || f == "status" || f == "pr_auc" || f == "rank_correlation";
        if (!col || reserved) throw Error(ErrorKind::UnknownField, "cannot group by '" + f + "'");
        group_cols.push_back(*col);
    }
    const auto method_col = report.require_column("method");
    const auto status_col = report.require_column("status");
    std::vector<std::size_t> metric_cols;
    for (auto m : report_metrics) metric_cols.push_back(report.require_column(m));

    using Key = std::vector<std::string>;  // group values + method
    std::vector<Key> keys;
    std::map<Key, std::array<std::vector<double>, 2>> values;
    for (const auto& row : report.rows) {
        Key key;
        for (auto c : group_cols) key.push_back(row[c]);
        key.push_back(row[method_col]);
        auto [it, inserted] = values.try_emplace(key);
        if (inserted) keys.push_back(key);
        if (row[status_col] != "ok") continue;
        for (std::size_t m = 0; m < metric_cols.size(); ++m)
            if (auto v = detail::parse_double(row[metric_cols[m]]); v && std::isfinite(*v)) it->second[m].push_back(*v);
    }
    std::vector<SummaryRow> out;
    for (const auto& key : keys) {
        auto& metric_values = values[key];
        for (std::size_t m = 0; m < metric_cols.size(); ++m) {
            SummaryRow s;
            s.group.assign(key.begin(), key.end() - 1);
            s.method = key.back();
            s.metric = std::string(report_metrics[m]);
            auto& v = metric_values[m];
            std::sort(v.begin(), v.end());
            s.count = static_cast<Index>(v.size());
            if (!v.empty()) {
                s.q1 = detail::quantile_sorted(v, 0.25);
                s.median = detail::quantile_sorted(v, 0.5);
                s.q3 = detail::quantile_sorted(v, 0.75);
            }
            out.push_back(std::move(s));
        }
    }
    return out;
}

/// Long-format CSV: group fields..., method, metric, count, q1, median, q3.
inline void emit_plotdata(std::ostream& out, const detail::CsvTable& report, const std::vector<std::string>& group_by) {
    const auto rows = summarize(report, group_by);
    std::vector<std::string> header = group_by;
    for (const char* h : {"method", "metric", "count", "q1", "median", "q3"}) header.emplace_back(h);
    detail::write_row(out, header);
    for (const auto& s : rows) {
        std::vector<std::string> fields = s.group;
        fields.push_back(s.method);
        fields.push_back(s.metric);
        fields.push_back(std::to_string(s.count));
        for (double v : {s.q1, s.median, s.q3}) fields.push_back(detail::format_double(v));
        detail::write_row(out, fields);
    }
}

}  // namespace cars
