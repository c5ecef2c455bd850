#pragma once

#include <functional>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "cars/cars_score.hpp"
#include "cars/detail/csv.hpp"
#include "cars/fdr.hpp"
#include "cars/simgen.hpp"

namespace cars {

/// `name,score,rank`, rows in covariate order, rank 1 = largest |score|.
inline void write_scores(std::ostream& out, const ScoreVector& sv) {
    const auto order = rank_by_magnitude(sv);
    std::vector<Index> rank(order.size());
    for (std::size_t r = 0; r < order.size(); ++r) rank[static_cast<std::size_t>(order[r])] = static_cast<Index>(r + 1);
    detail::write_row(out, {"name", "score", "rank"});
    for (Index j = 0; j < sv.size(); ++j)
        detail::write_row(out, {sv.names[static_cast<std::size_t>(j)], detail::format_double(sv.scores[j]),
                                std::to_string(rank[static_cast<std::size_t>(j)])});
}

/// `name,score,q_value,local_fdr,selected`
inline void write_selection(std::ostream& out, const std::vector<std::string>& names, const VectorXd& scores,
                            const SelectionResult& sel) {
    std::vector<char> flag(static_cast<std::size_t>(scores.size()), 0);
    for (Index j : sel.selected) flag[static_cast<std::size_t>(j)] = 1;
    detail::write_row(out, {"name", "score", "q_value", "local_fdr", "selected"});
    for (Index j = 0; j < scores.size(); ++j)
        detail::write_row(out, {names[static_cast<std::size_t>(j)], detail::format_double(scores[j]),
                                detail::format_double(sel.q_values[j]), detail::format_double(sel.local_fdr[j]),
                                flag[static_cast<std::size_t>(j)] ? "1" : "0"});
}

/// Named score column read from any CSV with `name` and `score`; the
/// optional `selected` column is carried along when present.
struct ScoreTable {
    std::vector<std::string> names;
    VectorXd scores;
    std::optional<std::vector<bool>> selected;
};

namespace detail {

inline double numeric_cell(const CsvTable& t, std::size_t row, std::size_t col) {
    auto v = parse_double(t.rows[row][col]);
    if (!v)
        throw Error(ErrorKind::NonNumericCell,
                    "non-numeric '" + t.rows[row][col] + "' in column '" + t.header[col] + "' (row " +
                        std::to_string(row + 1) + ")",
                    static_cast<long>(row + 1));
    return *v;
}

inline bool flag_cell(const CsvTable& t, std::size_t row, std::size_t col) {
    const double v = numeric_cell(t, row, col);
    if (v != 0.0 && v != 1.0)
        throw Error(ErrorKind::NonBinaryStatus, "column '" + t.header[col] + "' must be 0 or 1 (row " +
                                                    std::to_string(row + 1) + ")",
                    static_cast<long>(row + 1));
    return v == 1.0;
}

}  // namespace detail

inline ScoreTable read_scores(std::istream& in) {
    const auto t = detail::read_csv(in);
    const auto name_col = t.require_column("name");
    const auto score_col = t.require_column("score");
    const auto sel_col = t.column("selected");
    ScoreTable out;
    out.scores.resize(static_cast<Index>(t.rows.size()));
    if (sel_col) out.selected.emplace();
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        out.names.push_back(t.rows[i][name_col]);
        out.scores[static_cast<Index>(i)] = detail::numeric_cell(t, i, score_col);
        if (sel_col) out.selected->push_back(detail::flag_cell(t, i, *sel_col));
    }
    return out;
}

struct TruthTable {
    std::vector<std::string> names;
    VectorXd beta;
    std::vector<bool> influential;
};

inline TruthTable read_truth(std::istream& in) {
    const auto t = detail::read_csv(in);
    const auto name_col = t.require_column("name");
    const auto beta_col = t.require_column("beta");
    const auto inf_col = t.require_column("influential");
    TruthTable out;
    out.beta.resize(static_cast<Index>(t.rows.size()));
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        out.names.push_back(t.rows[i][name_col]);
        out.beta[static_cast<Index>(i)] = detail::numeric_cell(t, i, beta_col);
        out.influential.push_back(detail::flag_cell(t, i, inf_col));
    }
    return out;
}

/// Reorders `scores` to follow `truth` by name; every truth name must be
/// present exactly once.
inline std::vector<std::size_t> align_by_name(const std::vector<std::string>& score_names,
                                              const std::vector<std::string>& truth_names) {
    std::map<std::string, std::size_t, std::less<>> index;
    for (std::size_t i = 0; i < score_names.size(); ++i)
        if (!index.emplace(score_names[i], i).second)
            throw Error(ErrorKind::BadShape, "duplicate name '" + score_names[i] + "' in scores");
    if (score_names.size() != truth_names.size())
        throw Error(ErrorKind::BadShape, "scores and truth list different covariates");
    std::vector<std::size_t> out;
    for (const auto& name : truth_names) {
        auto it = index.find(name);
        if (it == index.end()) throw Error(ErrorKind::MissingColumn, "no score for covariate '" + name + "'");
        out.push_back(it->second);
    }
    return out;
}

}  // namespace cars
