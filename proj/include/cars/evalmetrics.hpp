#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "cars/error.hpp"
#include "cars/survival_data.hpp"

namespace cars {

struct PrPoint {
    double recall;
    double precision;
};

struct PrCurve {
    std::vector<PrPoint> points;  // one per tie block, by decreasing |score|
    double auc = 0.0;
    Index positives = 0;
    double prevalence = 0.0;
};

/// Step-rule precision-recall AUC: sum of precision times recall increment
/// over tie blocks of |score|, taken in decreasing order.
inline PrCurve pr_auc(const VectorXd& scores, const std::vector<bool>& labels) {
    const auto n = static_cast<std::size_t>(scores.size());
    if (labels.size() != n) throw Error(ErrorKind::BadShape, "scores and labels differ in length");
    PrCurve curve;
    curve.positives = static_cast<Index>(std::count(labels.begin(), labels.end(), true));
    if (curve.positives == 0) throw Error(ErrorKind::NoPositives, "no positive labels");
    curve.prevalence = static_cast<double>(curve.positives) / static_cast<double>(n);

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return std::abs(scores[static_cast<Index>(a)]) > std::abs(scores[static_cast<Index>(b)]);
    });
    const double p = static_cast<double>(curve.positives);
    double tp = 0.0, fp = 0.0, prev_recall = 0.0;
    std::size_t pos = 0;
    while (pos < n) {
        const double s = std::abs(scores[static_cast<Index>(order[pos])]);
        std::size_t end = pos;
        for (; end < n && std::abs(scores[static_cast<Index>(order[end])]) == s; ++end) {
            if (labels[order[end]]) tp += 1.0;
            else fp += 1.0;
        }
        const PrPoint pt{tp / p, tp / (tp + fp)};
        curve.auc += pt.precision * (pt.recall - prev_recall);
        prev_recall = pt.recall;
        curve.points.push_back(pt);
        pos = end;
    }
    return curve;
}

/// Average ranks (1-based) with ties sharing the mean rank.
inline VectorXd average_ranks(const VectorXd& v) {
    const Index n = v.size();
    std::vector<Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return v[a] < v[b]; });
    VectorXd ranks(n);
    std::size_t pos = 0;
    while (pos < order.size()) {
        std::size_t end = pos;
        while (end < order.size() && v[order[end]] == v[order[pos]]) ++end;
        const double r = 0.5 * static_cast<double>(pos + 1 + end);
        for (std::size_t k = pos; k < end; ++k) ranks[order[k]] = r;
        pos = end;
    }
    return ranks;
}

struct RankCorrelation {
    double value = 0.0;
    bool degenerate = false;  // one side constant; value set to 0
};

/// Spearman correlation of |true_effects| against |scores|.
inline RankCorrelation rank_correlation(const VectorXd& true_effects, const VectorXd& scores) {
    if (true_effects.size() != scores.size()) throw Error(ErrorKind::BadShape, "rank_correlation length mismatch");
    if (scores.size() < 2) throw Error(ErrorKind::TooFewRows, "rank_correlation needs at least 2 entries");
    const VectorXd a = average_ranks(true_effects.cwiseAbs());
    const VectorXd b = average_ranks(scores.cwiseAbs());
    const VectorXd ca = a.array() - a.mean();
    const VectorXd cb = b.array() - b.mean();
    const double saa = ca.squaredNorm(), sbb = cb.squaredNorm();
    RankCorrelation out;
    if (saa == 0.0 || sbb == 0.0) {
        out.degenerate = true;
        return out;
    }
    out.value = std::clamp(ca.dot(cb) / std::sqrt(saa * sbb), -1.0, 1.0);
    return out;
}

struct Confusion {
    Index tp = 0, fp = 0, fn = 0, tn = 0;
};

/// 2x2 table of selected vs influential over indices 0..d-1.
inline Confusion selection_confusion(const std::vector<Index>& selected, const std::vector<Index>& influential,
                                     Index d) {
    std::vector<char> sel(static_cast<std::size_t>(d), 0), inf(static_cast<std::size_t>(d), 0);
    auto mark = [d](std::vector<char>& flags, const std::vector<Index>& set) {
        for (Index j : set) {
            if (j < 0 || j >= d) throw Error(ErrorKind::BadShape, "index outside 0..d-1");
            flags[static_cast<std::size_t>(j)] = 1;
        }
    };
    mark(sel, selected);
    mark(inf, influential);
    Confusion c;
    for (std::size_t j = 0; j < sel.size(); ++j) {
        if (sel[j] && inf[j]) ++c.tp;
        else if (sel[j]) ++c.fp;
        else if (inf[j]) ++c.fn;
        else ++c.tn;
    }
    return c;
}

}  // namespace cars
