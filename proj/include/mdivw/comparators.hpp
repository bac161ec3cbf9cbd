#ifndef MDIVW_COMPARATORS_HPP
#define MDIVW_COMPARATORS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "mdivw/errors.hpp"
#include "mdivw/estimators.hpp"
#include "mdivw/math.hpp"
#include "mdivw/selection.hpp"
#include "mdivw/summary_data.hpp"

namespace mdivw {

// MR-Egger weighted least squares fit: Gamma_hat on gamma_hat with
// intercept, weights se_Gamma^-2. residual_scale is the multiplicative
// random-effects inflation actually applied to the SEs (never below 1).
struct EggerFit {
    double intercept = 0.0;
    double slope = 0.0;
    double se_intercept = 0.0;
    double se_slope = 0.0;
    double residual_scale = 1.0;
    std::size_t p_used = 0;
};

inline EggerFit egger_fit(const SummaryDataset& dataset, const SelectionMask& mask) {
    if (mask.included.size() != dataset.size()) {
        throw config_error("selection mask length does not match dataset");
    }
    if (mask.p_lambda_hat < 3) {
        throw insufficient_instruments_error("MR-Egger needs at least 3 selected SNPs");
    }
    compensated_sum sw, swx, swxx, swy;
    for (std::size_t j = 0; j < dataset.size(); ++j) {
        if (!mask.included[j]) continue;
        const SnpRecord& r = dataset.records[j];
        double w = 1.0 / (r.se_Gamma * r.se_Gamma);
        sw.add(w);
        swx.add(w * r.gamma_hat);
        swxx.add(w * r.gamma_hat * r.gamma_hat);
        swy.add(w * r.Gamma_hat);
    }
    double Sw = sw.value();
    double xbar = swx.value() / Sw;
    double ybar = swy.value() / Sw;
    // centered normal equations; avoids the Sw*Sxx - Sx^2 cancellation
    compensated_sum sxx_c, sxy_c;
    for (std::size_t j = 0; j < dataset.size(); ++j) {
        if (!mask.included[j]) continue;
        const SnpRecord& r = dataset.records[j];
        double w = 1.0 / (r.se_Gamma * r.se_Gamma);
        double dx = r.gamma_hat - xbar;
        sxx_c.add(w * dx * dx);
        sxy_c.add(w * dx * (r.Gamma_hat - ybar));
    }
    double Sxx_c = sxx_c.value();
    if (!(Sxx_c > 0.0) || Sxx_c <= 1e-12 * swxx.value()) {
        throw singular_design_error("MR-Egger design is singular (gamma_hat has no spread)");
    }
    EggerFit fit;
    fit.p_used = mask.p_lambda_hat;
    fit.slope = sxy_c.value() / Sxx_c;
    fit.intercept = ybar - fit.slope * xbar;

    compensated_sum rss;
    for (std::size_t j = 0; j < dataset.size(); ++j) {
        if (!mask.included[j]) continue;
        const SnpRecord& r = dataset.records[j];
        double e = r.Gamma_hat - fit.intercept - fit.slope * r.gamma_hat;
        rss.add(e * e / (r.se_Gamma * r.se_Gamma));
    }
    double sigma2 = rss.value() / static_cast<double>(fit.p_used - 2);
    fit.residual_scale = std::max(1.0, std::sqrt(sigma2));
    fit.se_slope = std::sqrt(1.0 / Sxx_c) * fit.residual_scale;
    fit.se_intercept = std::sqrt(1.0 / Sw + xbar * xbar / Sxx_c) * fit.residual_scale;
    return fit;
}

inline Estimate egger(const SummaryDataset& dataset, const SelectionMask& mask,
                      double conf_z = kZ95) {
    EggerFit fit = egger_fit(dataset, mask);
    Estimate e;
    e.method = Method::Egger;
    e.beta = fit.slope;
    e.se = fit.se_slope;
    e.p_used = fit.p_used;
    e.strength = iv_strength(dataset, mask);
    e.ci_lower = e.beta - conf_z * e.se;
    e.ci_upper = e.beta + conf_z * e.se;
    return e;
}

namespace detail {

// 50% quantile of the weighted empirical distribution of the Wald ratios,
// linear interpolation in cumulative weight between adjacent order
// statistics.
inline double weighted_median_point(const std::vector<double>& ratios,
                                    const std::vector<double>& weights) {
    std::size_t n = ratios.size();
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(),
              [&](std::size_t a, std::size_t b) { return ratios[a] < ratios[b]; });
    double total = 0.0;
    for (double w : weights) total += w;
    // plotting positions S_k = (cum_k - w_k/2) / total
    double cum = 0.0;
    double prev_s = 0.0, prev_b = ratios[idx[0]];
    for (std::size_t k = 0; k < n; ++k) {
        double w = weights[idx[k]];
        double s = (cum + w / 2.0) / total;
        double b = ratios[idx[k]];
        if (s >= 0.5) {
            if (k == 0 || s == prev_s) return b;
            return prev_b + (b - prev_b) * (0.5 - prev_s) / (s - prev_s);
        }
        cum += w;
        prev_s = s;
        prev_b = b;
    }
    return ratios[idx[n - 1]];
}

}  // namespace detail

// Weighted-median estimator with a parametric bootstrap SE: resamples
// (gamma_hat, Gamma_hat) from their reported normal laws and takes the
// standard deviation of the recomputed medians.
inline Estimate weighted_median(const SummaryDataset& dataset, const SelectionMask& mask,
                                std::size_t bootstrap_reps, std::uint64_t seed,
                                double conf_z = kZ95) {
    if (mask.included.size() != dataset.size()) {
        throw config_error("selection mask length does not match dataset");
    }
    if (mask.p_lambda_hat < 2) {
        throw insufficient_instruments_error("weighted median needs at least 2 selected SNPs");
    }
    if (bootstrap_reps < 100) {
        throw config_error("weighted median needs at least 100 bootstrap replications");
    }
    std::vector<const SnpRecord*> sel;
    for (std::size_t j = 0; j < dataset.size(); ++j) {
        if (!mask.included[j]) continue;
        const SnpRecord& r = dataset.records[j];
        if (r.gamma_hat == 0.0) {
            throw undefined_ratio_error("Wald ratio undefined: gamma_hat = 0 for SNP '" +
                                        r.snp_id + "'");
        }
        sel.push_back(&r);
    }
    std::size_t n = sel.size();
    std::vector<double> ratios(n), weights(n);
    for (std::size_t i = 0; i < n; ++i) {
        ratios[i] = sel[i]->Gamma_hat / sel[i]->gamma_hat;
        weights[i] = sel[i]->gamma_hat * sel[i]->gamma_hat / (sel[i]->se_Gamma * sel[i]->se_Gamma);
    }
    Estimate e;
    e.method = Method::WeightedMedian;
    e.beta = detail::weighted_median_point(ratios, weights);
    e.p_used = n;
    e.strength = iv_strength(dataset, mask);

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> unit;
    std::vector<double> boot(bootstrap_reps);
    std::vector<double> r2(n), w2(n);
    for (std::size_t b = 0; b < bootstrap_reps; ++b) {
        for (std::size_t i = 0; i < n; ++i) {
            double g = sel[i]->gamma_hat + sel[i]->se_gamma * unit(rng);
            double G = sel[i]->Gamma_hat + sel[i]->se_Gamma * unit(rng);
            r2[i] = G / g;
            w2[i] = g * g / (sel[i]->se_Gamma * sel[i]->se_Gamma);
        }
        boot[b] = detail::weighted_median_point(r2, w2);
    }
    double mean = 0.0;
    for (double v : boot) mean += v;
    mean /= static_cast<double>(bootstrap_reps);
    double ss = 0.0;
    for (double v : boot) ss += (v - mean) * (v - mean);
    e.se = std::sqrt(ss / static_cast<double>(bootstrap_reps - 1));
    e.ci_lower = e.beta - conf_z * e.se;
    e.ci_upper = e.beta + conf_z * e.se;
    return e;
}

}  // namespace mdivw

#endif
