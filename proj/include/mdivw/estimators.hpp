#ifndef MDIVW_ESTIMATORS_HPP
#define MDIVW_ESTIMATORS_HPP

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "mdivw/errors.hpp"
#include "mdivw/math.hpp"
#include "mdivw/moments.hpp"
#include "mdivw/selection.hpp"
#include "mdivw/summary_data.hpp"

namespace mdivw {

enum class Method { IVW, dIVW, mdIVW, Egger, WeightedMedian };

inline const char* method_name(Method m) {
    switch (m) {
        case Method::IVW: return "ivw";
        case Method::dIVW: return "divw";
        case Method::mdIVW: return "mdivw";
        case Method::Egger: return "egger";
        case Method::WeightedMedian: return "weighted_median";
    }
    return "?";
}

struct Estimate {
    Method method = Method::IVW;
    double beta = 0.0;
    double se = 0.0;
    double ci_lower = 0.0;
    double ci_upper = 0.0;
    std::optional<double> tau2;  // raw (possibly negative) when pleiotropy-adjusted
    StrengthStats strength;
    std::size_t p_used = 0;
    std::vector<std::string> warnings;
};

namespace detail {

inline void finish_interval(Estimate& e, double z) {
    e.ci_lower = e.beta - z * e.se;
    e.ci_upper = e.beta + z * e.se;
}

// Leading term of the mdIVW/dIVW variance at slope beta:
//   theta2^-2 sum { w ghat^2 (1 + w tau2) + beta^2 w^2 sg^2 (ghat^2 + sg^2) }
// tau2 = 0 recovers the pleiotropy-free expression.
inline double variance_lead(const SummaryDataset& ds, const SelectionMask& mask, double theta2,
                            double beta, double tau2) {
    compensated_sum acc;
    for (std::size_t j = 0; j < ds.size(); ++j) {
        if (!mask.included[j]) continue;
        const SnpRecord& r = ds.records[j];
        double g2 = r.gamma_hat * r.gamma_hat;
        double sg2 = r.se_gamma * r.se_gamma;
        double w = 1.0 / (r.se_Gamma * r.se_Gamma);
        acc.add(w * g2 * (1.0 + w * tau2) + beta * beta * w * w * sg2 * (g2 + sg2));
    }
    return acc.value() / (theta2 * theta2);
}

// Higher-order correction Delta_hat. The two trailing sums are the unbiased
// plug-ins (E[ghat^2] = gamma^2 + sg^2 already absorbed), so tau2 = 0 reduces
// exactly to the no-pleiotropy expression. v1 must already be the
// tau-adjusted v1 when tau2 > 0.
inline double delta_hat(const SummaryDataset& ds, const SelectionMask& mask, const Moments& m,
                        double v1, double beta, double tau2) {
    compensated_sum sum6, sum4;
    for (std::size_t j = 0; j < ds.size(); ++j) {
        if (!mask.included[j]) continue;
        const SnpRecord& r = ds.records[j];
        double g2 = r.gamma_hat * r.gamma_hat;
        double sg2 = r.se_gamma * r.se_gamma;
        double w = 1.0 / (r.se_Gamma * r.se_Gamma);
        double w2 = w * w;
        sum6.add(w2 * w * sg2 * sg2 * (6.0 * g2 + 2.0 * sg2));
        sum4.add(w2 * sg2 * (1.0 + w * tau2) * g2);
    }
    double b2 = beta * beta;
    return v1 * m.v2 / b2 - 6.0 * m.v12 * m.v2 / beta + 2.0 * m.v12 * m.v12 / b2 +
           3.0 * m.v2 * m.v2 - m.theta2 * sum6.value() - 2.0 * m.theta2 / b2 * sum4.value();
}

// v1 with the outcome variance inflated by tau2.
inline double v1_tau(const SummaryDataset& ds, const SelectionMask& mask, double tau2) {
    compensated_sum acc;
    for (std::size_t j = 0; j < ds.size(); ++j) {
        if (!mask.included[j]) continue;
        const SnpRecord& r = ds.records[j];
        double sg2 = r.se_gamma * r.se_gamma;
        double sG2 = r.se_Gamma * r.se_Gamma;
        double w2 = 1.0 / (sG2 * sG2);
        acc.add(w2 * (sg2 * r.Gamma_hat * r.Gamma_hat + (sG2 + tau2) * r.gamma_hat * r.gamma_hat -
                      (sG2 + tau2) * sg2));
    }
    return acc.value();
}

}  // namespace detail

// Classic inverse-variance weighted estimator with the fixed-effect
// meta-analysis standard error, se = sqrt(1 / sum w ghat^2).
inline Estimate ivw(const SummaryDataset& dataset, const SelectionMask& mask,
                    double conf_z = kZ95) {
    Moments m = compute_moments(dataset, mask);
    compensated_sum denom_acc;
    for (std::size_t j = 0; j < dataset.size(); ++j) {
        if (!mask.included[j]) continue;
        const SnpRecord& r = dataset.records[j];
        denom_acc.add(r.gamma_hat * r.gamma_hat / (r.se_Gamma * r.se_Gamma));
    }
    double denom = denom_acc.value();
    if (denom <= 0.0) {
        throw degenerate_denominator_error("IVW denominator is not positive");
    }
    Estimate e;
    e.method = Method::IVW;
    e.beta = m.theta1 / denom;
    e.se = std::sqrt(1.0 / denom);
    e.p_used = m.p_used;
    e.strength = iv_strength(dataset, mask);
    detail::finish_interval(e, conf_z);
    return e;
}

inline Estimate divw(const SummaryDataset& dataset, const SelectionMask& mask,
                     double conf_z = kZ95) {
    Moments m = compute_moments(dataset, mask);
    StrengthStats strength = iv_strength(dataset, mask);
    if (m.theta2 <= 0.0) {
        throw weak_instrument_error("dIVW denominator theta2 is not positive", m.theta2,
                                    strength.psi_hat);
    }
    Estimate e;
    e.method = Method::dIVW;
    e.beta = m.theta1 / m.theta2;
    e.se = std::sqrt(detail::variance_lead(dataset, mask, m.theta2, e.beta, 0.0));
    e.p_used = m.p_used;
    e.strength = strength;
    detail::finish_interval(e, conf_z);
    return e;
}

// tau2 estimate under balanced pleiotropy, evaluated at a given slope. The
// raw value may be negative; callers clamp to zero before using it inside a
// variance.
inline double tau_squared(const SummaryDataset& dataset, const SelectionMask& mask, double beta) {
    if (mask.included.size() != dataset.size()) {
        throw config_error("selection mask length does not match dataset");
    }
    if (mask.p_lambda_hat == 0) {
        throw empty_selection_error("no SNPs selected");
    }
    if (!std::isfinite(beta)) {
        throw config_error("tau_squared requires a finite beta");
    }
    compensated_sum num, den;
    for (std::size_t j = 0; j < dataset.size(); ++j) {
        if (!mask.included[j]) continue;
        const SnpRecord& r = dataset.records[j];
        double resid = r.Gamma_hat - beta * r.gamma_hat;
        double sg2 = r.se_gamma * r.se_gamma;
        double sG2 = r.se_Gamma * r.se_Gamma;
        double w = 1.0 / sG2;
        num.add((resid * resid - sG2 - beta * beta * sg2) * w);
        den.add(w);
    }
    return num.value() / den.value();
}

// The modified debiased IVW estimator: dIVW times the modification factor
//   1 - v2/theta2^2 + v12/(theta1 theta2),
// with the higher-order Delta correction in its variance. pleiotropy = true
// additionally estimates tau2 and switches to the tau-adjusted variance.
inline Estimate mdivw(const SummaryDataset& dataset, const SelectionMask& mask,
                      bool pleiotropy = false, double conf_z = kZ95) {
    Moments m = compute_moments(dataset, mask);
    StrengthStats strength = iv_strength(dataset, mask);
    if (m.theta2 <= 0.0) {
        throw weak_instrument_error("mdIVW denominator theta2 is not positive", m.theta2,
                                    strength.psi_hat);
    }
    if (m.theta1 == 0.0) {
        throw zero_numerator_error("mdIVW modification factor undefined: theta1 = 0");
    }
    Estimate e;
    e.method = Method::mdIVW;
    e.p_used = m.p_used;
    e.strength = strength;

    double factor = 1.0 - m.v2 / (m.theta2 * m.theta2) + m.v12 / (m.theta1 * m.theta2);
    e.beta = factor * (m.theta1 / m.theta2);

    double tau2_clamped = 0.0;
    double v1 = m.v1;
    if (pleiotropy) {
        double tau2_raw = tau_squared(dataset, mask, e.beta);
        e.tau2 = tau2_raw;
        tau2_clamped = std::max(0.0, tau2_raw);
        v1 = detail::v1_tau(dataset, mask, tau2_clamped);
    }
    double delta = detail::delta_hat(dataset, mask, m, v1, e.beta, tau2_clamped);
    double lead = detail::variance_lead(dataset, mask, m.theta2, e.beta, tau2_clamped);
    double t2sq = m.theta2 * m.theta2;
    double variance = lead - 2.0 * e.beta * e.beta / (t2sq * t2sq) * delta;
    if (variance <= 0.0) {
        // Delta is a higher-order term; at tiny psi_hat it can overwhelm the
        // leading term. Fall back to the dIVW-form variance at beta_mdIVW.
        variance = lead;
        e.warnings.push_back("variance correction exceeded leading term (Delta_hat = " +
                             std::to_string(delta) + "); dIVW-form variance used");
    }
    e.se = std::sqrt(variance);
    detail::finish_interval(e, conf_z);
    return e;
}

}  // namespace mdivw

#endif
