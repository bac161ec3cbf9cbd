#ifndef MDIVW_MOMENTS_HPP
#define MDIVW_MOMENTS_HPP

#include <cmath>
#include <cstddef>

#include "mdivw/errors.hpp"
#include "mdivw/math.hpp"
#include "mdivw/selection.hpp"
#include "mdivw/summary_data.hpp"

namespace mdivw {

// The five sums every estimator is built from, taken over the selected SNPs:
//   theta1 = sum se_Gamma^-2 gamma_hat Gamma_hat
//   theta2 = sum se_Gamma^-2 (gamma_hat^2 - se_gamma^2)
//   v1     = sum se_Gamma^-4 (se_gamma^2 Gamma_hat^2 + se_Gamma^2 gamma_hat^2
//                             - se_gamma^2 se_Gamma^2)
//   v2     = sum se_Gamma^-4 (4 se_gamma^2 gamma_hat^2 - 2 se_gamma^4)
//   v12    = 2 sum se_Gamma^-4 se_gamma^2 gamma_hat Gamma_hat
struct Moments {
    double theta1 = 0.0;
    double theta2 = 0.0;
    double v1 = 0.0;
    double v2 = 0.0;
    double v12 = 0.0;
    std::size_t p_used = 0;
};

// Average instrument strength and effective sample size. With lambda = 0
// these are the plain kappa_hat and psi_hat; with selection they are the
// screened versions over the p_lambda_hat surviving SNPs.
struct StrengthStats {
    double kappa_hat = 0.0;
    std::size_t p_selected = 0;
    double psi_hat = 0.0;
    double lambda = 0.0;
};

inline Moments compute_moments(const SummaryDataset& dataset, const SelectionMask& mask) {
    if (mask.included.size() != dataset.size()) {
        throw config_error("selection mask length does not match dataset");
    }
    if (mask.p_lambda_hat == 0) {
        throw empty_selection_error("no SNPs selected");
    }
    compensated_sum theta1, theta2, v1, v2, v12;
    Moments m;
    for (std::size_t j = 0; j < dataset.size(); ++j) {
        if (!mask.included[j]) continue;
        const SnpRecord& r = dataset.records[j];
        double g = r.gamma_hat;
        double G = r.Gamma_hat;
        double sg2 = r.se_gamma * r.se_gamma;
        double w = 1.0 / (r.se_Gamma * r.se_Gamma);
        double w2 = w * w;
        theta1.add(w * g * G);
        theta2.add(w * (g * g - sg2));
        v1.add(w2 * (sg2 * G * G + g * g / w - sg2 / w));
        v2.add(w2 * (4.0 * sg2 * g * g - 2.0 * sg2 * sg2));
        v12.add(2.0 * w2 * sg2 * g * G);
        ++m.p_used;
    }
    m.theta1 = theta1.value();
    m.theta2 = theta2.value();
    m.v1 = v1.value();
    m.v2 = v2.value();
    m.v12 = v12.value();
    return m;
}

// kappa_hat = (1/p_sel) sum se_gamma^-2 gamma_hat^2 - 1 over the selected
// SNPs; psi_hat = kappa_hat * sqrt(p_sel).
inline StrengthStats iv_strength(const SummaryDataset& dataset, const SelectionMask& mask) {
    if (mask.included.size() != dataset.size()) {
        throw config_error("selection mask length does not match dataset");
    }
    if (mask.p_lambda_hat == 0) {
        throw empty_selection_error("no SNPs selected");
    }
    compensated_sum acc;
    for (std::size_t j = 0; j < dataset.size(); ++j) {
        if (!mask.included[j]) continue;
        const SnpRecord& r = dataset.records[j];
        acc.add((r.gamma_hat * r.gamma_hat) / (r.se_gamma * r.se_gamma));
    }
    StrengthStats s;
    s.lambda = mask.lambda;
    s.p_selected = mask.p_lambda_hat;
    s.kappa_hat = acc.value() / static_cast<double>(s.p_selected) - 1.0;
    s.psi_hat = s.kappa_hat * std::sqrt(static_cast<double>(s.p_selected));
    return s;
}

}  // namespace mdivw

#endif
