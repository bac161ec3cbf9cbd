#ifndef MDIVW_DIAGNOSTICS_HPP
#define MDIVW_DIAGNOSTICS_HPP

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include "mdivw/errors.hpp"
#include "mdivw/math.hpp"
#include "mdivw/selection.hpp"
#include "mdivw/summary_data.hpp"

namespace mdivw {

struct ResidualEntry {
    std::string snp_id;
    double residual = 0.0;
    double theoretical_quantile = 0.0;
};

// Standardized residuals sorted ascending, paired with standard normal
// quantiles at plotting positions (r - 0.5) / n.
struct ResidualSet {
    std::vector<ResidualEntry> entries;
};

// residual_j = (Gamma_hat - beta gamma_hat) / sqrt(se_Gamma^2 + beta^2 se_gamma^2 [+ tau2]).
// The tau2 term in the denominator is an optional extension, off by default.
inline ResidualSet standardized_residuals(const SummaryDataset& dataset,
                                          const SelectionMask& mask, double beta,
                                          double tau2 = 0.0) {
    if (mask.included.size() != dataset.size()) {
        throw config_error("selection mask length does not match dataset");
    }
    if (mask.p_lambda_hat == 0) {
        throw empty_selection_error("no SNPs selected");
    }
    if (!std::isfinite(beta)) {
        throw config_error("standardized_residuals requires a finite beta");
    }
    ResidualSet out;
    out.entries.reserve(mask.p_lambda_hat);
    for (std::size_t j = 0; j < dataset.size(); ++j) {
        if (!mask.included[j]) continue;
        const SnpRecord& r = dataset.records[j];
        double denom = std::sqrt(r.se_Gamma * r.se_Gamma + beta * beta * r.se_gamma * r.se_gamma +
                                 tau2);
        out.entries.push_back({r.snp_id, (r.Gamma_hat - beta * r.gamma_hat) / denom, 0.0});
    }
    std::sort(out.entries.begin(), out.entries.end(),
              [](const ResidualEntry& a, const ResidualEntry& b) { return a.residual < b.residual; });
    double n = static_cast<double>(out.entries.size());
    for (std::size_t r = 0; r < out.entries.size(); ++r) {
        out.entries[r].theoretical_quantile =
            normal_quantile((static_cast<double>(r) + 0.5) / n);
    }
    return out;
}

inline void write_residuals_csv(const ResidualSet& set, std::ostream& out) {
    out << "snp_id,residual,theoretical_quantile\n";
    char buf[256];
    for (const ResidualEntry& e : set.entries) {
        std::snprintf(buf, sizeof(buf), "%s,%.17g,%.17g", e.snp_id.c_str(), e.residual,
                      e.theoretical_quantile);
        out << buf << "\n";
    }
}

}  // namespace mdivw

#endif
