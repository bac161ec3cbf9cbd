#ifndef MDIVW_SELECTION_HPP
#define MDIVW_SELECTION_HPP

#include <cmath>
#include <cstddef>
#include <vector>

#include "mdivw/errors.hpp"
#include "mdivw/summary_data.hpp"

namespace mdivw {

// Instrument screening mask. included[j] is the indicator
// |gamma_star_j| / se_gamma_star_j > lambda (strict; ties are excluded).
struct SelectionMask {
    double lambda = 0.0;
    std::vector<bool> included;
    std::size_t p_lambda_hat = 0;

    // lambda = 0: keep everything, no selection data needed.
    static SelectionMask all(std::size_t p) {
        SelectionMask m;
        m.included.assign(p, true);
        m.p_lambda_hat = p;
        return m;
    }
};

// Recommended screening threshold sqrt(2 log p); 0 for p = 1.
inline double default_lambda(std::size_t p) {
    if (p <= 1) return 0.0;
    return std::sqrt(2.0 * std::log(static_cast<double>(p)));
}

inline SelectionMask select_ivs(const SummaryDataset& dataset, double lambda) {
    if (lambda == 0.0) {
        return SelectionMask::all(dataset.size());
    }
    if (!dataset.has_selection) {
        throw missing_selection_data_error(
            "lambda > 0 requires selection-dataset columns (gamma_star, se_gamma_star)");
    }
    SelectionMask mask;
    mask.lambda = lambda;
    mask.included.reserve(dataset.size());
    for (const SnpRecord& r : dataset.records) {
        bool in = std::abs(*r.gamma_star) / *r.se_gamma_star > lambda;
        mask.included.push_back(in);
        if (in) ++mask.p_lambda_hat;
    }
    return mask;
}

}  // namespace mdivw

#endif
