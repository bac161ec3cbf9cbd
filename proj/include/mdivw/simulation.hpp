#ifndef MDIVW_SIMULATION_HPP
#define MDIVW_SIMULATION_HPP

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "mdivw/comparators.hpp"
#include "mdivw/errors.hpp"
#include "mdivw/estimators.hpp"
#include "mdivw/math.hpp"
#include "mdivw/selection.hpp"
#include "mdivw/summary_data.hpp"

namespace mdivw {

// One simulation scenario. Defaults follow the benchmark design: 1000
// candidate IVs, true effect 0.5, confounder and error variances 2.
struct SimConfig {
    std::size_t p = 1000;
    std::size_t s = 100;          // number of non-null IVs
    double sigma2 = 5e-4;         // variance of the non-null true effects
    double beta0 = 0.5;
    double tau0 = 0.0;            // pleiotropy SD
    std::size_t n_x = 150000;
    std::size_t n_y = 75000;
    double selection_fraction = 0.5;  // n_x(selection) / n_x
    double lambda = 0.0;          // 0 = no selection
    std::size_t reps = 1000;
    std::uint64_t seed = 0;

    double var_u = 2.0;
    double var_ex = 2.0;
    double var_ey = 2.0;
};

// Fixed per-scenario truth: drawn once, shared by every replication.
struct SimTruth {
    std::vector<double> gamma;
    std::vector<double> maf;
    std::vector<double> var_z;
    std::vector<double> se_gamma;
    std::vector<double> se_Gamma;
    std::vector<double> q_lambda;  // per-SNP selection probability
    double var_x = 0.0;
    double var_y = 0.0;
    double kappa = 0.0;       // population average IV strength
    double psi = 0.0;         // kappa * sqrt(p)
    double p_lambda = 0.0;    // sum of q_lambda
    double kappa_lambda = 0.0;
    double psi_lambda = 0.0;  // deflated by max(1, omega)
};

inline void check_config(const SimConfig& c) {
    if (c.p == 0) throw config_error("p must be >= 1");
    if (c.s > c.p) throw config_error("s must not exceed p");
    if (c.sigma2 <= 0.0) throw config_error("sigma2 must be positive");
    if (c.tau0 < 0.0) throw config_error("tau0 must be nonnegative");
    if (c.n_x == 0 || c.n_y == 0) throw config_error("sample sizes must be positive");
    if (c.selection_fraction <= 0.0 || c.selection_fraction > 1.0) {
        throw config_error("selection_fraction must be in (0, 1]");
    }
    if (c.lambda < 0.0) throw config_error("lambda must be nonnegative");
    if (c.reps == 0) throw config_error("reps must be >= 1");
}

// Draws the scenario truth: true effects for the first s SNPs, minor allele
// frequencies, and the per-SNP summary-statistic variances implied by the
// structural model. Var(Y) expands to
//   beta0^2 Var(X) + 2 beta0 Var(U) + tau0^2 sum Var(Z_j) + Var(U) + Var(E_Y)
// (the confounder enters both equations, so Cov(X, U) = Var(U)).
inline SimTruth build_truth(const SimConfig& config, std::mt19937_64& rng) {
    check_config(config);
    SimTruth t;
    t.gamma.assign(config.p, 0.0);
    std::normal_distribution<double> gamma_dist(0.0, std::sqrt(config.sigma2));
    for (std::size_t j = 0; j < config.s; ++j) t.gamma[j] = gamma_dist(rng);
    std::uniform_real_distribution<double> maf_dist(0.1, 0.5);
    t.maf.resize(config.p);
    t.var_z.resize(config.p);
    for (std::size_t j = 0; j < config.p; ++j) {
        t.maf[j] = maf_dist(rng);
        t.var_z[j] = 2.0 * t.maf[j] * (1.0 - t.maf[j]);
    }

    compensated_sum genetic_var, total_var_z;
    for (std::size_t j = 0; j < config.p; ++j) {
        genetic_var.add(t.gamma[j] * t.gamma[j] * t.var_z[j]);
        total_var_z.add(t.var_z[j]);
    }
    t.var_x = genetic_var.value() + config.var_u + config.var_ex;
    t.var_y = config.beta0 * config.beta0 * t.var_x + 2.0 * config.beta0 * config.var_u +
              config.tau0 * config.tau0 * total_var_z.value() + config.var_u + config.var_ey;

    t.se_gamma.resize(config.p);
    t.se_Gamma.resize(config.p);
    double nx = static_cast<double>(config.n_x);
    double ny = static_cast<double>(config.n_y);
    for (std::size_t j = 0; j < config.p; ++j) {
        double g2z = t.gamma[j] * t.gamma[j] * t.var_z[j];
        double vg = (t.var_x - g2z) / (nx * t.var_z[j]);
        double vG = (t.var_y - config.beta0 * config.beta0 * g2z) / (ny * t.var_z[j]);
        if (vg <= 0.0 || vG <= 0.0) {
            throw config_error("derived summary variance not positive for SNP " +
                               std::to_string(j + 1) + " (pathological configuration)");
        }
        t.se_gamma[j] = std::sqrt(vg);
        t.se_Gamma[j] = std::sqrt(vG);
    }

    compensated_sum strength;
    for (std::size_t j = 0; j < config.p; ++j) {
        strength.add(t.gamma[j] * t.gamma[j] / (t.se_gamma[j] * t.se_gamma[j]));
    }
    t.kappa = strength.value() / static_cast<double>(config.p);
    t.psi = t.kappa * std::sqrt(static_cast<double>(config.p));

    t.q_lambda.assign(config.p, 1.0);
    if (config.lambda > 0.0) {
        double root_frac = std::sqrt(config.selection_fraction);
        for (std::size_t j = 0; j < config.p; ++j) {
            double se_star = t.se_gamma[j] / root_frac;
            double z = t.gamma[j] / se_star;
            t.q_lambda[j] = normal_sf(config.lambda - z) + normal_cdf(-config.lambda - z);
        }
    }
    compensated_sum p_lam, strength_lam, omega_sum;
    for (std::size_t j = 0; j < config.p; ++j) {
        double q = t.q_lambda[j];
        p_lam.add(q);
        strength_lam.add(t.gamma[j] * t.gamma[j] / (t.se_gamma[j] * t.se_gamma[j]) * q);
        double g4 = t.gamma[j] * t.gamma[j] * t.gamma[j] * t.gamma[j];
        double w2 = 1.0 / (t.se_Gamma[j] * t.se_Gamma[j] * t.se_Gamma[j] * t.se_Gamma[j]);
        omega_sum.add(w2 * g4 * q * (1.0 - q));
    }
    t.p_lambda = p_lam.value();
    t.kappa_lambda = t.p_lambda > 0.0 ? strength_lam.value() / t.p_lambda : 0.0;
    double omega = t.p_lambda > 0.0 ? std::sqrt(omega_sum.value() / t.p_lambda) : 0.0;
    t.psi_lambda = t.kappa_lambda * std::sqrt(t.p_lambda) / std::max(1.0, omega);
    return t;
}

// One replication's summary dataset. Selection columns are drawn only when
// the scenario screens instruments (lambda > 0).
inline SummaryDataset draw_dataset(const SimTruth& truth, const SimConfig& config,
                                   std::mt19937_64& rng) {
    std::size_t p = truth.gamma.size();
    SummaryDataset ds;
    ds.has_selection = config.lambda > 0.0;
    ds.records.resize(p);
    std::normal_distribution<double> unit;
    std::normal_distribution<double> alpha_dist(0.0, config.tau0);
    double root_frac = std::sqrt(config.selection_fraction);
    char id[32];
    for (std::size_t j = 0; j < p; ++j) {
        SnpRecord& r = ds.records[j];
        std::snprintf(id, sizeof(id), "snp%zu", j + 1);
        r.snp_id = id;
        r.gamma_hat = truth.gamma[j] + truth.se_gamma[j] * unit(rng);
        r.se_gamma = truth.se_gamma[j];
        double alpha = config.tau0 > 0.0 ? alpha_dist(rng) : 0.0;
        r.Gamma_hat = config.beta0 * truth.gamma[j] + alpha + truth.se_Gamma[j] * unit(rng);
        r.se_Gamma = truth.se_Gamma[j];
        if (ds.has_selection) {
            double se_star = truth.se_gamma[j] / root_frac;
            r.gamma_star = truth.gamma[j] + se_star * unit(rng);
            r.se_gamma_star = se_star;
        }
    }
    return ds;
}

struct MethodRow {
    Method method = Method::IVW;
    bool pleiotropy_adjusted = false;
    double mean_psi_hat = 0.0;
    double relative_bias_pct = 0.0;
    double empirical_se = 0.0;
    double mean_estimated_se = 0.0;
    double mse = 0.0;
    double coverage_probability = 0.0;
    std::size_t n_used = 0;
    std::size_t n_excluded = 0;
    std::string error;  // set when every replication failed
};

struct MetricsTable {
    SimConfig scenario;
    SimTruth truth;  // kept for downstream checks against population values
    std::vector<MethodRow> rows;
    std::string error;  // set when the whole scenario failed (sweep use)
};

namespace detail {

struct RepResult {
    bool ok = false;
    double beta = 0.0;
    double se = 0.0;
    bool covered = false;
    double psi_hat = 0.0;
};

inline Estimate run_method(Method m, const SummaryDataset& ds, const SelectionMask& mask,
                           bool pleiotropy, std::uint64_t median_seed) {
    switch (m) {
        case Method::IVW: return ivw(ds, mask);
        case Method::dIVW: return divw(ds, mask);
        case Method::mdIVW: return mdivw(ds, mask, pleiotropy);
        case Method::Egger: return egger(ds, mask);
        case Method::WeightedMedian: return weighted_median(ds, mask, 200, median_seed);
    }
    throw config_error("unknown method");
}

}  // namespace detail

// Monte Carlo driver: fixes one truth for the scenario, then replicates the
// summary-data draws. Replications run on `threads` workers, each on its own
// seed substream writing to its own slot, so parallel and serial runs agree
// exactly. Replications where a method throws (e.g. degenerate theta2) are
// excluded from that method's row with the count reported.
inline MetricsTable run_monte_carlo(const SimConfig& config, const std::vector<Method>& methods,
                                    bool pleiotropy = false, unsigned threads = 1) {
    check_config(config);
    if (methods.empty()) throw config_error("methods list is empty");

    MetricsTable table;
    table.scenario = config;
    std::mt19937_64 truth_rng(substream_seed(config.seed, 0));
    table.truth = build_truth(config, truth_rng);

    std::size_t n_methods = methods.size();
    std::vector<std::vector<detail::RepResult>> results(
        n_methods, std::vector<detail::RepResult>(config.reps));

    auto worker = [&](std::size_t begin, std::size_t end) {
        for (std::size_t rep = begin; rep < end; ++rep) {
            std::mt19937_64 rng(substream_seed(config.seed, rep + 1));
            SummaryDataset ds = draw_dataset(table.truth, config, rng);
            SelectionMask mask;
            try {
                mask = select_ivs(ds, config.lambda);
            } catch (const error&) {
                continue;  // e.g. empty selection this replication
            }
            for (std::size_t mi = 0; mi < n_methods; ++mi) {
                try {
                    Estimate est = detail::run_method(methods[mi], ds, mask, pleiotropy,
                                                      substream_seed(config.seed, (rep + 1) << 20));
                    detail::RepResult& r = results[mi][rep];
                    r.ok = true;
                    r.beta = est.beta;
                    r.se = est.se;
                    r.covered = est.ci_lower <= config.beta0 && config.beta0 <= est.ci_upper;
                    r.psi_hat = est.strength.psi_hat;
                } catch (const error&) {
                    // excluded; counted below
                }
            }
        }
    };

    if (threads <= 1) {
        worker(0, config.reps);
    } else {
        std::vector<std::thread> pool;
        std::size_t chunk = (config.reps + threads - 1) / threads;
        for (unsigned tix = 0; tix < threads; ++tix) {
            std::size_t begin = tix * chunk;
            std::size_t end = std::min(config.reps, begin + chunk);
            if (begin >= end) break;
            pool.emplace_back(worker, begin, end);
        }
        for (std::thread& th : pool) th.join();
    }

    for (std::size_t mi = 0; mi < n_methods; ++mi) {
        MethodRow row;
        row.method = methods[mi];
        row.pleiotropy_adjusted = pleiotropy && methods[mi] == Method::mdIVW;
        compensated_sum sum_beta, sum_se, sum_psi, sum_sq_err;
        std::size_t used = 0, covered = 0;
        for (const detail::RepResult& r : results[mi]) {
            if (!r.ok) continue;
            ++used;
            sum_beta.add(r.beta);
            sum_se.add(r.se);
            sum_psi.add(r.psi_hat);
            sum_sq_err.add((r.beta - config.beta0) * (r.beta - config.beta0));
            if (r.covered) ++covered;
        }
        row.n_used = used;
        row.n_excluded = config.reps - used;
        if (used == 0) {
            row.error = "all replications failed";
            table.rows.push_back(row);
            continue;
        }
        double n = static_cast<double>(used);
        double mean_beta = sum_beta.value() / n;
        row.mean_psi_hat = sum_psi.value() / n;
        row.relative_bias_pct =
            config.beta0 != 0.0 ? 100.0 * (mean_beta - config.beta0) / config.beta0
                                : std::numeric_limits<double>::quiet_NaN();
        row.mean_estimated_se = sum_se.value() / n;
        row.mse = sum_sq_err.value() / n;
        row.coverage_probability = static_cast<double>(covered) / n;
        compensated_sum ss;
        for (const detail::RepResult& r : results[mi]) {
            if (r.ok) ss.add((r.beta - mean_beta) * (r.beta - mean_beta));
        }
        row.empirical_se = used > 1 ? std::sqrt(ss.value() / (n - 1.0)) : 0.0;
        table.rows.push_back(row);
    }
    return table;
}

// Runs every scenario in the grid; per-scenario failures are recorded in the
// table instead of aborting the sweep.
inline std::vector<MetricsTable> sweep(const std::vector<SimConfig>& grid,
                                       const std::vector<Method>& methods,
                                       bool pleiotropy = false, unsigned threads = 1) {
    if (grid.empty()) throw config_error("sweep grid is empty");
    if (methods.empty()) throw config_error("methods list is empty");
    std::vector<MetricsTable> out;
    out.reserve(grid.size());
    for (const SimConfig& config : grid) {
        try {
            out.push_back(run_monte_carlo(config, methods, pleiotropy, threads));
        } catch (const error& e) {
            MetricsTable t;
            t.scenario = config;
            t.error = e.what();
            out.push_back(std::move(t));
        }
    }
    return out;
}

inline void write_config_header(const SimConfig& c, std::ostream& out) {
    char buf[512];
    std::snprintf(buf, sizeof(buf),
                  "# p=%zu s=%zu sigma2=%.17g beta0=%.17g tau0=%.17g n_x=%zu n_y=%zu "
                  "selection_fraction=%.17g lambda=%.17g reps=%zu seed=%llu "
                  "var_u=%.17g var_ex=%.17g var_ey=%.17g",
                  c.p, c.s, c.sigma2, c.beta0, c.tau0, c.n_x, c.n_y, c.selection_fraction,
                  c.lambda, c.reps, static_cast<unsigned long long>(c.seed), c.var_u, c.var_ex,
                  c.var_ey);
    out << buf << "\n";
}

inline void write_metrics_csv(const MetricsTable& table, std::ostream& out) {
    write_config_header(table.scenario, out);
    out << "method,mean_psi_hat,relative_bias_pct,empirical_se,mean_estimated_se,mse,"
           "coverage_probability,n_used,n_excluded,error\n";
    char buf[512];
    for (const MethodRow& r : table.rows) {
        std::snprintf(buf, sizeof(buf), "%s%s,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%zu,%zu,%s",
                      method_name(r.method), r.pleiotropy_adjusted ? "_tau" : "", r.mean_psi_hat,
                      r.relative_bias_pct, r.empirical_se, r.mean_estimated_se, r.mse,
                      r.coverage_probability, r.n_used, r.n_excluded, r.error.c_str());
        out << buf << "\n";
    }
}

// Long format for plotting: one line per (scenario, method, metric).
inline void write_sweep_csv(const std::vector<MetricsTable>& tables, std::ostream& out) {
    out << "p,s,sigma2,beta0,tau0,n_x,n_y,selection_fraction,lambda,reps,seed,"
           "method,metric,value\n";
    char prefix[384];
    char buf[512];
    for (const MetricsTable& t : tables) {
        const SimConfig& c = t.scenario;
        std::snprintf(prefix, sizeof(prefix), "%zu,%zu,%.10g,%.10g,%.10g,%zu,%zu,%.10g,%.10g,%zu,%llu",
                      c.p, c.s, c.sigma2, c.beta0, c.tau0, c.n_x, c.n_y, c.selection_fraction,
                      c.lambda, c.reps, static_cast<unsigned long long>(c.seed));
        if (!t.error.empty()) {
            out << prefix << ",-,error,\"" << t.error << "\"\n";
            continue;
        }
        for (const MethodRow& r : t.rows) {
            const std::string name =
                std::string(method_name(r.method)) + (r.pleiotropy_adjusted ? "_tau" : "");
            auto emit = [&](const char* metric, double value) {
                std::snprintf(buf, sizeof(buf), "%s,%s,%s,%.10g", prefix, name.c_str(), metric,
                              value);
                out << buf << "\n";
            };
            emit("mean_psi_hat", r.mean_psi_hat);
            emit("relative_bias_pct", r.relative_bias_pct);
            emit("empirical_se", r.empirical_se);
            emit("mean_estimated_se", r.mean_estimated_se);
            emit("mse", r.mse);
            emit("coverage_probability", r.coverage_probability);
        }
    }
}

}  // namespace mdivw

#endif
