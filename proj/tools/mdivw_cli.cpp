// mdivw: two-sample summary-data MR estimation, simulation and diagnostics.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mdivw/mdivw.hpp"

namespace {

using nlohmann::json;

std::vector<mdivw::Method> parse_methods(const std::string& spec) {
    std::vector<mdivw::Method> out;
    std::stringstream ss(spec);
    std::string name;
    while (std::getline(ss, name, ',')) {
        if (name.empty()) continue;
        if (name == "all") {
            return {mdivw::Method::IVW, mdivw::Method::dIVW, mdivw::Method::mdIVW,
                    mdivw::Method::Egger, mdivw::Method::WeightedMedian};
        }
        if (name == "ivw") out.push_back(mdivw::Method::IVW);
        else if (name == "divw") out.push_back(mdivw::Method::dIVW);
        else if (name == "mdivw") out.push_back(mdivw::Method::mdIVW);
        else if (name == "egger") out.push_back(mdivw::Method::Egger);
        else if (name == "weighted_median" || name == "median") {
            out.push_back(mdivw::Method::WeightedMedian);
        } else {
            throw mdivw::config_error("unknown method '" + name +
                                      "' (expected ivw, divw, mdivw, egger, weighted_median)");
        }
    }
    if (out.empty()) throw mdivw::config_error("no methods requested");
    return out;
}

// --schema snp_id=rsid --schema beta=b --schema se=stderr
mdivw::ColumnSchema parse_schema(const std::vector<std::string>& pairs) {
    mdivw::ColumnSchema schema;
    for (const std::string& kv : pairs) {
        std::size_t eq = kv.find('=');
        if (eq == std::string::npos || eq == 0 || eq + 1 == kv.size()) {
            throw mdivw::config_error("--schema expects key=column, got '" + kv + "'");
        }
        std::string key = kv.substr(0, eq), col = kv.substr(eq + 1);
        if (key == "snp_id") schema.snp_id = col;
        else if (key == "beta") schema.beta = col;
        else if (key == "se") schema.se = col;
        else throw mdivw::config_error("unknown schema key '" + key + "'");
    }
    return schema;
}

// "auto" resolves against the post-join SNP count.
double resolve_lambda(const std::string& text, std::size_t p) {
    if (text == "auto") return mdivw::default_lambda(p);
    try {
        std::size_t pos = 0;
        double v = std::stod(text, &pos);
        if (pos != text.size()) throw std::invalid_argument(text);
        if (v < 0.0) throw mdivw::config_error("lambda must be nonnegative");
        return v;
    } catch (const std::invalid_argument&) {
        throw mdivw::config_error("--lambda expects a number or 'auto', got '" + text + "'");
    } catch (const std::out_of_range&) {
        throw mdivw::config_error("--lambda value out of range: '" + text + "'");
    }
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw mdivw::io_error("cannot open output file: " + path);
    return out;
}

struct AnalyzeRow {
    std::string method;
    double lambda = 0.0;
    std::size_t p_used = 0;
    double psi_hat = 0.0;
    bool ok = false;
    mdivw::Estimate est;
    std::string error;
};

struct AnalyzeOptions {
    std::string exposure, outcome;
    std::string selection;
    std::vector<std::string> schema_pairs;
    std::string methods = "ivw,divw,mdivw";
    std::string lambda = "0";
    bool pleiotropy = false;
    std::uint64_t seed = 0;
    std::size_t bootstrap_reps = 1000;
    std::string out_path;
    std::string format = "csv";
};

void analyze_block(const mdivw::SummaryDataset& ds, const std::vector<mdivw::Method>& methods,
                   double lambda, const AnalyzeOptions& opt, std::vector<AnalyzeRow>& rows) {
    mdivw::SelectionMask mask = mdivw::select_ivs(ds, lambda);
    for (mdivw::Method m : methods) {
        AnalyzeRow row;
        row.method = mdivw::method_name(m);
        row.lambda = lambda;
        try {
            switch (m) {
                case mdivw::Method::IVW: row.est = mdivw::ivw(ds, mask); break;
                case mdivw::Method::dIVW: row.est = mdivw::divw(ds, mask); break;
                case mdivw::Method::mdIVW: row.est = mdivw::mdivw(ds, mask, opt.pleiotropy); break;
                case mdivw::Method::Egger: row.est = mdivw::egger(ds, mask); break;
                case mdivw::Method::WeightedMedian:
                    row.est = mdivw::weighted_median(ds, mask, opt.bootstrap_reps, opt.seed);
                    break;
            }
            row.ok = true;
            row.p_used = row.est.p_used;
            row.psi_hat = row.est.strength.psi_hat;
        } catch (const mdivw::error& e) {
            row.error = e.what();
            row.p_used = mask.p_lambda_hat;
        }
        rows.push_back(row);
    }
}

void write_analyze_csv(const AnalyzeOptions& opt, double resolved_lambda,
                       const std::vector<AnalyzeRow>& rows, std::ostream& out) {
    out << "# command=analyze exposure=" << opt.exposure << " outcome=" << opt.outcome
        << " selection=" << (opt.selection.empty() ? "-" : opt.selection)
        << " methods=" << opt.methods << " lambda=" << resolved_lambda
        << " pleiotropy=" << (opt.pleiotropy ? 1 : 0) << " seed=" << opt.seed
        << " bootstrap_reps=" << opt.bootstrap_reps << "\n";
    out << "method,lambda,p_used,psi_hat,beta,se,ci_lower,ci_upper,tau2,error\n";
    char buf[512];
    for (const AnalyzeRow& r : rows) {
        if (r.ok) {
            std::string tau2 = r.est.tau2 ? [&] {
                char t[64];
                std::snprintf(t, sizeof(t), "%.10g", *r.est.tau2);
                return std::string(t);
            }() : std::string();
            std::snprintf(buf, sizeof(buf), "%s,%.10g,%zu,%.10g,%.10g,%.10g,%.10g,%.10g,%s,",
                          r.method.c_str(), r.lambda, r.p_used, r.psi_hat, r.est.beta, r.est.se,
                          r.est.ci_lower, r.est.ci_upper, tau2.c_str());
            out << buf << "\n";
        } else {
            std::snprintf(buf, sizeof(buf), "%s,%.10g,%zu,,,,,,,\"%s\"", r.method.c_str(),
                          r.lambda, r.p_used, r.error.c_str());
            out << buf << "\n";
        }
    }
}

json analyze_json(const AnalyzeOptions& opt, double resolved_lambda,
                  const std::vector<AnalyzeRow>& rows) {
    json cfg = {{"command", "analyze"},
                {"exposure", opt.exposure},
                {"outcome", opt.outcome},
                {"selection", opt.selection},
                {"methods", opt.methods},
                {"lambda", resolved_lambda},
                {"pleiotropy", opt.pleiotropy},
                {"seed", opt.seed},
                {"bootstrap_reps", opt.bootstrap_reps}};
    json results = json::array();
    for (const AnalyzeRow& r : rows) {
        json row = {{"method", r.method}, {"lambda", r.lambda}, {"p_used", r.p_used}};
        if (r.ok) {
            row["psi_hat"] = r.psi_hat;
            row["beta"] = r.est.beta;
            row["se"] = r.est.se;
            row["ci_lower"] = r.est.ci_lower;
            row["ci_upper"] = r.est.ci_upper;
            if (r.est.tau2) row["tau2"] = *r.est.tau2;
            if (!r.est.warnings.empty()) row["warnings"] = r.est.warnings;
        } else {
            row["error"] = r.error;
        }
        results.push_back(row);
    }
    return json{{"config", cfg}, {"results", results}};
}

int cmd_analyze(const AnalyzeOptions& opt) {
    std::vector<mdivw::Method> methods = parse_methods(opt.methods);
    mdivw::ColumnSchema schema = parse_schema(opt.schema_pairs);
    std::optional<std::string> selection;
    if (!opt.selection.empty()) selection = opt.selection;

    mdivw::LoadSummary load;
    mdivw::SummaryDataset ds =
        mdivw::load_dataset(opt.exposure, opt.outcome, selection, schema, &load);
    for (const mdivw::DroppedSnp& d : load.dropped) {
        std::cerr << "note: dropped SNP '" << d.snp_id << "': " << d.reason << "\n";
    }
    mdivw::ValidationReport report = mdivw::validate(ds);
    for (const mdivw::ValidationIssue& w : report.warnings) {
        std::cerr << "warning: SNP '" << w.snp_id << "': " << w.message << "\n";
    }
    if (!report.ok()) {
        for (const mdivw::ValidationIssue& v : report.violations) {
            std::cerr << "error: SNP '" << v.snp_id << "': " << v.message << "\n";
        }
        return 1;
    }

    double lambda = resolve_lambda(opt.lambda, ds.size());
    if (lambda > 0.0 && !ds.has_selection) {
        throw mdivw::missing_selection_data_error(
            "lambda > 0 requires a selection file (--selection)");
    }

    std::vector<AnalyzeRow> rows;
    if (lambda > 0.0) {
        analyze_block(ds, methods, 0.0, opt, rows);
        analyze_block(ds, methods, lambda, opt, rows);
    } else {
        analyze_block(ds, methods, 0.0, opt, rows);
    }

    bool any_ok = false;
    for (const AnalyzeRow& r : rows) any_ok = any_ok || r.ok;

    if (opt.format == "json") {
        json doc = analyze_json(opt, lambda, rows);
        if (opt.out_path.empty()) {
            std::cout << doc.dump(2) << "\n";
        } else {
            open_out(opt.out_path) << doc.dump(2) << "\n";
        }
    } else {
        if (opt.out_path.empty()) {
            write_analyze_csv(opt, lambda, rows, std::cout);
        } else {
            std::ofstream out = open_out(opt.out_path);
            write_analyze_csv(opt, lambda, rows, out);
        }
    }
    return any_ok ? 0 : 1;
}

json metrics_json(const mdivw::MetricsTable& table) {
    const mdivw::SimConfig& c = table.scenario;
    json cfg = {{"p", c.p},
                {"s", c.s},
                {"sigma2", c.sigma2},
                {"beta0", c.beta0},
                {"tau0", c.tau0},
                {"n_x", c.n_x},
                {"n_y", c.n_y},
                {"selection_fraction", c.selection_fraction},
                {"lambda", c.lambda},
                {"reps", c.reps},
                {"seed", c.seed},
                {"var_u", c.var_u},
                {"var_ex", c.var_ex},
                {"var_ey", c.var_ey}};
    json truth = {{"kappa", table.truth.kappa},
                  {"psi", table.truth.psi},
                  {"p_lambda", table.truth.p_lambda},
                  {"kappa_lambda", table.truth.kappa_lambda},
                  {"psi_lambda", table.truth.psi_lambda}};
    json rows = json::array();
    for (const mdivw::MethodRow& r : table.rows) {
        json row = {{"method", std::string(mdivw::method_name(r.method)) +
                                   (r.pleiotropy_adjusted ? "_tau" : "")},
                    {"n_used", r.n_used},
                    {"n_excluded", r.n_excluded}};
        if (r.error.empty()) {
            row["mean_psi_hat"] = r.mean_psi_hat;
            row["relative_bias_pct"] = r.relative_bias_pct;
            row["empirical_se"] = r.empirical_se;
            row["mean_estimated_se"] = r.mean_estimated_se;
            row["mse"] = r.mse;
            row["coverage_probability"] = r.coverage_probability;
        } else {
            row["error"] = r.error;
        }
        rows.push_back(row);
    }
    json doc = {{"config", cfg}, {"truth", truth}, {"rows", rows}};
    if (!table.error.empty()) doc["error"] = table.error;
    return doc;
}

struct SimulateOptions {
    mdivw::SimConfig config;
    std::string lambda = "0";
    std::string methods = "ivw,divw,mdivw";
    bool pleiotropy = false;
    unsigned threads = 1;
    std::string out_path;
    std::string format = "csv";
};

int cmd_simulate(const SimulateOptions& opt) {
    SimulateOptions o = opt;
    o.config.lambda = resolve_lambda(opt.lambda, o.config.p);
    std::vector<mdivw::Method> methods = parse_methods(o.methods);
    mdivw::MetricsTable table =
        mdivw::run_monte_carlo(o.config, methods, o.pleiotropy, o.threads);
    if (o.format == "json") {
        json doc = metrics_json(table);
        if (o.out_path.empty()) std::cout << doc.dump(2) << "\n";
        else open_out(o.out_path) << doc.dump(2) << "\n";
    } else {
        if (o.out_path.empty()) {
            mdivw::write_metrics_csv(table, std::cout);
        } else {
            std::ofstream out = open_out(o.out_path);
            mdivw::write_metrics_csv(table, out);
        }
    }
    for (const mdivw::MethodRow& r : table.rows) {
        if (!r.error.empty()) return 1;
    }
    return 0;
}

struct SweepOptions {
    mdivw::SimConfig base;
    std::vector<std::size_t> s_values;
    std::vector<double> sigma2_values;
    std::vector<std::size_t> n_x_values;
    std::string lambda = "0";
    std::string methods = "divw,mdivw";
    bool pleiotropy = false;
    unsigned threads = 1;
    std::string out_path;
    std::string format = "csv";
};

int cmd_sweep(const SweepOptions& opt) {
    std::vector<mdivw::Method> methods = parse_methods(opt.methods);
    double lambda = resolve_lambda(opt.lambda, opt.base.p);
    std::vector<std::size_t> s_list = opt.s_values.empty()
                                          ? std::vector<std::size_t>{opt.base.s}
                                          : opt.s_values;
    std::vector<double> sigma2_list =
        opt.sigma2_values.empty() ? std::vector<double>{opt.base.sigma2} : opt.sigma2_values;
    std::vector<std::size_t> n_x_list =
        opt.n_x_values.empty() ? std::vector<std::size_t>{opt.base.n_x} : opt.n_x_values;

    std::vector<mdivw::SimConfig> grid;
    std::uint64_t index = 0;
    for (std::size_t s : s_list) {
        for (double sigma2 : sigma2_list) {
            for (std::size_t n_x : n_x_list) {
                mdivw::SimConfig c = opt.base;
                c.s = s;
                c.sigma2 = sigma2;
                c.n_x = n_x;
                c.lambda = lambda;
                c.seed = mdivw::substream_seed(opt.base.seed, 0x5eedULL + index++);
                grid.push_back(c);
            }
        }
    }
    std::vector<mdivw::MetricsTable> tables =
        mdivw::sweep(grid, methods, opt.pleiotropy, opt.threads);
    if (opt.format == "json") {
        json doc = json::array();
        for (const mdivw::MetricsTable& t : tables) doc.push_back(metrics_json(t));
        if (opt.out_path.empty()) std::cout << doc.dump(2) << "\n";
        else open_out(opt.out_path) << doc.dump(2) << "\n";
    } else {
        if (opt.out_path.empty()) {
            mdivw::write_sweep_csv(tables, std::cout);
        } else {
            std::ofstream out = open_out(opt.out_path);
            mdivw::write_sweep_csv(tables, out);
        }
    }
    for (const mdivw::MetricsTable& t : tables) {
        if (!t.error.empty()) return 1;
    }
    return 0;
}

struct DiagnoseOptions {
    std::string exposure, outcome;
    std::string selection;
    std::vector<std::string> schema_pairs;
    std::string lambda = "0";
    std::string method = "mdivw";
    double beta = std::numeric_limits<double>::quiet_NaN();
    bool beta_given = false;
    bool pleiotropy = false;
    bool include_tau2 = false;
    std::uint64_t seed = 0;
    std::string out_path;
};

int cmd_diagnose(const DiagnoseOptions& opt) {
    mdivw::ColumnSchema schema = parse_schema(opt.schema_pairs);
    std::optional<std::string> selection;
    if (!opt.selection.empty()) selection = opt.selection;
    mdivw::SummaryDataset ds = mdivw::load_dataset(opt.exposure, opt.outcome, selection, schema);
    double lambda = resolve_lambda(opt.lambda, ds.size());
    mdivw::SelectionMask mask = mdivw::select_ivs(ds, lambda);

    double beta;
    double tau2 = 0.0;
    if (opt.beta_given) {
        beta = opt.beta;
    } else {
        std::vector<mdivw::Method> methods = parse_methods(opt.method);
        if (methods.size() != 1) throw mdivw::config_error("--method expects one method");
        mdivw::Estimate est;
        switch (methods[0]) {
            case mdivw::Method::IVW: est = mdivw::ivw(ds, mask); break;
            case mdivw::Method::dIVW: est = mdivw::divw(ds, mask); break;
            case mdivw::Method::mdIVW: est = mdivw::mdivw(ds, mask, opt.pleiotropy); break;
            case mdivw::Method::Egger: est = mdivw::egger(ds, mask); break;
            case mdivw::Method::WeightedMedian:
                est = mdivw::weighted_median(ds, mask, 1000, opt.seed);
                break;
        }
        beta = est.beta;
        if (opt.include_tau2 && est.tau2) tau2 = std::max(0.0, *est.tau2);
    }
    mdivw::ResidualSet residuals = mdivw::standardized_residuals(ds, mask, beta, tau2);

    mdivw::compensated_sum sum, sum_sq;
    for (const mdivw::ResidualEntry& e : residuals.entries) {
        sum.add(e.residual);
        sum_sq.add(e.residual * e.residual);
    }
    double n = static_cast<double>(residuals.entries.size());
    double mean = sum.value() / n;
    double var = n > 1 ? (sum_sq.value() - n * mean * mean) / (n - 1.0) : 0.0;

    auto emit = [&](std::ostream& out) {
        out << "# command=diagnose exposure=" << opt.exposure << " outcome=" << opt.outcome
            << " selection=" << (opt.selection.empty() ? "-" : opt.selection)
            << " lambda=" << lambda << " beta=" << beta << " tau2=" << tau2 << "\n";
        mdivw::write_residuals_csv(residuals, out);
    };
    if (opt.out_path.empty()) {
        emit(std::cout);
    } else {
        std::ofstream out = open_out(opt.out_path);
        emit(out);
    }
    char line[160];
    std::snprintf(line, sizeof(line), "residual mean = %.6g, variance = %.6g (n = %zu)", mean,
                  var, residuals.entries.size());
    std::cerr << line << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Modified debiased IVW estimation for two-sample summary-data MR"};
    app.require_subcommand(1);
    app.set_config("--config")->configurable(false);

    AnalyzeOptions an;
    CLI::App* analyze = app.add_subcommand("analyze", "Estimate causal effects from summary files");
    analyze->add_option("--exposure", an.exposure, "Exposure GWAS file (csv/tsv)")->required();
    analyze->add_option("--outcome", an.outcome, "Outcome GWAS file")->required();
    analyze->add_option("--selection", an.selection, "Independent selection GWAS file");
    analyze->add_option("--schema", an.schema_pairs,
                        "Column mapping key=column (keys: snp_id, beta, se)");
    analyze->add_option("--methods", an.methods, "Comma list: ivw,divw,mdivw,egger,weighted_median,all");
    analyze->add_option("--lambda", an.lambda, "Selection threshold (number or 'auto')");
    analyze->add_flag("--pleiotropy", an.pleiotropy, "Pleiotropy-adjusted mdIVW variance");
    analyze->add_option("--seed", an.seed, "Seed for the weighted-median bootstrap");
    analyze->add_option("--bootstrap-reps", an.bootstrap_reps, "Weighted-median bootstrap size");
    analyze->add_option("--out", an.out_path, "Output path (default stdout)");
    analyze->add_option("--format", an.format, "csv or json")
        ->check(CLI::IsMember({"csv", "json"}));

    SimulateOptions si;
    CLI::App* simulate = app.add_subcommand("simulate", "Monte Carlo benchmark of one scenario");
    simulate->add_option("--p", si.config.p, "Number of candidate SNPs");
    simulate->add_option("--s", si.config.s, "Number of non-null SNPs");
    simulate->add_option("--sigma2", si.config.sigma2, "Variance of true effects");
    simulate->add_option("--beta0", si.config.beta0, "True causal effect");
    simulate->add_option("--tau0", si.config.tau0, "Pleiotropy SD");
    simulate->add_option("--n-x", si.config.n_x, "Exposure sample size");
    simulate->add_option("--n-y", si.config.n_y, "Outcome sample size");
    simulate->add_option("--selection-fraction", si.config.selection_fraction,
                         "Selection-sample fraction of n_x");
    simulate->add_option("--lambda", si.lambda, "Selection threshold (number or 'auto')");
    simulate->add_option("--reps", si.config.reps, "Replications");
    simulate->add_option("--seed", si.config.seed, "Master seed");
    simulate->add_option("--methods", si.methods, "Comma list of methods");
    simulate->add_flag("--pleiotropy", si.pleiotropy, "Pleiotropy-adjusted mdIVW");
    simulate->add_option("--threads", si.threads, "Worker threads");
    simulate->add_option("--out", si.out_path, "Output path (default stdout)");
    simulate->add_option("--format", si.format, "csv or json")
        ->check(CLI::IsMember({"csv", "json"}));

    SweepOptions sw;
    CLI::App* sweep_cmd = app.add_subcommand("sweep", "Monte Carlo over a scenario grid");
    sweep_cmd->add_option("--p", sw.base.p, "Number of candidate SNPs");
    sweep_cmd->add_option("--s", sw.s_values, "Grid values for s");
    sweep_cmd->add_option("--sigma2", sw.sigma2_values, "Grid values for sigma2");
    sweep_cmd->add_option("--n-x", sw.n_x_values, "Grid values for n_x");
    sweep_cmd->add_option("--beta0", sw.base.beta0, "True causal effect");
    sweep_cmd->add_option("--tau0", sw.base.tau0, "Pleiotropy SD");
    sweep_cmd->add_option("--n-y", sw.base.n_y, "Outcome sample size");
    sweep_cmd->add_option("--selection-fraction", sw.base.selection_fraction,
                          "Selection-sample fraction of n_x");
    sweep_cmd->add_option("--lambda", sw.lambda, "Selection threshold (number or 'auto')");
    sweep_cmd->add_option("--reps", sw.base.reps, "Replications per scenario");
    sweep_cmd->add_option("--seed", sw.base.seed, "Master seed");
    sweep_cmd->add_option("--methods", sw.methods, "Comma list of methods");
    sweep_cmd->add_flag("--pleiotropy", sw.pleiotropy, "Pleiotropy-adjusted mdIVW");
    sweep_cmd->add_option("--threads", sw.threads, "Worker threads");
    sweep_cmd->add_option("--out", sw.out_path, "Output path (default stdout)");
    sweep_cmd->add_option("--format", sw.format, "csv or json")
        ->check(CLI::IsMember({"csv", "json"}));

    DiagnoseOptions di;
    CLI::App* diagnose = app.add_subcommand("diagnose", "Standardized residual QQ data");
    diagnose->add_option("--exposure", di.exposure, "Exposure GWAS file")->required();
    diagnose->add_option("--outcome", di.outcome, "Outcome GWAS file")->required();
    diagnose->add_option("--selection", di.selection, "Independent selection GWAS file");
    diagnose->add_option("--schema", di.schema_pairs, "Column mapping key=column");
    diagnose->add_option("--lambda", di.lambda, "Selection threshold (number or 'auto')");
    diagnose->add_option("--method", di.method, "Method supplying beta (default mdivw)");
    CLI::Option* beta_opt = diagnose->add_option("--beta", di.beta, "Explicit slope, overrides --method");
    diagnose->add_flag("--pleiotropy", di.pleiotropy, "Pleiotropy-adjusted mdIVW");
    diagnose->add_flag("--include-tau2", di.include_tau2,
                       "Add the estimated tau2 to the residual denominator");
    diagnose->add_option("--seed", di.seed, "Seed for the weighted-median bootstrap");
    diagnose->add_option("--out", di.out_path, "Output path (default stdout)");

    CLI11_PARSE(app, argc, argv);
    di.beta_given = beta_opt->count() > 0;

    try {
        if (analyze->parsed()) return cmd_analyze(an);
        if (simulate->parsed()) return cmd_simulate(si);
        if (sweep_cmd->parsed()) return cmd_sweep(sw);
        if (diagnose->parsed()) return cmd_diagnose(di);
    } catch (const mdivw::error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
