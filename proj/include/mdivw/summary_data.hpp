#ifndef MDIVW_SUMMARY_DATA_HPP
#define MDIVW_SUMMARY_DATA_HPP

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "mdivw/errors.hpp"

namespace mdivw {

// Per-SNP summary statistics after joining the exposure, outcome and
// (optionally) selection files. gamma_hat/se_gamma come from the exposure
// GWAS, Gamma_hat/se_Gamma from the outcome GWAS, gamma_star/se_gamma_star
// from the independent selection GWAS.
struct SnpRecord {
    std::string snp_id;
    double gamma_hat = 0.0;
    double se_gamma = 0.0;
    double Gamma_hat = 0.0;
    double se_Gamma = 0.0;
    std::optional<double> gamma_star;
    std::optional<double> se_gamma_star;
};

struct SummaryDataset {
    std::vector<SnpRecord> records;
    bool has_selection = false;

    std::size_t size() const { return records.size(); }
};

// Maps the caller's column names onto {snp_id, beta, se}. The same schema is
// applied to every input file.
struct ColumnSchema {
    std::string snp_id = "snp_id";
    std::string beta = "beta";
    std::string se = "se";
};

struct DroppedSnp {
    std::string snp_id;
    std::string reason;
};

struct LoadSummary {
    std::size_t n_exposure = 0;
    std::size_t n_outcome = 0;
    std::size_t n_selection = 0;  // 0 when no selection file given
    std::size_t n_joined = 0;
    std::vector<DroppedSnp> dropped;
};

struct ValidationIssue {
    std::string snp_id;
    std::string message;
};

struct ValidationReport {
    std::vector<ValidationIssue> violations;
    std::vector<ValidationIssue> warnings;

    bool ok() const { return violations.empty(); }
};

namespace detail {

struct ParsedFile {
    // snp_id -> (beta, se), insertion order kept separately
    std::vector<std::string> order;
    std::unordered_map<std::string, std::pair<double, double>> rows;
};

inline std::vector<std::string> split_line(const std::string& line, char delim) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, delim)) {
        // strip surrounding whitespace and a possible trailing CR
        std::size_t b = field.find_first_not_of(" \t\r");
        std::size_t e = field.find_last_not_of(" \t\r");
        out.push_back(b == std::string::npos ? std::string() : field.substr(b, e - b + 1));
    }
    return out;
}

inline double parse_number(const std::string& cell, const std::string& snp,
                           const std::string& column, const std::string& path) {
    const char* s = cell.c_str();
    char* end = nullptr;
    double v = std::strtod(s, &end);
    if (end == s || *end != '\0') {
        throw parse_error("non-numeric value '" + cell + "' in column '" + column +
                          "' for SNP '" + snp + "' in " + path);
    }
    if (!std::isfinite(v)) {
        throw parse_error("non-finite value in column '" + column + "' for SNP '" + snp +
                          "' in " + path);
    }
    return v;
}

inline ParsedFile read_stats_file(const std::string& path, const ColumnSchema& schema) {
    std::ifstream in(path);
    if (!in) {
        throw io_error("cannot open file: " + path);
    }
    std::string header;
    if (!std::getline(in, header)) {
        throw io_error("empty file: " + path);
    }
    char delim = header.find('\t') != std::string::npos ? '\t' : ',';
    std::vector<std::string> cols = split_line(header, delim);
    auto find_col = [&](const std::string& name) -> std::size_t {
        for (std::size_t i = 0; i < cols.size(); ++i) {
            if (cols[i] == name) return i;
        }
        throw schema_error("column '" + name + "' not found in header of " + path);
    };
    std::size_t id_col = find_col(schema.snp_id);
    std::size_t beta_col = find_col(schema.beta);
    std::size_t se_col = find_col(schema.se);

    ParsedFile out;
    std::string line;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        std::vector<std::string> fields = split_line(line, delim);
        std::size_t needed = std::max({id_col, beta_col, se_col});
        if (fields.size() <= needed) {
            throw parse_error("line " + std::to_string(lineno) + " of " + path +
                              " has too few columns");
        }
        const std::string& snp = fields[id_col];
        if (snp.empty()) {
            throw parse_error("empty SNP id at line " + std::to_string(lineno) + " of " + path);
        }
        double beta = parse_number(fields[beta_col], snp, schema.beta, path);
        double se = parse_number(fields[se_col], snp, schema.se, path);
        if (se <= 0.0) {
            throw parse_error("non-positive standard error in column '" + schema.se +
                              "' for SNP '" + snp + "' in " + path);
        }
        if (!out.rows.emplace(snp, std::make_pair(beta, se)).second) {
            throw parse_error("duplicate SNP id '" + snp + "' in " + path);
        }
        out.order.push_back(snp);
    }
    return out;
}

}  // namespace detail

// Joins the exposure, outcome and optional selection files on snp_id,
// keeping exposure-file order. Every SNP that does not appear in all
// provided files is reported in the summary with a reason; nothing is
// dropped silently.
inline SummaryDataset load_dataset(const std::string& exposure_path,
                                   const std::string& outcome_path,
                                   const std::optional<std::string>& selection_path,
                                   const ColumnSchema& schema, LoadSummary* summary = nullptr) {
    detail::ParsedFile exposure = detail::read_stats_file(exposure_path, schema);
    detail::ParsedFile outcome = detail::read_stats_file(outcome_path, schema);
    std::optional<detail::ParsedFile> selection;
    if (selection_path) {
        selection = detail::read_stats_file(*selection_path, schema);
    }

    LoadSummary local;
    local.n_exposure = exposure.order.size();
    local.n_outcome = outcome.order.size();
    local.n_selection = selection ? selection->order.size() : 0;

    SummaryDataset ds;
    ds.has_selection = selection.has_value();
    for (const std::string& snp : exposure.order) {
        auto out_it = outcome.rows.find(snp);
        if (out_it == outcome.rows.end()) {
            local.dropped.push_back({snp, "absent from outcome file"});
            continue;
        }
        const std::pair<double, double>* sel = nullptr;
        if (selection) {
            auto sel_it = selection->rows.find(snp);
            if (sel_it == selection->rows.end()) {
                local.dropped.push_back({snp, "absent from selection file"});
                continue;
            }
            sel = &sel_it->second;
        }
        SnpRecord rec;
        rec.snp_id = snp;
        rec.gamma_hat = exposure.rows.at(snp).first;
        rec.se_gamma = exposure.rows.at(snp).second;
        rec.Gamma_hat = out_it->second.first;
        rec.se_Gamma = out_it->second.second;
        if (sel) {
            rec.gamma_star = sel->first;
            rec.se_gamma_star = sel->second;
        }
        ds.records.push_back(std::move(rec));
    }
    for (const std::string& snp : outcome.order) {
        if (exposure.rows.find(snp) == exposure.rows.end()) {
            local.dropped.push_back({snp, "absent from exposure file"});
        }
    }
    if (selection) {
        for (const std::string& snp : selection->order) {
            if (exposure.rows.find(snp) == exposure.rows.end()) {
                local.dropped.push_back({snp, "absent from exposure file"});
            }
        }
    }
    local.n_joined = ds.records.size();
    if (summary) *summary = local;
    if (ds.records.empty()) {
        throw empty_join_error("no SNPs shared by all input files");
    }
    return ds;
}

// Report-only invariant check; never throws and never mutates the dataset.
// Variance ratios se_gamma^2 / se_Gamma^2 outside [1e-6, 1e6] get a warning
// because they strain the bounded-variance-ratio assumption.
inline ValidationReport validate(const SummaryDataset& dataset) {
    ValidationReport report;
    std::unordered_map<std::string, int> seen;
    for (const SnpRecord& r : dataset.records) {
        if (++seen[r.snp_id] == 2) {
            report.violations.push_back({r.snp_id, "duplicate snp_id"});
        }
        auto finite = [&](double v, const char* name) {
            if (!std::isfinite(v)) {
                report.violations.push_back({r.snp_id, std::string("non-finite ") + name});
            }
        };
        finite(r.gamma_hat, "gamma_hat");
        finite(r.se_gamma, "se_gamma");
        finite(r.Gamma_hat, "Gamma_hat");
        finite(r.se_Gamma, "se_Gamma");
        if (r.se_gamma <= 0.0) report.violations.push_back({r.snp_id, "se_gamma <= 0"});
        if (r.se_Gamma <= 0.0) report.violations.push_back({r.snp_id, "se_Gamma <= 0"});
        if (r.gamma_star.has_value() != r.se_gamma_star.has_value()) {
            report.violations.push_back({r.snp_id, "selection fields must be present together"});
        }
        if (r.gamma_star) finite(*r.gamma_star, "gamma_star");
        if (r.se_gamma_star) {
            finite(*r.se_gamma_star, "se_gamma_star");
            if (*r.se_gamma_star <= 0.0) {
                report.violations.push_back({r.snp_id, "se_gamma_star <= 0"});
            }
        }
        if (dataset.has_selection && !r.gamma_star) {
            report.violations.push_back({r.snp_id, "has_selection set but selection fields missing"});
        }
        if (r.se_gamma > 0.0 && r.se_Gamma > 0.0) {
            double ratio = (r.se_gamma * r.se_gamma) / (r.se_Gamma * r.se_Gamma);
            if (ratio < 1e-6 || ratio > 1e6) {
                std::ostringstream msg;
                msg << "variance ratio " << ratio << " outside [1e-6, 1e6]";
                report.warnings.push_back({r.snp_id, msg.str()});
            }
        }
    }
    if (dataset.records.empty()) {
        report.violations.push_back({"", "dataset is empty"});
    }
    return report;
}

// Canonical on-disk format: TSV with a fixed header, full round-trip
// precision.
inline void write_dataset(const SummaryDataset& dataset, std::ostream& out) {
    out << "snp_id\tgamma_hat\tse_gamma\tGamma_hat\tse_Gamma";
    if (dataset.has_selection) out << "\tgamma_star\tse_gamma_star";
    out << "\n";
    char buf[512];
    for (const SnpRecord& r : dataset.records) {
        if (dataset.has_selection) {
            std::snprintf(buf, sizeof(buf), "%s\t%.17g\t%.17g\t%.17g\t%.17g\t%.17g\t%.17g",
                          r.snp_id.c_str(), r.gamma_hat, r.se_gamma, r.Gamma_hat, r.se_Gamma,
                          r.gamma_star.value(), r.se_gamma_star.value());
        } else {
            std::snprintf(buf, sizeof(buf), "%s\t%.17g\t%.17g\t%.17g\t%.17g", r.snp_id.c_str(),
                          r.gamma_hat, r.se_gamma, r.Gamma_hat, r.se_Gamma);
        }
        out << buf << "\n";
    }
}

inline void write_dataset(const SummaryDataset& dataset, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw io_error("cannot open file for writing: " + path);
    write_dataset(dataset, out);
}

// Reads a file produced by write_dataset.
inline SummaryDataset read_dataset(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open file: " + path);
    std::string header;
    if (!std::getline(in, header)) throw io_error("empty file: " + path);
    std::vector<std::string> cols = detail::split_line(header, '\t');
    bool with_selection = cols.size() >= 7;
    SummaryDataset ds;
    ds.has_selection = with_selection;
    std::string line;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<std::string> f = detail::split_line(line, '\t');
        std::size_t expected = with_selection ? 7 : 5;
        if (f.size() < expected) {
            throw parse_error("line " + std::to_string(lineno) + " of " + path +
                              " has too few columns");
        }
        SnpRecord r;
        r.snp_id = f[0];
        r.gamma_hat = detail::parse_number(f[1], r.snp_id, "gamma_hat", path);
        r.se_gamma = detail::parse_number(f[2], r.snp_id, "se_gamma", path);
        r.Gamma_hat = detail::parse_number(f[3], r.snp_id, "Gamma_hat", path);
        r.se_Gamma = detail::parse_number(f[4], r.snp_id, "se_Gamma", path);
        if (with_selection) {
            r.gamma_star = detail::parse_number(f[5], r.snp_id, "gamma_star", path);
            r.se_gamma_star = detail::parse_number(f[6], r.snp_id, "se_gamma_star", path);
        }
        ds.records.push_back(std::move(r));
    }
    return ds;
}

}  // namespace mdivw

#endif
