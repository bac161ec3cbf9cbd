#ifndef MDIVW_ERRORS_HPP
#define MDIVW_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace mdivw {

// Base class for everything this library throws on its own behalf.
class error : public std::runtime_error {
public:
    explicit error(const std::string& msg) : std::runtime_error(msg) {}
};

// File missing or unreadable.
class io_error : public error {
public:
    using error::error;
};

// A mapped column name is absent from a file header.
class schema_error : public error {
public:
    using error::error;
};

// A cell failed numeric parsing or violated a field invariant; message names
// the offending row and column.
class parse_error : public error {
public:
    using error::error;
};

// Joining the input files produced zero shared SNPs.
class empty_join_error : public error {
public:
    using error::error;
};

// A selection mask excluded every SNP.
class empty_selection_error : public error {
public:
    using error::error;
};

// lambda > 0 requested but the dataset carries no selection columns.
class missing_selection_data_error : public error {
public:
    using error::error;
};

// An estimator denominator is exactly zero.
class degenerate_denominator_error : public error {
public:
    using error::error;
};

// theta2 <= 0: the debiased denominator lost its sign, the instrument set is
// too weak for a ratio estimate. Carries the offending statistics.
class weak_instrument_error : public error {
public:
    weak_instrument_error(const std::string& msg, double theta2, double psi_hat)
        : error(msg), theta2(theta2), psi_hat(psi_hat) {}
    double theta2;
    double psi_hat;
};

// theta1 = 0: the modification factor is undefined.
class zero_numerator_error : public error {
public:
    using error::error;
};

// A variance estimate came out non-positive. Carries the Delta correction so
// callers can report it.
class variance_degeneracy_error : public error {
public:
    variance_degeneracy_error(const std::string& msg, double delta_hat)
        : error(msg), delta_hat(delta_hat) {}
    double delta_hat;
};

// Fewer instruments than a method needs (Egger wants >= 3, median >= 2).
class insufficient_instruments_error : public error {
public:
    using error::error;
};

// Regression design matrix is singular (e.g. all gamma_hat equal).
class singular_design_error : public error {
public:
    using error::error;
};

// A Wald ratio with gamma_hat = 0 among the selected SNPs.
class undefined_ratio_error : public error {
public:
    using error::error;
};

// Invalid simulation or run configuration.
class config_error : public error {
public:
    using error::error;
};

// Every replication failed for a method.
class method_failure_error : public error {
public:
    using error::error;
};

}  // namespace mdivw

#endif
