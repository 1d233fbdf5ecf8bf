#pragma once

#include <stdexcept>
#include <string>

namespace sketchfem {

// Exit-code contract: 0 success, 2 usage, 3 data, 4 numerical failure.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Raised when a sketched Gram matrix is numerically rank-deficient.
struct InsufficientSamplesError : NumericalError {
    InsufficientSamplesError(int rank_, long samples_, int rho_);
    int rank;
    long samples;
    int rho;
};

int exit_code_for(const std::exception& e);

} // namespace sketchfem
