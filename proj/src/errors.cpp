#include "sketchfem/errors.hpp"

namespace sketchfem {

InsufficientSamplesError::InsufficientSamplesError(int rank_, long samples_, int rho_)
    : NumericalError("sketched Gram matrix is rank-deficient (rank " + std::to_string(rank_) +
                     " < rho " + std::to_string(rho_) + " with c = " + std::to_string(samples_) +
                     " samples); increase the sample budget"),
      rank(rank_), samples(samples_), rho(rho_) {}

int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const UsageError*>(&e)) return 2;
    if (dynamic_cast<const DataError*>(&e)) return 3;
    if (dynamic_cast<const NumericalError*>(&e)) return 4;
    return 1;
}

} // namespace sketchfem
