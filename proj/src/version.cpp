#include "sketchfem/version.hpp"

#ifndef SKETCHFEM_GIT_DESCRIBE
#define SKETCHFEM_GIT_DESCRIBE "unknown"
#endif

namespace sketchfem {

std::string version_string() {
    return "sketchfem 0.1.0 (" SKETCHFEM_GIT_DESCRIBE ")";
}

} // namespace sketchfem
