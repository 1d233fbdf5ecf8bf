#pragma once

#include <string>

namespace sketchfem {

// "sketchfem <semver> (<git describe>)"
std::string version_string();

} // namespace sketchfem
