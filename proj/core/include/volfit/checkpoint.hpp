#pragma once

#include <string>

#include "volfit/model.hpp"

namespace volfit {

/// JSON serialization of a fitted surface. Holds everything needed to
/// re-evaluate and re-audit the model: layer widths, row-major weights,
/// biases, log_alpha, prior kind and parameters, the ATM term-structure
/// knots, and the data ranges the penalty grids were built from. Numbers
/// round-trip exactly.
std::string checkpoint_to_json(const SurfaceModel& model);
SurfaceModel checkpoint_from_json(const std::string& text);

/// File variants; writing is atomic (temp file + rename).
void save_checkpoint(const SurfaceModel& model, const std::string& path);
SurfaceModel load_checkpoint(const std::string& path);

} // namespace volfit
