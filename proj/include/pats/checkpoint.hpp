#pragma once

#include "pats/model.hpp"

#include <cstddef>
#include <filesystem>
#include <string>

namespace pats {

/// A model snapshot plus the optimizer step it was taken at.
///
/// On disk this is a JSON document:
///
///     {
///       "format": "pats-checkpoint",
///       "schema_version": 1,
///       "seed": <init seed>,
///       "step": <optimizer step t>,
///       "model": { ...model spec... },
///       "groups": [
///         { "name": "...", "shape": [r, c], "perturbable": true,
///           "values": [...], "m": [...], "u": [...], "s": [...] }, ...
///       ]
///     }
///
/// Doubles are written in shortest round-trip form, so a reload is bit-exact.
struct Checkpoint {
    Model model;
    std::size_t step = 0;
};

std::string checkpoint_to_string(const Model& model, std::size_t step = 0);
Checkpoint checkpoint_from_string(const std::string& text);

/// Throws IoError on filesystem or format failure.
void save_checkpoint(const std::filesystem::path& path, const Model& model, std::size_t step = 0);
Checkpoint load_checkpoint(const std::filesystem::path& path);

} // namespace pats
