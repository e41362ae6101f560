#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "ergostop/markov.hpp"

namespace ergostop {

/// Contents of a model file.
///
/// JSON object with `states` (array of names), exactly one of `kernel` or
/// `generator` (row-major matrices in `states` order), `dt`, and optional
/// `coords`, `f`, `g`.
struct ModelFile {
    MarkovModel model;
    std::optional<Vector> f;
    std::optional<Vector> g;
};

/// Parse a model from JSON text. `dt_override` replaces the file's dt; for a
/// kernel model it must agree with the file (the kernel is tied to its step).
ModelFile parse_model(const std::string& text, std::optional<double> dt_override = std::nullopt);

ModelFile load_model(const std::filesystem::path& path,
                     std::optional<double> dt_override = std::nullopt);

}  // namespace ergostop
