#pragma once

#include <filesystem>
#include <string>

#include "sgl/gibbs_model.hpp"

namespace sgl {

/// Parses the key=value model format:
///
///   # comment
///   kind = markov          # bernoulli | markov | homogeneous
///   d = 1
///   init = 0.5, 0.5
///   rows = 0.7, 0.3; 0.4, 0.6
///   K = 1
///   alpha = 1
///   beta_bits = 0
///
/// Bernoulli models use `weights`.  Errors name the offending line.
GibbsModel parse_model(const std::string& text, const std::string& source = "<model>");
GibbsModel load_model(const std::filesystem::path& path);

}  // namespace sgl
