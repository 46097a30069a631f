#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "qbai/dist.hpp"

namespace qbai {

/// Writes `content` to a temporary sibling file, then renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

std::string read_file(const std::filesystem::path& path);

/// "%.12g" formatting; infinities print as inf / -inf.
std::string format_real(double v);

namespace dist {

/// Instance file schema:
/// {"q": .., "lambda": .., "arms": [{"family": "dirac_uniform_mixture", "w": ..}, ...]}
std::string instance_to_json(const Instance& inst);
Instance instance_from_json(std::string_view text);

Instance load_instance(const std::filesystem::path& path);
void save_instance(const Instance& inst, const std::filesystem::path& path);

}  // namespace dist
}  // namespace qbai
