#pragma once

#include "gpudse/arch.hpp"

#include <filesystem>
#include <json.hpp>
#include <string>

namespace gpudse {

/// Malformed input file. The message names the file position or field path.
class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

nlohmann::ordered_json to_json(const GpuConfig& config);
GpuConfig gpu_config_from_json(const nlohmann::json& j);

nlohmann::ordered_json to_json(const AreaWeights& weights);
AreaWeights area_weights_from_json(const nlohmann::json& j);

/// Reads and validates a config file; throws ParseError or ValidationError.
GpuConfig read_config(const std::filesystem::path& path);
void write_config(const GpuConfig& config, const std::filesystem::path& path);

/// Accepts a preset name ("tx2", "xavier") or a config file path.
GpuConfig load_config_or_preset(const std::string& spec);

AreaWeights read_area_weights(const std::filesystem::path& path);

/// Parses a whole file as JSON, converting syntax errors to ParseError with line/column.
nlohmann::json parse_json_file(const std::filesystem::path& path);
nlohmann::json parse_json_text(const std::string& text, const std::string& origin);

void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace gpudse
