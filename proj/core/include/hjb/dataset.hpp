#pragma once

#include <string>
#include <vector>

#include "hjb/ocp.hpp"

namespace hjb {

// One sample per line: {"t":..., "x":[...], "v":..., "lambda":[...], "src":"..."}.
std::string sample_to_json_line(const Sample& s);
Sample sample_from_json_line(const std::string& line);

void save_samples_jsonl(const std::string& path, const std::vector<Sample>& samples);
// Blank lines are skipped; throws EmptyDataset when no records remain and
// ConfigError on malformed records.
std::vector<Sample> load_samples_jsonl(const std::string& path);

}  // namespace hjb
