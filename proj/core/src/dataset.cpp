#include "hjb/dataset.hpp"

#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "hjb/errors.hpp"

namespace hjb {

using ordered_json = nlohmann::ordered_json;

std::string sample_to_json_line(const Sample& s) {
  ordered_json j;
  j["t"] = s.t;
  j["x"] = std::vector<double>(s.x.data(), s.x.data() + s.x.size());
  j["v"] = s.v;
  j["lambda"] = std::vector<double>(s.lambda.data(), s.lambda.data() + s.lambda.size());
  j["src"] = s.src;
  return j.dump();
}

Sample sample_from_json_line(const std::string& line) {
  ordered_json j;
  try {
    j = ordered_json::parse(line);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("malformed dataset record: ") + e.what());
  }
  for (const char* key : {"t", "x", "v", "lambda", "src"}) {
    if (!j.contains(key)) {
      throw ConfigError(std::string("dataset record missing key '") + key + "'");
    }
  }
  Sample s;
  s.t = j["t"].get<double>();
  const auto xs = j["x"].get<std::vector<double>>();
  const auto ls = j["lambda"].get<std::vector<double>>();
  s.x = Eigen::Map<const Eigen::VectorXd>(xs.data(), static_cast<Eigen::Index>(xs.size()));
  s.v = j["v"].get<double>();
  s.lambda =
      Eigen::Map<const Eigen::VectorXd>(ls.data(), static_cast<Eigen::Index>(ls.size()));
  s.src = j["src"].get<std::string>();
  return s;
}

void save_samples_jsonl(const std::string& path, const std::vector<Sample>& samples) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open dataset file for writing: " + path);
  for (const Sample& s : samples) out << sample_to_json_line(s) << '\n';
}

std::vector<Sample> load_samples_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open dataset file: " + path);
  std::vector<Sample> samples;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    samples.push_back(sample_from_json_line(line));
  }
  if (samples.empty()) throw EmptyDataset("no records in " + path);
  return samples;
}

}  // namespace hjb
