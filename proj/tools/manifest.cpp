#include "manifest.hpp"

#include <fstream>

#include <json.hpp>

#include "salreg/error.hpp"

namespace salreg::cli {

std::string record_json(const RunRecord& record, const Config& config) {
  nlohmann::ordered_json j;
  j["tool"] = "salreg";
  j["version"] = kVersion;
  j["command"] = record.command;
  j["image"] = record.image;
  nlohmann::ordered_json stages = nlohmann::ordered_json::object();
  for (const auto& s : record.stages) stages[s.stage] = s.ms;
  j["stages_ms"] = std::move(stages);
  j["total_ms"] = record.total_ms;
  nlohmann::ordered_json cfg = nlohmann::ordered_json::object();
  for (const auto& [k, v] : config.entries()) cfg[k] = v;
  j["config"] = std::move(cfg);
  return j.dump();
}

ManifestWriter::ManifestWriter(std::filesystem::path path, const Config& config)
    : path_(std::move(path)), config_(config) {
  if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
}

void ManifestWriter::append(const RunRecord& record) {
  const std::string line = record_json(record, config_);
  std::lock_guard lock(mutex_);
  std::ofstream out(path_, std::ios::app);
  if (!out) throw IoError("cannot append to manifest " + path_.string());
  out << line << '\n';
}

}  // namespace salreg::cli
