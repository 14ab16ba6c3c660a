#pragma once

#include <filesystem>
#include <mutex>
#include <string>
#include <vector>

#include "salreg/config.hpp"
#include "salreg/pipeline.hpp"

namespace salreg::cli {

inline constexpr const char* kVersion = "0.1.0";

struct RunRecord {
  std::string command;
  std::string image;
  std::vector<StageTiming> stages;
  double total_ms = 0;
};

/// Appends JSON-lines records; appends are serialized across threads.
class ManifestWriter {
 public:
  ManifestWriter(std::filesystem::path path, const Config& config);
  void append(const RunRecord& record);
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  Config config_;
  std::mutex mutex_;
};

std::string record_json(const RunRecord& record, const Config& config);

}  // namespace salreg::cli
