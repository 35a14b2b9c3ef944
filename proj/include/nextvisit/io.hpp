#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace nextvisit {

std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::string& path);

std::string read_file(const std::string& path);

/// Writes to a temporary sibling and renames it into place, so readers never
/// observe a partially written artifact under `path`.
void atomic_write(const std::string& path, std::string_view contents);

bool file_exists(const std::string& path);
void ensure_directory(const std::string& path);

/// Exclusive advisory lock on `<path>.lock`, held for the object's lifetime.
class FileLock {
 public:
  explicit FileLock(const std::string& path);
  ~FileLock();
  FileLock(const FileLock&) = delete;
  FileLock& operator=(const FileLock&) = delete;

 private:
  int fd_ = -1;
};

/// Run provenance written next to every artifact as `<artifact>.manifest.json`.
struct RunManifest {
  std::vector<std::string> command_line;
  std::string tool_version;
  unsigned long long seed = 0;
  nlohmann::json config_hashes = nlohmann::json::object();
  nlohmann::json inputs = nlohmann::json::array();  // {path, sha256, manifest}
  nlohmann::json extra = nlohmann::json::object();  // vocabulary / checkpoint hashes
  std::string started_at;
  std::string finished_at;

  /// Records an input file, its content hash, and the manifest that produced
  /// it (if any), so the chain back to the generator seed stays closed.
  void add_input(const std::string& path);
  nlohmann::json to_json(const std::string& artifact_path) const;
};

std::string manifest_path(const std::string& artifact_path);
void write_artifact(const std::string& path, std::string_view contents, const RunManifest& manifest);

std::string utc_timestamp();

/// Fixed-format number rendering used by every CSV/JSON writer, so identical
/// runs produce identical bytes.
std::string format_number(double v);

std::vector<std::string> split_csv_line(std::string_view line);

inline constexpr std::string_view kToolVersion = "0.3.0";

}  // namespace nextvisit
