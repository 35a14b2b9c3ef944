#include "nextvisit/io.hpp"

#include <fcntl.h>
#include <openssl/evp.h>
#include <sys/file.h>
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "nextvisit/common.hpp"

namespace nextvisit {

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  EVP_DigestUpdate(ctx, bytes.data(), bytes.size());
  EVP_DigestFinal_ex(ctx, digest, &len);
  EVP_MD_CTX_free(ctx);
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xf]);
  }
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string sha256_file(const std::string& path) { return sha256_hex(read_file(path)); }

bool file_exists(const std::string& path) { return std::filesystem::exists(path); }

void ensure_directory(const std::string& path) {
  if (path.empty()) return;
  std::error_code ec;
  std::filesystem::create_directories(path, ec);
  if (ec) throw DataError("cannot create directory '" + path + "': " + ec.message());
}

void atomic_write(const std::string& path, std::string_view contents) {
  auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) ensure_directory(parent.string());
  const std::string tmp = path + ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write '" + tmp + "'");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) throw DataError("short write on '" + tmp + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw DataError("cannot rename '" + tmp + "' to '" + path + "': " + ec.message());
  }
}

FileLock::FileLock(const std::string& path) {
  const std::string lock_path = path + ".lock";
  fd_ = ::open(lock_path.c_str(), O_CREAT | O_RDWR, 0644);
  if (fd_ < 0) throw DataError("cannot open lock file '" + lock_path + "'");
  if (::flock(fd_, LOCK_EX) != 0) {
    ::close(fd_);
    throw DataError("cannot lock '" + lock_path + "'");
  }
}

FileLock::~FileLock() {
  if (fd_ >= 0) {
    ::flock(fd_, LOCK_UN);
    ::close(fd_);
  }
}

std::string manifest_path(const std::string& artifact_path) { return artifact_path + ".manifest.json"; }

void RunManifest::add_input(const std::string& path) {
  nlohmann::json entry;
  entry["path"] = path;
  entry["sha256"] = sha256_file(path);
  const auto mpath = manifest_path(path);
  if (file_exists(mpath)) {
    try {
      entry["manifest"] = nlohmann::json::parse(read_file(mpath));
    } catch (const nlohmann::json::exception&) {
      throw ProvenanceError("unreadable manifest '" + mpath + "'");
    }
  }
  inputs.push_back(std::move(entry));
}

nlohmann::json RunManifest::to_json(const std::string& artifact_path) const {
  nlohmann::json j;
  j["artifact"] = artifact_path;
  j["command_line"] = command_line;
  j["tool_version"] = tool_version.empty() ? std::string(kToolVersion) : tool_version;
  j["seed"] = seed;
  j["config_hashes"] = config_hashes;
  j["inputs"] = inputs;
  j["hashes"] = extra;
  j["started_at"] = started_at;
  j["finished_at"] = finished_at.empty() ? utc_timestamp() : finished_at;
  return j;
}

void write_artifact(const std::string& path, std::string_view contents, const RunManifest& manifest) {
  atomic_write(path, contents);
  auto j = manifest.to_json(path);
  j["sha256"] = sha256_hex(contents);
  atomic_write(manifest_path(path), j.dump(2) + "\n");
}

std::string utc_timestamp() {
  auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (char c : line) {
    if (c == '"') {
      quoted = !quoted;
    } else if (c == ',' && !quoted) {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace nextvisit
