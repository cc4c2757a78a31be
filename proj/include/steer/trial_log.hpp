#pragma once

#include <filesystem>
#include <fstream>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace steer {

/// Result of scanning a newline-delimited JSON run log.
struct ParsedLog {
  std::vector<nlohmann::json> records;
  std::vector<std::string> warnings;
  std::size_t valid_bytes = 0;  // prefix length ending at the last good record
  bool dropped_torn_tail = false;
};

/// Every complete line must be a JSON object with a strictly increasing
/// `seq` and a known `kind`; violations throw Error(corrupt_log) citing the
/// 1-based line. Only a final unterminated, unparsable line is tolerated
/// (dropped with a warning).
ParsedLog parse_log(std::string_view text);
ParsedLog read_log_file(const std::filesystem::path& path);

/// Append-only writer; each record is flushed as one complete line.
class LogWriter {
 public:
  /// Truncates the file to `keep_bytes` first when given (torn-tail repair).
  explicit LogWriter(std::filesystem::path path, std::size_t keep_bytes = static_cast<std::size_t>(-1));
  void append(const nlohmann::json& record);
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
  std::mutex mutex_;
};

}  // namespace steer
