#include "steer/trial_log.hpp"

#include <set>
#include <sstream>

#include "steer/error.hpp"

namespace steer {

using nlohmann::json;

namespace {

const std::set<std::string>& known_kinds() {
  static const std::set<std::string> kinds = {"run_created", "trial", "command", "status_change"};
  return kinds;
}

bool well_formed(const json& j) {
  return j.is_object() && j.contains("seq") && j.at("seq").is_number_integer() &&
         j.contains("kind") && j.at("kind").is_string() &&
         known_kinds().count(j.at("kind").get<std::string>()) > 0;
}

}  // namespace

ParsedLog parse_log(std::string_view text) {
  ParsedLog out;
  std::size_t pos = 0;
  std::size_t lineno = 0;
  long last_seq = 0;
  while (pos < text.size()) {
    ++lineno;
    const std::size_t nl = text.find('\n', pos);
    const bool terminated = nl != std::string_view::npos;
    const std::size_t end = terminated ? nl : text.size();
    const std::string_view line = text.substr(pos, end - pos);

    json record;
    bool parsed = true;
    try {
      record = json::parse(line);
    } catch (const json::parse_error&) {
      parsed = false;
    }
    if (!parsed || !well_formed(record)) {
      if (!terminated) {
        out.dropped_torn_tail = true;
        out.warnings.push_back("dropped torn final line " + std::to_string(lineno));
        break;
      }
      throw Error(ErrorCode::corrupt_log, "corrupt log record at line " + std::to_string(lineno),
                  json{{"line", lineno}});
    }
    const long seq = record.at("seq").get<long>();
    if (seq <= last_seq) {
      throw Error(ErrorCode::corrupt_log,
                  "non-increasing sequence number at line " + std::to_string(lineno),
                  json{{"line", lineno}});
    }
    last_seq = seq;
    out.records.push_back(std::move(record));
    pos = terminated ? nl + 1 : text.size();
    out.valid_bytes = pos;
  }
  return out;
}

ParsedLog read_log_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io_error, "cannot open log " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_log(ss.str());
}

LogWriter::LogWriter(std::filesystem::path path, std::size_t keep_bytes) : path_(std::move(path)) {
  if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
  std::error_code ec;
  const bool exists = std::filesystem::exists(path_, ec);
  if (exists && keep_bytes != static_cast<std::size_t>(-1) &&
      std::filesystem::file_size(path_) > keep_bytes) {
    std::filesystem::resize_file(path_, keep_bytes);
  }
  bool needs_newline = false;
  if (exists && std::filesystem::file_size(path_) > 0) {
    std::ifstream in(path_, std::ios::binary);
    in.seekg(-1, std::ios::end);
    char last = '\n';
    in.get(last);
    needs_newline = last != '\n';
  }
  out_.open(path_, std::ios::binary | std::ios::app);
  if (!out_) throw Error(ErrorCode::io_error, "cannot open log " + path_.string() + " for append");
  if (needs_newline) out_ << '\n';
}

void LogWriter::append(const json& record) {
  std::lock_guard<std::mutex> lock(mutex_);
  out_ << record.dump() << '\n';
  out_.flush();
  if (!out_) throw Error(ErrorCode::io_error, "write to " + path_.string() + " failed");
}

}  // namespace steer
