#pragma once

#include <array>
#include <stdexcept>
#include <string>
#include <string_view>

#include <json.hpp>

namespace steer {

/// Machine-readable rejection codes. Every module rejection maps to exactly
/// one of these; the API server maps each to an HTTP status.
enum class ErrorCode {
  unknown_target,
  empty_range,
  range_out_of_bounds,
  no_enabled_hyperpartition,
  invalid_spec,
  config_mismatch,
  invalid_transition,
  invalid_budget,
  invalid_csv,
  unknown_dataset,
  unknown_run,
  unknown_name,
  unknown_metric,
  no_active_arm,
  invalid_request,
  not_found,
  corrupt_log,
  io_error,
};

inline constexpr std::array kAllErrorCodes = {
    ErrorCode::unknown_target,      ErrorCode::empty_range,
    ErrorCode::range_out_of_bounds, ErrorCode::no_enabled_hyperpartition,
    ErrorCode::invalid_spec,        ErrorCode::config_mismatch,
    ErrorCode::invalid_transition,  ErrorCode::invalid_budget,
    ErrorCode::invalid_csv,         ErrorCode::unknown_dataset,
    ErrorCode::unknown_run,         ErrorCode::unknown_name,
    ErrorCode::unknown_metric,      ErrorCode::no_active_arm,
    ErrorCode::invalid_request,     ErrorCode::not_found,
    ErrorCode::corrupt_log,         ErrorCode::io_error,
};

std::string_view code_name(ErrorCode code);
int http_status(ErrorCode code);

/// Exception carrying a rejection code, a human message, and optional
/// structured detail (e.g. the CSV row/column of an ingestion failure).
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string message, nlohmann::json detail = nullptr)
      : std::runtime_error(std::move(message)),
        code_(code),
        detail_(std::move(detail)) {}

  ErrorCode code() const noexcept { return code_; }
  const nlohmann::json& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  nlohmann::json detail_;
};

}  // namespace steer
