#include "steer/error.hpp"

namespace steer {

std::string_view code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::unknown_target: return "unknown_target";
    case ErrorCode::empty_range: return "empty_range";
    case ErrorCode::range_out_of_bounds: return "range_out_of_bounds";
    case ErrorCode::no_enabled_hyperpartition: return "no_enabled_hyperpartition";
    case ErrorCode::invalid_spec: return "invalid_spec";
    case ErrorCode::config_mismatch: return "config_mismatch";
    case ErrorCode::invalid_transition: return "invalid_transition";
    case ErrorCode::invalid_budget: return "invalid_budget";
    case ErrorCode::invalid_csv: return "invalid_csv";
    case ErrorCode::unknown_dataset: return "unknown_dataset";
    case ErrorCode::unknown_run: return "unknown_run";
    case ErrorCode::unknown_name: return "unknown_name";
    case ErrorCode::unknown_metric: return "unknown_metric";
    case ErrorCode::no_active_arm: return "no_active_arm";
    case ErrorCode::invalid_request: return "invalid_request";
    case ErrorCode::not_found: return "not_found";
    case ErrorCode::corrupt_log: return "corrupt_log";
    case ErrorCode::io_error: return "io_error";
  }
  return "unknown";
}

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_request: return 400;
    case ErrorCode::unknown_dataset:
    case ErrorCode::unknown_run:
    case ErrorCode::not_found: return 404;
    case ErrorCode::invalid_transition:
    case ErrorCode::no_active_arm: return 409;
    case ErrorCode::corrupt_log:
    case ErrorCode::io_error: return 500;
    default: return 422;
  }
}

}  // namespace steer
