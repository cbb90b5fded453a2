#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace feel {

// Every failure the library reports carries one of these codes; the names are
// the ones surfaced on the CLI and in test expectations.
enum class Errc {
  ok = 0,
  battery_out_of_range,
  nonpositive_frequency,
  invalid_argument,
  participation_exceeds_round,
  label_out_of_range,
  empty_dataset,
  series_too_short,
  no_template_matches,
  undefined_angle,
  shape_mismatch,
  insufficient_pool,
  no_updates,
  degenerate_weights,
  unreachable_device,
  no_participants,
  invalid_config,
  parse_error,
  unknown_key,
  missing_key,
  io_error,
};

std::string_view errc_name(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what),
        code_(code) {}
  explicit Error(Errc code) : Error(code, "") {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

// Lightweight ok-or-error value for validators that should not throw.
class Status {
 public:
  Status() = default;
  Status(Errc code, std::string message)
      : code_(code), message_(std::move(message)) {}

  static Status Ok() { return {}; }

  bool ok() const noexcept { return code_ == Errc::ok; }
  Errc code() const noexcept { return code_; }
  const std::string& message() const noexcept { return message_; }

  void throw_if_error() const {
    if (!ok()) throw Error(code_, message_);
  }

 private:
  Errc code_ = Errc::ok;
  std::string message_;
};

}  // namespace feel
