#include "feel/error.hpp"

namespace feel {

std::string_view errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::ok: return "ok";
    case Errc::battery_out_of_range: return "battery_out_of_range";
    case Errc::nonpositive_frequency: return "nonpositive_frequency";
    case Errc::invalid_argument: return "invalid_argument";
    case Errc::participation_exceeds_round: return "participation_exceeds_round";
    case Errc::label_out_of_range: return "label_out_of_range";
    case Errc::empty_dataset: return "empty_dataset";
    case Errc::series_too_short: return "series_too_short";
    case Errc::no_template_matches: return "no_template_matches";
    case Errc::undefined_angle: return "undefined_angle";
    case Errc::shape_mismatch: return "shape_mismatch";
    case Errc::insufficient_pool: return "insufficient_pool";
    case Errc::no_updates: return "no_updates";
    case Errc::degenerate_weights: return "degenerate_weights";
    case Errc::unreachable_device: return "unreachable_device";
    case Errc::no_participants: return "no_participants";
    case Errc::invalid_config: return "invalid_config";
    case Errc::parse_error: return "parse_error";
    case Errc::unknown_key: return "unknown_key";
    case Errc::missing_key: return "missing_key";
    case Errc::io_error: return "io_error";
  }
  return "unknown";
}

}  // namespace feel
