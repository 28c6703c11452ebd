#include "colony/mechanism.hpp"

namespace colony {

Feedback parse_feedback(const std::string& name) {
  if (name == "negative") return Feedback::Negative;
  if (name == "positive") return Feedback::Positive;
  if (name == "none") return Feedback::None;
  throw InvalidParameter("unknown feedback mode '" + name + "'");
}

}  // namespace colony
