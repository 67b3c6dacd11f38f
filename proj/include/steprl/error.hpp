#pragma once

#include <stdexcept>
#include <string>

namespace steprl {

// Runtime failure with a stable machine-readable slug ("buffer-empty",
// "no-reference", ...). The slug is what tests and the CLI dispatch on.
class Error : public std::runtime_error {
 public:
  Error(std::string slug, const std::string& detail)
      : std::runtime_error(detail.empty() ? slug : slug + ": " + detail),
        slug_(std::move(slug)) {}

  explicit Error(std::string slug) : Error(std::move(slug), "") {}

  const std::string& slug() const { return slug_; }

 private:
  std::string slug_;
};

}  // namespace steprl
