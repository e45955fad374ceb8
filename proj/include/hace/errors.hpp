#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace hace {

// Bad user input: malformed files, invalid parameters, precondition
// violations. The CLI maps these to exit status 2.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// Structural problem in a hierarchy. Carries the identifiers involved so
// callers can list them.
class TaxonomyError : public ValidationError {
 public:
  TaxonomyError(const std::string& what, std::vector<std::string> offending)
      : ValidationError(Format(what, offending)), offending_(std::move(offending)) {}

  const std::vector<std::string>& offending() const { return offending_; }

 private:
  static std::string Format(const std::string& what, const std::vector<std::string>& ids) {
    if (ids.empty()) return what;
    std::string out = what + ":";
    for (const auto& id : ids) out += " " + id;
    return out;
  }

  std::vector<std::string> offending_;
};

// Training stopped because the epoch loss blew past the divergence threshold.
class TrainingDiverged : public std::runtime_error {
 public:
  explicit TrainingDiverged(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace hace
