#pragma once

#include <algorithm>
#include <ostream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace metaq {

struct Finding {
  std::string code;     // e.g. "instance.disjoint"
  std::string message;

  friend bool operator==(const Finding&, const Finding&) = default;
};

/// Validation result. Validators never throw for data problems; they
/// collect every violation here instead.
class Report {
 public:
  void add(std::string code, std::string message) {
    findings_.push_back({std::move(code), std::move(message)});
  }

  void merge(const Report& other) {
    findings_.insert(findings_.end(), other.findings_.begin(), other.findings_.end());
  }

  bool empty() const noexcept { return findings_.empty(); }
  std::size_t size() const noexcept { return findings_.size(); }
  const std::vector<Finding>& findings() const noexcept { return findings_; }

  std::size_t count(std::string_view code) const {
    return static_cast<std::size_t>(std::count_if(
        findings_.begin(), findings_.end(), [&](const Finding& f) { return f.code == code; }));
  }

  bool has(std::string_view code) const { return count(code) > 0; }

  friend std::ostream& operator<<(std::ostream& os, const Report& r) {
    for (const auto& f : r.findings_) os << f.code << ": " << f.message << '\n';
    return os;
  }

 private:
  std::vector<Finding> findings_;
};

}  // namespace metaq
