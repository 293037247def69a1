#pragma once

// Numerical certificates.  Every verifier in the toolkit reports its
// conclusions as a named list of residuals against one tolerance; the
// certificate is the unit that gets serialized, merged across pipeline
// stages, and turned into a process exit code.

#include <algorithm>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace morita {

struct Certificate {
  std::string name;
  double tol = 1e-9;
  // Ordered (condition, residual) pairs; order is part of the report.
  std::vector<std::pair<std::string, double>> conditions;

  void record(const std::string& cond, double residual) {
    conditions.emplace_back(cond, residual);
  }

  bool passed() const {
    return std::all_of(conditions.begin(), conditions.end(),
                       [&](const auto& c) { return c.second <= tol; });
  }

  double residual(const std::string& cond) const {
    for (const auto& [k, v] : conditions)
      if (k == cond) return v;
    throw std::out_of_range("certificate has no condition '" + cond + "'");
  }

  bool has(const std::string& cond) const {
    for (const auto& [k, v] : conditions)
      if (k == cond) return true;
    return false;
  }

  double worst() const {
    double w = 0.0;
    for (const auto& [k, v] : conditions) w = std::max(w, v);
    return w;
  }

  /// Absorb another certificate, prefixing its condition names.
  void merge(const Certificate& other) {
    for (const auto& [k, v] : other.conditions)
      conditions.emplace_back(other.name.empty() ? k : other.name + "." + k, v);
  }
};

/// Error type carrying a machine-readable kind next to the message, and
/// optionally the certificate whose failure triggered the throw.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& msg)
      : std::runtime_error(kind + ": " + msg), kind_(std::move(kind)) {}
  Error(std::string kind, const std::string& msg, Certificate cert)
      : std::runtime_error(kind + ": " + msg),
        kind_(std::move(kind)),
        cert_(std::move(cert)),
        has_cert_(true) {}

  const std::string& kind() const { return kind_; }
  bool has_certificate() const { return has_cert_; }
  const Certificate& certificate() const { return cert_; }

 private:
  std::string kind_;
  Certificate cert_;
  bool has_cert_ = false;
};

inline void require(bool ok, const std::string& kind, const std::string& msg) {
  if (!ok) throw Error(kind, msg);
}

}  // namespace morita
