#pragma once

// Existence oracle served by a subprocess over line-delimited JSON.
//   request   {"rect": [x0, y0, x1, y1], "target": "...", "image_ref": "..."}
//   response  {"l_yes": <float>, "l_no": <float>}
//          or {"error": "..."}
// The command runs under /bin/sh -c. Its stderr is captured and attached to
// any OracleError.

#include <memory>
#include <stdexcept>
#include <string>

#include "focus/ranking.hpp"

namespace focus {

class OracleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class StdioOracle : public ExistenceOracle {
 public:
  StdioOracle(const std::string& command, std::string image_ref);
  ~StdioOracle() override;
  StdioOracle(const StdioOracle&) = delete;
  StdioOracle& operator=(const StdioOracle&) = delete;

  Logits query(const PixelRect& rect, const std::string& target_text) override;
  bool concurrent_safe() const override { return false; }

  // Captured stderr so far.
  std::string stderr_text() const;

  struct Impl;

 private:
  std::unique_ptr<Impl> impl_;
  std::string image_ref_;
};

}  // namespace focus
