#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>

namespace pulse {

using VertexId = std::uint32_t;
using EdgeIndex = std::uint64_t;
using Rank = int;

// Property values and edge weights are 4-byte integers.
using Value = std::int32_t;

inline constexpr Value kInf = std::numeric_limits<Value>::max();
inline constexpr Value kNegInf = std::numeric_limits<Value>::min();

// Clamp a wide intermediate into the value domain. kInf is absorbing for
// addition, so any result at or past the top saturates.
constexpr Value clamp_value(std::int64_t x) {
  if (x >= kInf) return kInf;
  if (x <= kNegInf) return kNegInf;
  return static_cast<Value>(x);
}

constexpr Value saturating_add(Value a, Value b) {
  if (a == kInf || b == kInf) return kInf;
  if (a == kNegInf || b == kNegInf) return kNegInf;
  return clamp_value(static_cast<std::int64_t>(a) + b);
}

enum class ReductionOp { Min, Max, Sum };

constexpr Value identity(ReductionOp op) {
  switch (op) {
    case ReductionOp::Min: return kInf;
    case ReductionOp::Max: return kNegInf;
    case ReductionOp::Sum: return 0;
  }
  return 0;
}

constexpr Value apply(ReductionOp op, Value a, Value b) {
  switch (op) {
    case ReductionOp::Min: return std::min(a, b);
    case ReductionOp::Max: return std::max(a, b);
    case ReductionOp::Sum: return saturating_add(a, b);
  }
  return a;
}

// Min and Max are idempotent and order-directed; Sum is not.
constexpr bool is_monotonic(ReductionOp op) { return op != ReductionOp::Sum; }

inline std::string_view to_string(ReductionOp op) {
  switch (op) {
    case ReductionOp::Min: return "Min";
    case ReductionOp::Max: return "Max";
    case ReductionOp::Sum: return "Sum";
  }
  return "?";
}

inline std::string format_value(Value v) {
  if (v == kInf) return "INF";
  if (v == kNegInf) return "-INF";
  return std::to_string(v);
}

// Error hierarchy. Every failure surfaced to the user derives from Error.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ParseError : Error {
  ParseError(int line_, int col_, const std::string& msg)
      : Error(std::to_string(line_) + ":" + std::to_string(col_) + ": " + msg),
        line(line_), col(col_), message(msg) {}
  // Same diagnostic prefixed with the file it came from.
  ParseError(int line_, int col_, const std::string& msg, const std::string& file_)
      : Error(file_ + ":" + std::to_string(line_) + ":" + std::to_string(col_) + ": " + msg),
        line(line_), col(col_), message(msg), file(file_) {}
  int line;
  int col;
  std::string message;
  std::string file;
};

struct BoundsError : Error { using Error::Error; };
struct ConfigError : Error { using Error::Error; };
struct NotFoundError : Error { using Error::Error; };
struct LowerError : Error { using Error::Error; };
struct ExecError : Error { using Error::Error; };
struct NonTerminationError : ExecError { using ExecError::ExecError; };
struct DeadlockError : ExecError { using ExecError::ExecError; };
struct AccessViolation : ExecError { using ExecError::ExecError; };

}  // namespace pulse
