#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>

namespace tango {

/// Row-major dense grid; row = image v / world y, column = image u / world x.
template <class T>
using Grid = Eigen::Array<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using InstanceId = std::int32_t;

struct Cell {
  int row = 0;
  int col = 0;
  friend bool operator==(const Cell&, const Cell&) = default;
};

enum class Errc {
  InvalidArgument,
  GenerationFailed,
  PoseInSolid,
  Unreachable,
  LocalizationLost,
  NoViableSubgoal,
  SubgoalProjectionFailed,
  EmptyTraversability,
  AltGoalUnavailable,
  Io,
  Parse,
};

const char* to_string(Errc e);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  Errc code() const { return code_; }

 private:
  Errc code_;
};

/// Value-or-error for outcomes that are routine during closed-loop control
/// (lost localization, empty traversability, ...). Harness bugs throw Error.
template <class T>
class Result {
 public:
  Result(T value) : v_(std::move(value)) {}  // NOLINT(google-explicit-constructor)
  Result(Errc e) : v_(e) {}                  // NOLINT(google-explicit-constructor)

  bool ok() const { return std::holds_alternative<T>(v_); }
  explicit operator bool() const { return ok(); }

  const T& value() const& {
    if (!ok()) throw Error(error(), std::string("Result holds error: ") + to_string(error()));
    return std::get<T>(v_);
  }
  T& value() & {
    if (!ok()) throw Error(error(), std::string("Result holds error: ") + to_string(error()));
    return std::get<T>(v_);
  }
  T&& value() && {
    if (!ok()) throw Error(error(), std::string("Result holds error: ") + to_string(error()));
    return std::get<T>(std::move(v_));
  }
  const T& operator*() const& { return value(); }
  const T* operator->() const { return &value(); }
  Errc error() const { return std::get<Errc>(v_); }

 private:
  std::variant<T, Errc> v_;
};

/// Wrap into (-pi, pi].
template <class Scalar>
Scalar wrap_angle(Scalar a) {
  constexpr Scalar two_pi = Scalar(2) * std::numbers::pi_v<Scalar>;
  a = std::fmod(a, two_pi);
  if (a <= -std::numbers::pi_v<Scalar>) a += two_pi;
  if (a > std::numbers::pi_v<Scalar>) a -= two_pi;
  return a;
}

/// SplitMix64 finalizer; used to derive independent seeds from a parent seed.
inline std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) { return mix_seed(mix_seed(a) ^ (b + 0x632be59bd9b4e019ULL)); }

}  // namespace tango
