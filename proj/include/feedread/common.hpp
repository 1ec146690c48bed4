#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace feedread {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on an argument or configuration was violated.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A metric is undefined for the given data (e.g. a protected group is empty).
class UndefinedMetric : public Error {
 public:
  using Error::Error;
};

/// Input file could not be read or parsed.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Training produced a non-finite parameter.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// SplitMix64 finaliser; used to derive independent seeds from one base seed.
constexpr std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed for a named stream (`stream`) of the `index`-th task under `base`.
constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream, std::uint64_t index) {
  return mix_seed(mix_seed(base ^ (stream * 0x2545f4914f6cdd1dULL)) + index);
}

}  // namespace feedread
