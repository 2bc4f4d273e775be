// errors.hpp -- typed exception hierarchy shared by all pacroute modules.
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace pacr {

// Base class so callers can catch anything raised by this library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad numeric input: value outside its documented domain.
class RangeError : public Error {
 public:
  using Error::Error;
};

// Mismatched vector dimensions (e.g. embeddings of different length).
class ShapeError : public Error {
 public:
  using Error::Error;
};

// An operation that needs at least one element got none.
class EmptyInputError : public Error {
 public:
  using Error::Error;
};

// Zero-norm embedding or other vector with no usable direction.
class InvalidEmbeddingError : public Error {
 public:
  using Error::Error;
};

// Too few samples for the requested statistic (e.g. stddev needs m >= 2).
class InsufficientSamplesError : public Error {
 public:
  using Error::Error;
};

// A record is missing a field the operation requires (loss, tokens, ...).
class IncompleteRecordError : public Error {
 public:
  using Error::Error;
};

// Division that the data made degenerate (e.g. zero reference tokens).
class DegenerateDivisionError : public Error {
 public:
  using Error::Error;
};

// Risk of an empty decision set is undefined.
class UndefinedRiskError : public Error {
 public:
  using Error::Error;
};

// Loss-oracle failure while drawing sample j; position kept for resumability.
class SampleDrawError : public Error {
 public:
  SampleDrawError(std::size_t position, const std::string& cause)
      : Error("sample draw " + std::to_string(position) + " failed: " + cause),
        position_(position) {}
  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

// HTTP-level failure after retries were exhausted.
class TransportError : public Error {
 public:
  using Error::Error;
};

// Endpoint answered but lacks a required capability (e.g. no logprobs).
class CapabilityError : public Error {
 public:
  using Error::Error;
};

// Malformed input file; carries the 1-based line number when known.
class IngestError : public Error {
 public:
  IngestError(const std::string& what, std::size_t line = 0)
      : Error(line ? what + " (line " + std::to_string(line) + ")" : what),
        line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// Bad configuration (flags, config files, incompatible policy/score kinds).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// A batch finished only partially; lists the ids that were not completed.
class PartialResultError : public Error {
 public:
  PartialResultError(const std::string& what, std::vector<std::string> unfinished)
      : Error(what), unfinished_(std::move(unfinished)) {}
  const std::vector<std::string>& unfinished_ids() const noexcept { return unfinished_; }

 private:
  std::vector<std::string> unfinished_;
};

}  // namespace pacr
