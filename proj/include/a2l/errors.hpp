#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace a2l {

/// Error classes shared by every module. The CLI maps them onto stable exit codes.
enum class ErrorKind {
  // core-model
  MissingPath,
  MalformedRecord,
  InvariantViolation,
  IoFailure,
  SerializationFailure,
  Precondition,
  ConfigError,
  // action-codec
  EmptyChunk,
  NoListFound,
  BadArity,
  NonNumeric,
  GripperNotBinary,
  // annotation-pipeline
  SchemaViolation,
  ActionParseError,
  CountMismatch,
  ValueMismatch,
  AnnotationExhausted,
  TooFewSteps,
  // sft-export
  WrongStage,
  UnknownField,
  // backend-client
  Timeout,
  RateLimited,
  ServerError,
  Unauthorized,
  CapabilityMissing,
  ProtocolError,
  ScriptExhausted,
  BackendFailure,
  // rollout-orchestrator
  ParseFailure,
  EmptyPlan,
  VerdictParseFailure,
  EpisodeAborted,
  // eval-harness
  UnknownEntity,
  EmptyInput,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Malformed line in a newline-delimited dataset file (1-based line number).
class MalformedRecordError : public Error {
 public:
  MalformedRecordError(std::size_t line, const std::string& reason)
      : Error(ErrorKind::MalformedRecord, "line " + std::to_string(line) + ": " + reason),
        line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class BadArityError : public Error {
 public:
  BadArityError(std::size_t inner_index, std::size_t got)
      : Error(ErrorKind::BadArity, "inner list " + std::to_string(inner_index) + " has " +
                                       std::to_string(got) + " fields, expected 4"),
        inner_index_(inner_index) {}
  std::size_t inner_index() const noexcept { return inner_index_; }

 private:
  std::size_t inner_index_;
};

class CountMismatchError : public Error {
 public:
  CountMismatchError(std::size_t expected, std::size_t got)
      : Error(ErrorKind::CountMismatch, "expected " + std::to_string(expected) +
                                            " actions, annotation has " + std::to_string(got)),
        expected_(expected),
        got_(got) {}
  std::size_t expected() const noexcept { return expected_; }
  std::size_t got() const noexcept { return got_; }

 private:
  std::size_t expected_;
  std::size_t got_;
};

class ValueMismatchError : public Error {
 public:
  ValueMismatchError(std::size_t flat_index, int axis, double delta)
      : Error(ErrorKind::ValueMismatch, "action " + std::to_string(flat_index) + " axis " +
                                            std::to_string(axis) + " differs by " +
                                            std::to_string(delta)),
        flat_index_(flat_index),
        axis_(axis),
        delta_(delta) {}
  std::size_t flat_index() const noexcept { return flat_index_; }
  int axis() const noexcept { return axis_; }
  double delta() const noexcept { return delta_; }

 private:
  std::size_t flat_index_;
  int axis_;
  double delta_;
};

}  // namespace a2l
