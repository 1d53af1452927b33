#include "a2l/errors.hpp"

namespace a2l {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::MissingPath: return "MissingPath";
    case ErrorKind::MalformedRecord: return "MalformedRecord";
    case ErrorKind::InvariantViolation: return "InvariantViolation";
    case ErrorKind::IoFailure: return "IoFailure";
    case ErrorKind::SerializationFailure: return "SerializationFailure";
    case ErrorKind::Precondition: return "Precondition";
    case ErrorKind::ConfigError: return "ConfigError";
    case ErrorKind::EmptyChunk: return "EmptyChunk";
    case ErrorKind::NoListFound: return "NoListFound";
    case ErrorKind::BadArity: return "BadArity";
    case ErrorKind::NonNumeric: return "NonNumeric";
    case ErrorKind::GripperNotBinary: return "GripperNotBinary";
    case ErrorKind::SchemaViolation: return "SchemaViolation";
    case ErrorKind::ActionParseError: return "ActionParseError";
    case ErrorKind::CountMismatch: return "CountMismatch";
    case ErrorKind::ValueMismatch: return "ValueMismatch";
    case ErrorKind::AnnotationExhausted: return "AnnotationExhausted";
    case ErrorKind::TooFewSteps: return "TooFewSteps";
    case ErrorKind::WrongStage: return "WrongStage";
    case ErrorKind::UnknownField: return "UnknownField";
    case ErrorKind::Timeout: return "Timeout";
    case ErrorKind::RateLimited: return "RateLimited";
    case ErrorKind::ServerError: return "ServerError";
    case ErrorKind::Unauthorized: return "Unauthorized";
    case ErrorKind::CapabilityMissing: return "CapabilityMissing";
    case ErrorKind::ProtocolError: return "ProtocolError";
    case ErrorKind::ScriptExhausted: return "ScriptExhausted";
    case ErrorKind::BackendFailure: return "BackendFailure";
    case ErrorKind::ParseFailure: return "ParseFailure";
    case ErrorKind::EmptyPlan: return "EmptyPlan";
    case ErrorKind::VerdictParseFailure: return "VerdictParseFailure";
    case ErrorKind::EpisodeAborted: return "EpisodeAborted";
    case ErrorKind::UnknownEntity: return "UnknownEntity";
    case ErrorKind::EmptyInput: return "EmptyInput";
  }
  return "Unknown";
}

}  // namespace a2l
