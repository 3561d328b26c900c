#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace curate {

// Coarse failure class; maps one-to-one onto CLI exit codes.
enum class ErrorCategory { Config = 1, Io = 2, Data = 3 };

enum class ErrorCode {
  InvalidArgument,
  MalformedLine,
  DuplicateId,
  UnsupportedSchema,
  EmptyImage,
  ImageTooSmall,
  MissingScore,
  InvalidThresholds,
  InvalidPattern,
  MissingEmbedding,
  Cycle,
  OrphanNode,
  DimensionMismatch,
  EmptyVocabulary,
  CandidateNotInTree,
  InvalidSchedule,
  TargetExceedsAvailable,
  PoolTooSmall,
  MissingSentinelAnnotation,
  MissingJudgment,
  EmptyBatch,
  AllRatiosZero,
  EmptyDataset,
  ScorerFailure,
  Config,
  Io,
};

constexpr std::string_view to_string(ErrorCode c) {
  switch (c) {
    case ErrorCode::InvalidArgument: return "invalid_argument";
    case ErrorCode::MalformedLine: return "malformed_line";
    case ErrorCode::DuplicateId: return "duplicate_id";
    case ErrorCode::UnsupportedSchema: return "unsupported_schema";
    case ErrorCode::EmptyImage: return "empty_image";
    case ErrorCode::ImageTooSmall: return "image_too_small";
    case ErrorCode::MissingScore: return "missing_score";
    case ErrorCode::InvalidThresholds: return "invalid_thresholds";
    case ErrorCode::InvalidPattern: return "invalid_pattern";
    case ErrorCode::MissingEmbedding: return "missing_embedding";
    case ErrorCode::Cycle: return "cycle";
    case ErrorCode::OrphanNode: return "orphan_node";
    case ErrorCode::DimensionMismatch: return "dimension_mismatch";
    case ErrorCode::EmptyVocabulary: return "empty_vocabulary";
    case ErrorCode::CandidateNotInTree: return "candidate_not_in_tree";
    case ErrorCode::InvalidSchedule: return "invalid_schedule";
    case ErrorCode::TargetExceedsAvailable: return "target_exceeds_available";
    case ErrorCode::PoolTooSmall: return "pool_too_small";
    case ErrorCode::MissingSentinelAnnotation: return "missing_sentinel_annotation";
    case ErrorCode::MissingJudgment: return "missing_judgment";
    case ErrorCode::EmptyBatch: return "empty_batch";
    case ErrorCode::AllRatiosZero: return "all_ratios_zero";
    case ErrorCode::EmptyDataset: return "empty_dataset";
    case ErrorCode::ScorerFailure: return "scorer_failure";
    case ErrorCode::Config: return "config";
    case ErrorCode::Io: return "io";
  }
  return "unknown";
}

constexpr ErrorCategory category_of(ErrorCode c) {
  switch (c) {
    case ErrorCode::Config:
    case ErrorCode::InvalidThresholds:
    case ErrorCode::InvalidPattern:
    case ErrorCode::InvalidSchedule:
    case ErrorCode::UnsupportedSchema:
      return ErrorCategory::Config;
    case ErrorCode::Io:
      return ErrorCategory::Io;
    default:
      return ErrorCategory::Data;
  }
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }
  ErrorCategory category() const noexcept { return category_of(code_); }

 private:
  ErrorCode code_;
};

}  // namespace curate
