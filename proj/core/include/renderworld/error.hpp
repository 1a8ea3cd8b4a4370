#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace renderworld {

enum class ErrorCode {
  // core-domain
  UnknownActionKind,
  MissingPayload,
  OutOfViewport,
  InvalidArgument,
  // html-render
  NoDocumentFound,
  InvalidDocument,
  RendererUnavailable,
  RenderTimeout,
  DimensionMismatch,
  // prompting
  MissingSlot,
  ExtraSlot,
  ImageCountMismatch,
  PointOutOfBounds,
  UnknownTemplate,
  // backends
  Timeout,
  TransportError,
  HttpStatus,
  BackendFailure,
  StubMiss,
  DimensionMismatchEmbedding,
  // judges / rl / eval / select
  JudgeUnparseable,
  GroupTooSmall,
  DegenerateEmbedding,
  EmptyDataset,
  AgentUnparseable,
  EmptyProposalSet,
  // cli-storage
  ConfigInvalid,
  MissingBackend,
  CorpusCorrupt,
  IoError,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Exception carrying a stable machine-readable code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Transport-level HTTP failure; status is the response code.
class HttpStatusError : public Error {
 public:
  HttpStatusError(int status, const std::string& message)
      : Error(ErrorCode::HttpStatus, message), status_(status) {}

  int status() const noexcept { return status_; }

 private:
  int status_;
};

/// CLI exit code for an error: 2 config, 3 backend, 4 data.
int exit_code_for(ErrorCode code) noexcept;

}  // namespace renderworld
