#include "renderworld/error.hpp"

namespace renderworld {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::UnknownActionKind: return "UnknownActionKind";
    case ErrorCode::MissingPayload: return "MissingPayload";
    case ErrorCode::OutOfViewport: return "OutOfViewport";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::NoDocumentFound: return "NoDocumentFound";
    case ErrorCode::InvalidDocument: return "InvalidDocument";
    case ErrorCode::RendererUnavailable: return "RendererUnavailable";
    case ErrorCode::RenderTimeout: return "RenderTimeout";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::MissingSlot: return "MissingSlot";
    case ErrorCode::ExtraSlot: return "ExtraSlot";
    case ErrorCode::ImageCountMismatch: return "ImageCountMismatch";
    case ErrorCode::PointOutOfBounds: return "PointOutOfBounds";
    case ErrorCode::UnknownTemplate: return "UnknownTemplate";
    case ErrorCode::Timeout: return "Timeout";
    case ErrorCode::TransportError: return "TransportError";
    case ErrorCode::HttpStatus: return "HttpStatus";
    case ErrorCode::BackendFailure: return "BackendFailure";
    case ErrorCode::StubMiss: return "StubMiss";
    case ErrorCode::DimensionMismatchEmbedding: return "EmbeddingDimensionMismatch";
    case ErrorCode::JudgeUnparseable: return "JudgeUnparseable";
    case ErrorCode::GroupTooSmall: return "GroupTooSmall";
    case ErrorCode::DegenerateEmbedding: return "DegenerateEmbedding";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::AgentUnparseable: return "AgentUnparseable";
    case ErrorCode::EmptyProposalSet: return "EmptyProposalSet";
    case ErrorCode::ConfigInvalid: return "ConfigInvalid";
    case ErrorCode::MissingBackend: return "MissingBackend";
    case ErrorCode::CorpusCorrupt: return "CorpusCorrupt";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

int exit_code_for(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::ConfigInvalid:
    case ErrorCode::MissingBackend:
    case ErrorCode::UnknownTemplate:
      return 2;
    case ErrorCode::Timeout:
    case ErrorCode::TransportError:
    case ErrorCode::HttpStatus:
    case ErrorCode::BackendFailure:
    case ErrorCode::StubMiss:
    case ErrorCode::DimensionMismatchEmbedding:
    case ErrorCode::RendererUnavailable:
    case ErrorCode::RenderTimeout:
    case ErrorCode::JudgeUnparseable:
    case ErrorCode::AgentUnparseable:
      return 3;
    default:
      return 4;
  }
}

}  // namespace renderworld
