#pragma once

#include <span>

#include "renderworld/backends.hpp"

namespace renderworld {

/// Plain cosine; throws DegenerateEmbedding on a zero vector or length mismatch.
double cosine_similarity(std::span<const double> a, std::span<const double> b);

/// Maps a cosine onto [0,1]: (1+cos)/2 for signed providers, clamped raw otherwise.
double map_similarity(double cosine, bool signed_output) noexcept;

/// Embedding similarity of two screenshots in [0,1].
double embedding_similarity(const UiState& pred, const UiState& gt, EmbeddingBackend& provider);

}  // namespace renderworld
