#include "renderworld/similarity.hpp"

#include <algorithm>
#include <cmath>

#include "renderworld/error.hpp"

namespace renderworld {

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.empty())
    throw Error(ErrorCode::DegenerateEmbedding, "embedding lengths differ (" + std::to_string(a.size()) + " vs " +
                                                    std::to_string(b.size()) + ")");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) throw Error(ErrorCode::DegenerateEmbedding, "zero-norm embedding");
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

double map_similarity(double cosine, bool signed_output) noexcept {
  return signed_output ? (1.0 + cosine) / 2.0 : std::clamp(cosine, 0.0, 1.0);
}

double embedding_similarity(const UiState& pred, const UiState& gt, EmbeddingBackend& provider) {
  const auto a = provider.embed(pred);
  const auto b = provider.embed(gt);
  return map_similarity(cosine_similarity(a, b), provider.signed_output());
}

}  // namespace renderworld
