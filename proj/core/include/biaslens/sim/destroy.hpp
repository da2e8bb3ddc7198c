#pragma once

// Target-feature destruction transforms. Every transform is deterministic
// given the Rng state it is handed.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "biaslens/rng.hpp"

namespace biaslens::sim {

enum class DestroyKind { BlockPermute, PatchShuffle, PixelShuffle, CenterOcclusion, WordShuffle };

std::string_view destroy_name(DestroyKind kind);
std::optional<DestroyKind> parse_destroy(std::string_view name);

// Batch of feature vectors, row-major [rows x cols].
struct FeatureBatch {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;
};

// Applies one shared row permutation to columns [begin, end): each row keeps
// its other columns but receives the block of another row. Throws
// InvalidParams when the block is out of bounds.
void block_permute(FeatureBatch& batch, std::size_t begin, std::size_t end, Rng& rng);

// Channel-interleaved (HWC) image.
struct Image {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t channels = 1;
  std::vector<double> pixels;

  double& at(std::size_t y, std::size_t x, std::size_t c) {
    return pixels[(y * width + x) * channels + c];
  }
  double at(std::size_t y, std::size_t x, std::size_t c) const {
    return pixels[(y * width + x) * channels + c];
  }
};

// Splits the image into patch x patch tiles and permutes them. Patch size must
// divide both sides; patch == side is the identity.
void patch_shuffle(Image& image, std::size_t patch, Rng& rng);

// Permutes pixel positions (channels of one pixel move together).
void pixel_shuffle(Image& image, Rng& rng);

// Zeros a centered side x side square. side must not exceed either dimension.
void center_occlusion(Image& image, std::size_t side);

void word_shuffle(std::vector<std::string>& tokens, Rng& rng);

}  // namespace biaslens::sim
