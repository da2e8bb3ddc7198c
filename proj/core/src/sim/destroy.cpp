#include "biaslens/sim/destroy.hpp"

#include <numeric>
#include <string>

#include "biaslens/error.hpp"

namespace biaslens::sim {

std::string_view destroy_name(DestroyKind kind) {
  switch (kind) {
    case DestroyKind::BlockPermute: return "block-permute";
    case DestroyKind::PatchShuffle: return "patch-shuffle";
    case DestroyKind::PixelShuffle: return "pixel-shuffle";
    case DestroyKind::CenterOcclusion: return "center-occlusion";
    case DestroyKind::WordShuffle: return "word-shuffle";
  }
  return "?";
}

std::optional<DestroyKind> parse_destroy(std::string_view name) {
  for (auto kind : {DestroyKind::BlockPermute, DestroyKind::PatchShuffle, DestroyKind::PixelShuffle,
                    DestroyKind::CenterOcclusion, DestroyKind::WordShuffle}) {
    if (destroy_name(kind) == name) return kind;
  }
  return std::nullopt;
}

void block_permute(FeatureBatch& batch, std::size_t begin, std::size_t end, Rng& rng) {
  if (begin > end || end > batch.cols || batch.values.size() != batch.rows * batch.cols) {
    throw Error(ErrorCode::InvalidParams, "block [" + std::to_string(begin) + ", " +
                                              std::to_string(end) + ") outside batch of width " +
                                              std::to_string(batch.cols));
  }
  std::vector<std::size_t> perm(batch.rows);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  rng.shuffle(std::span<std::size_t>(perm));

  const std::vector<double> source = batch.values;
  for (std::size_t r = 0; r < batch.rows; ++r) {
    const double* from = source.data() + perm[r] * batch.cols;
    double* to = batch.values.data() + r * batch.cols;
    for (std::size_t c = begin; c < end; ++c) to[c] = from[c];
  }
}

namespace {

void check_image(const Image& image) {
  if (image.height == 0 || image.width == 0 || image.channels == 0 ||
      image.pixels.size() != image.height * image.width * image.channels) {
    throw Error(ErrorCode::InvalidParams, "image buffer does not match its shape");
  }
}

}  // namespace

void patch_shuffle(Image& image, std::size_t patch, Rng& rng) {
  check_image(image);
  if (patch == 0 || image.height % patch != 0 || image.width % patch != 0) {
    throw Error(ErrorCode::InvalidParams,
                "patch size " + std::to_string(patch) + " does not divide the image");
  }
  const std::size_t tiles_y = image.height / patch;
  const std::size_t tiles_x = image.width / patch;
  std::vector<std::size_t> perm(tiles_y * tiles_x);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  rng.shuffle(std::span<std::size_t>(perm));

  const Image source = image;
  for (std::size_t tile = 0; tile < perm.size(); ++tile) {
    const std::size_t dst_y = (tile / tiles_x) * patch;
    const std::size_t dst_x = (tile % tiles_x) * patch;
    const std::size_t src_y = (perm[tile] / tiles_x) * patch;
    const std::size_t src_x = (perm[tile] % tiles_x) * patch;
    for (std::size_t dy = 0; dy < patch; ++dy) {
      for (std::size_t dx = 0; dx < patch; ++dx) {
        for (std::size_t c = 0; c < image.channels; ++c) {
          image.at(dst_y + dy, dst_x + dx, c) = source.at(src_y + dy, src_x + dx, c);
        }
      }
    }
  }
}

void pixel_shuffle(Image& image, Rng& rng) {
  check_image(image);
  std::vector<std::size_t> perm(image.height * image.width);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  rng.shuffle(std::span<std::size_t>(perm));
  const std::vector<double> source = image.pixels;
  for (std::size_t i = 0; i < perm.size(); ++i) {
    for (std::size_t c = 0; c < image.channels; ++c) {
      image.pixels[i * image.channels + c] = source[perm[i] * image.channels + c];
    }
  }
}

void center_occlusion(Image& image, std::size_t side) {
  check_image(image);
  if (side > image.height || side > image.width) {
    throw Error(ErrorCode::InvalidParams, "occlusion side exceeds image");
  }
  const std::size_t y0 = (image.height - side) / 2;
  const std::size_t x0 = (image.width - side) / 2;
  for (std::size_t y = y0; y < y0 + side; ++y) {
    for (std::size_t x = x0; x < x0 + side; ++x) {
      for (std::size_t c = 0; c < image.channels; ++c) image.at(y, x, c) = 0.0;
    }
  }
}

void word_shuffle(std::vector<std::string>& tokens, Rng& rng) {
  rng.shuffle(std::span<std::string>(tokens));
}

}  // namespace biaslens::sim
