#pragma once

#include <cstdint>

#include "dppn/data_io.hpp"

namespace dppn {

// Deterministic stroke-rasterized handwritten-style digits: a stand-in
// corpus with MNIST-like ink statistics for demos and tests when no dataset
// is on disk.  Digits cycle 0-9 with per-image jitter (affine warp, control
// point noise, pen width and intensity variation).
ImageDataset synth_digits(int n, std::uint64_t seed);

// Random multi-stroke glyphs in the same style; used as a stand-in for a
// held-out character set in generalization checks.
ImageDataset synth_glyphs(int n, std::uint64_t seed);

}  // namespace dppn
