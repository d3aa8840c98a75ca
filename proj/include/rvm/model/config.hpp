#pragma once

#include <stdexcept>
#include <string>

namespace rvm::model {

// Fusion-architecture variants. Exactly one applies to a network instance.
enum class Variant { kProposed, kEarlyFusion, kNoTransformer, kGlobalEgo };

inline Variant variant_from_string(const std::string& s) {
  if (s == "proposed") return Variant::kProposed;
  if (s == "early_fusion") return Variant::kEarlyFusion;
  if (s == "no_transformer") return Variant::kNoTransformer;
  if (s == "global_ego") return Variant::kGlobalEgo;
  throw std::invalid_argument("unknown model variant: " + s);
}

inline std::string to_string(Variant v) {
  switch (v) {
    case Variant::kProposed: return "proposed";
    case Variant::kEarlyFusion: return "early_fusion";
    case Variant::kNoTransformer: return "no_transformer";
    case Variant::kGlobalEgo: return "global_ego";
  }
  return "?";
}

struct ModelConfig {
  int sweep_count = 5;     // past sweeps including the current one
  int object_classes = 1;  // classes excluding background
  int horizon = 6;         // future steps T
  int input_channels = 3;  // raster channels fed per sweep
  int encoder_channels = 8;
  int backbone_channels = 16;
  Variant variant = Variant::kProposed;
  double range_scale = 0.02;  // range-channel normalization at input assembly

  int total_classes() const { return object_classes + 1; }
  // Per-pixel head output: class logits, box size, and per step
  // (dx, dy, wx, wy, sx, sy).
  int output_channels() const { return total_classes() + 2 + 6 * (horizon + 1); }
  int regression_offset() const { return total_classes(); }

  void validate() const {
    if (sweep_count < 1) throw std::invalid_argument("ModelConfig: sweep_count must be >= 1");
    if (object_classes < 1) throw std::invalid_argument("ModelConfig: need >= 1 object class");
    if (horizon < 1) throw std::invalid_argument("ModelConfig: horizon must be >= 1");
    if (input_channels < 1 || encoder_channels < 1 || backbone_channels < 1)
      throw std::invalid_argument("ModelConfig: channel counts must be >= 1");
    if (range_scale <= 0) throw std::invalid_argument("ModelConfig: range_scale must be > 0");
  }
};

}  // namespace rvm::model
