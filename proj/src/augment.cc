// Copyright 2026 The c3kit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cmath>
#include <numbers>
#include <random>

#include "c3/dataset.h"
#include "c3/error.h"
#include "c3/util.h"

namespace c3 {
namespace {

// Deterministic draws: the standard distributions are implementation
// defined, the engine's raw output is not.
class Draws {
 public:
  explicit Draws(uint64_t seed) : engine_(seed) {}

  double Uniform(double lo, double hi) {
    return lo + (hi - lo) * UnitInterval(engine_());
  }
  int Index(int n) {
    return static_cast<int>(UnitInterval(engine_()) * n);
  }

 private:
  std::mt19937_64 engine_;
};

uint8_t Clamp8(double v) {
  return static_cast<uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

double Gray(const Image& img, int x, int y) {
  if (img.channels < 3) return img.at(x, y, 0);
  return 0.299 * img.at(x, y, 0) + 0.587 * img.at(x, y, 1) +
         0.114 * img.at(x, y, 2);
}

void ApplyJitter(Image& img, const JitterParams& jitter, Draws& draws) {
  const double brightness =
      jitter.brightness > 0
          ? draws.Uniform(1 - jitter.brightness, 1 + jitter.brightness)
          : 1.0;
  const double contrast =
      jitter.contrast > 0 ? draws.Uniform(1 - jitter.contrast, 1 + jitter.contrast)
                          : 1.0;
  const double saturation =
      jitter.saturation > 0
          ? draws.Uniform(1 - jitter.saturation, 1 + jitter.saturation)
          : 1.0;
  if (brightness == 1.0 && contrast == 1.0 && saturation == 1.0) return;

  const int color_channels = std::min(img.channels, 3);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      for (int c = 0; c < color_channels; ++c) {
        img.at(x, y, c) = Clamp8(img.at(x, y, c) * brightness);
      }
    }
  }
  double mean = 0.0;
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) mean += Gray(img, x, y);
  }
  mean /= std::max<double>(1.0, static_cast<double>(img.width) * img.height);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      for (int c = 0; c < color_channels; ++c) {
        img.at(x, y, c) = Clamp8((img.at(x, y, c) - mean) * contrast + mean);
      }
      if (color_channels == 3) {
        const double gray = Gray(img, x, y);
        for (int c = 0; c < 3; ++c) {
          img.at(x, y, c) = Clamp8(gray + (img.at(x, y, c) - gray) * saturation);
        }
      }
    }
  }
}

Image CropImage(const Image& img, const CropRect& r) {
  Image out(r.x1 - r.x0, r.y1 - r.y0, img.channels);
  for (int y = 0; y < out.height; ++y) {
    const uint8_t* src = &img.pixels[(static_cast<size_t>(y + r.y0) * img.width + r.x0) *
                                     img.channels];
    std::copy(src, src + static_cast<size_t>(out.width) * img.channels,
              &out.pixels[static_cast<size_t>(y) * out.width * img.channels]);
  }
  return out;
}

Image RotateRightAngle(const Image& img, int quarter_turns) {
  const bool swap = quarter_turns % 2 == 1;
  Image out(swap ? img.height : img.width, swap ? img.width : img.height,
            img.channels);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      Eigen::Vector2d p(x, y);
      switch (quarter_turns) {
        case 1: p = RotateCcw90(p, img.width); break;
        case 2: p = RotateCcw180(p, img.width, img.height); break;
        case 3: p = RotateCcw270(p, img.height); break;
        default: break;
      }
      for (int c = 0; c < img.channels; ++c) {
        out.at(static_cast<int>(p.x()), static_cast<int>(p.y()), c) = img.at(x, y, c);
      }
    }
  }
  return out;
}

// Rigid rotation by `angle` (counter-clockwise as displayed, y down) about
// the canvas center, onto an expanded canvas.
struct ArbitraryRotation {
  double cos_a = 1.0;
  double sin_a = 0.0;
  Eigen::Vector2d center_in;
  Eigen::Vector2d center_out;
  int width = 0;
  int height = 0;

  ArbitraryRotation(int w, int h, double angle) {
    cos_a = std::cos(angle);
    sin_a = std::sin(angle);
    // Snap round-off so right angles keep integral canvas sizes.
    const double ac = std::abs(cos_a) < 1e-12 ? 0.0 : std::abs(cos_a);
    const double as = std::abs(sin_a) < 1e-12 ? 0.0 : std::abs(sin_a);
    width = static_cast<int>(std::ceil(w * ac + h * as - 1e-9));
    height = static_cast<int>(std::ceil(w * as + h * ac - 1e-9));
    width = std::max(width, 1);
    height = std::max(height, 1);
    center_in = {(w - 1) / 2.0, (h - 1) / 2.0};
    center_out = {(width - 1) / 2.0, (height - 1) / 2.0};
  }

  Eigen::Vector2d Forward(const Eigen::Vector2d& p) const {
    const Eigen::Vector2d d = p - center_in;
    return center_out +
           Eigen::Vector2d(cos_a * d.x() + sin_a * d.y(), -sin_a * d.x() + cos_a * d.y());
  }

  Eigen::Vector2d Backward(const Eigen::Vector2d& q) const {
    const Eigen::Vector2d d = q - center_out;
    return center_in +
           Eigen::Vector2d(cos_a * d.x() - sin_a * d.y(), sin_a * d.x() + cos_a * d.y());
  }
};

Image RotateArbitrary(const Image& img, const ArbitraryRotation& rot, uint8_t fill) {
  Image out(rot.width, rot.height, img.channels, fill);
  for (int y = 0; y < out.height; ++y) {
    for (int x = 0; x < out.width; ++x) {
      const Eigen::Vector2d src = rot.Backward(Eigen::Vector2d(x, y));
      const double fx = std::floor(src.x());
      const double fy = std::floor(src.y());
      const double ax = src.x() - fx;
      const double ay = src.y() - fy;
      const int x0 = static_cast<int>(fx);
      const int y0 = static_cast<int>(fy);
      if (x0 < -1 || y0 < -1 || x0 >= img.width || y0 >= img.height) continue;
      for (int c = 0; c < img.channels; ++c) {
        auto sample = [&](int sx, int sy) -> double {
          if (sx < 0 || sy < 0 || sx >= img.width || sy >= img.height) return fill;
          return img.at(sx, sy, c);
        };
        const double v = (1 - ax) * (1 - ay) * sample(x0, y0) +
                         ax * (1 - ay) * sample(x0 + 1, y0) +
                         (1 - ax) * ay * sample(x0, y0 + 1) +
                         ax * ay * sample(x0 + 1, y0 + 1);
        out.at(x, y, c) = Clamp8(v);
      }
    }
  }
  return out;
}

}  // namespace

Eigen::Vector2d RotateCcw90(const Eigen::Vector2d& p, int width) {
  return {p.y(), width - 1 - p.x()};
}

Eigen::Vector2d RotateCcw180(const Eigen::Vector2d& p, int width, int height) {
  return {width - 1 - p.x(), height - 1 - p.y()};
}

Eigen::Vector2d RotateCcw270(const Eigen::Vector2d& p, int height) {
  return {height - 1 - p.y(), p.x()};
}

AugmentResult AugmentPlan(const Image& plan, const CorrespondenceSet& records,
                          const AugmentParams& params, uint64_t seed) {
  if (plan.width <= 0 || plan.height <= 0 ||
      plan.pixels.size() != static_cast<size_t>(plan.width) * plan.height * plan.channels) {
    Fail(ErrorCode::kDimensionMismatch, "plan image buffer is inconsistent");
  }
  if (static_cast<double>(plan.width) != records.plan_width ||
      static_cast<double>(plan.height) != records.plan_height) {
    Fail(ErrorCode::kDimensionMismatch,
         "plan image is " + std::to_string(plan.width) + "x" +
             std::to_string(plan.height) + " but records expect " +
             FormatDouble(records.plan_width) + "x" +
             FormatDouble(records.plan_height));
  }

  Draws draws(seed);
  AugmentResult result{plan, records, 0.0};
  ApplyJitter(result.image, params.jitter, draws);

  std::optional<CropRect> crop = params.crop_rect;
  if (!crop && params.crop_fraction) {
    const double f = *params.crop_fraction;
    if (!(f > 0 && f <= 1)) {
      Fail(ErrorCode::kInvalidArgument, "crop fraction must be in (0, 1]");
    }
    const int w = std::max(1, static_cast<int>(std::lround(plan.width * f)));
    const int h = std::max(1, static_cast<int>(std::lround(plan.height * f)));
    const int x0 = draws.Index(plan.width - w + 1);
    const int y0 = draws.Index(plan.height - h + 1);
    crop = CropRect{x0, y0, x0 + w, y0 + h};
  }
  if (crop) {
    const CropRect r = *crop;
    if (r.x0 < 0 || r.y0 < 0 || r.x1 > plan.width || r.y1 > plan.height ||
        r.x0 >= r.x1 || r.y0 >= r.y1) {
      Fail(ErrorCode::kInvalidArgument, "crop rectangle outside the plan");
    }
    result.image = CropImage(result.image, r);
    const Eigen::Vector2d origin(r.x0, r.y0);
    std::vector<Correspondence> kept;
    for (Correspondence c : result.records.records) {
      const Eigen::Vector2d& p = c.plan_xy;
      if (p.x() >= r.x0 && p.x() < r.x1 && p.y() >= r.y0 && p.y() < r.y1) {
        c.plan_xy -= origin;
        kept.push_back(c);
      }
    }
    if (kept.empty()) {
      Fail(ErrorCode::kEmptyAfterCrop, "no correspondence survives the crop");
    }
    result.records.records = std::move(kept);
    result.records.plan_pose.position -= origin;
    result.records.plan_width = r.x1 - r.x0;
    result.records.plan_height = r.y1 - r.y0;
  }

  RotationChoice rotation = params.rotation;
  if (rotation == RotationChoice::kRandomRightAngle) {
    constexpr RotationChoice kChoices[] = {RotationChoice::kNone, RotationChoice::kCcw90,
                                           RotationChoice::kCcw180, RotationChoice::kCcw270};
    rotation = kChoices[draws.Index(4)];
  }

  const int w = result.image.width;
  const int h = result.image.height;
  CorrespondenceSet& out = result.records;
  auto map_all = [&](auto&& fn) {
    for (Correspondence& c : out.records) c.plan_xy = fn(c.plan_xy);
    out.plan_pose.position = fn(out.plan_pose.position);
  };
  double angle_deg = 0.0;
  switch (rotation) {
    case RotationChoice::kNone:
    case RotationChoice::kRandomRightAngle:
      break;
    case RotationChoice::kCcw90:
      angle_deg = 90;
      map_all([&](const Eigen::Vector2d& p) { return RotateCcw90(p, w); });
      result.image = RotateRightAngle(result.image, 1);
      break;
    case RotationChoice::kCcw180:
      angle_deg = 180;
      map_all([&](const Eigen::Vector2d& p) { return RotateCcw180(p, w, h); });
      result.image = RotateRightAngle(result.image, 2);
      break;
    case RotationChoice::kCcw270:
      angle_deg = 270;
      map_all([&](const Eigen::Vector2d& p) { return RotateCcw270(p, h); });
      result.image = RotateRightAngle(result.image, 3);
      break;
    case RotationChoice::kArbitrary: {
      angle_deg = draws.Uniform(-params.max_rotation_deg, params.max_rotation_deg);
      const ArbitraryRotation rot(w, h, angle_deg * std::numbers::pi / 180.0);
      map_all([&](const Eigen::Vector2d& p) { return rot.Forward(p); });
      result.image = RotateArbitrary(result.image, rot, params.fill);
      break;
    }
  }
  if (angle_deg != 0.0) {
    // The plan turns counter-clockwise on screen, i.e. by -angle in the
    // y-down frame used for headings.
    out.plan_pose.heading =
        NormalizeAngle(out.plan_pose.heading - angle_deg * std::numbers::pi / 180.0);
  }
  result.rotation_deg = angle_deg;
  out.plan_width = result.image.width;
  out.plan_height = result.image.height;
  out.plan_pose.normalized_position = out.plan_pose.position.cwiseQuotient(
      Eigen::Vector2d(out.plan_width, out.plan_height));
  return result;
}

}  // namespace c3
