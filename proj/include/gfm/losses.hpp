#pragma once

#include <optional>
#include <vector>

#include "gfm/core.hpp"
#include "gfm/planefit.hpp"

namespace gfm {

struct LossWeights {
  double alpha_ssim = 0.85;
  double lambda_norm = 0.1;
  double lambda_smooth = 1e-2;
  double theta_thres_deg = 5.0;

  void validate() const;
};

struct LossReport {
  double photo = 0.0;
  double homo = 0.0;
  double norm = 0.0;
  double smooth = 0.0;
  double total = 0.0;
  // Diagnostics; empty when the caller did not provide them.
  ScalarField photo_map;
  ScalarField homo_map;
  ScalarField automask;
};

// 3x3 box-window SSIM averaged over channels, C1 = 0.01^2, C2 = 0.03^2.
// Image borders use reflection padding; a pixel is valid only when every
// in-window tap is valid in both images.
ScalarField ssim(const RgbImage& a, const RgbImage& b);

// alpha (1 - SSIM) / 2 + (1 - alpha) |a - b|_1 (channel mean).
ScalarField photometric_error(const RgbImage& pred, const RgbImage& target, double alpha);

struct MinReprojection {
  ScalarField min_error;  // per-pixel minimum over warped sources
  ScalarField automask;   // 1 where the warped minimum beats the identity minimum
};

MinReprojection min_reprojection(const std::vector<ScalarField>& pe_maps,
                                 const std::vector<ScalarField>& identity_pe_maps);

// Mean of automask * min_error over pixels valid in min_error.
double masked_mean(const ScalarField& values, const ScalarField* weights = nullptr);

// Mean over valid pixels of M_road * pe(I_s^w, I_t).
double homography_loss(const RgbImage& warped_source, const RgbImage& target,
                       const ScalarField& road_mask, double alpha);

// [1 - cos d] + ReLU(cos theta_thres - cos d)^2 for unit inputs.
double normal_consistency(const Vec3& n_pred, const Vec3& n_ref, double theta_thres_deg);

// Edge-aware smoothness of the mean-normalized field (Monodepth-style).
double smoothness(const ScalarField& field, const RgbImage& guide);

struct LossComponents {
  double photo = 0.0;
  double homo = 0.0;
  double norm = 0.0;
  double smooth = 0.0;
};

LossReport total_loss(const LossComponents& components, const LossWeights& weights);

struct LossInputs {
  RgbImage target;
  std::vector<RgbImage> sources;
  std::vector<RelativePose> poses;      // target -> source, one per source
  std::vector<ScalarField> visibility;  // optional target-frame masks, 0 drops a pixel
  ScalarField gamma;                    // predicted gamma of the target view
  PlaneModel plane{Vec3(0.0, -1.0, 0.0), 1.65};  // predicted road plane
  Vec3 n_ref{0.0, -1.0, 0.0};
  CameraIntrinsics camera;
  LossWeights weights;
  RoadMaskConfig road_mask;
  bool automask = true;
};

// Full objective: each source is homography-warped with the plane, then
// moved by the gamma residual flow; photo uses the per-pixel minimum over
// sources (auto-masked against the unwarped sources), homo averages the
// road-masked homography-only error over sources.
LossReport evaluate_loss(const LossInputs& in);

}  // namespace gfm
