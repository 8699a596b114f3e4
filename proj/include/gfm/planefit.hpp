#pragma once

#include <cstdint>
#include <utility>

#include "gfm/core.hpp"

namespace gfm {

// Trapezoid in normalized image coordinates (x, y in [0, 1], y down). The
// bottom edge sits on the last image row.
struct Trapezoid {
  double top_y = 0.55;
  double top_width = 0.4;
  double bottom_width = 1.0;
  double center_x = 0.5;

  bool contains(int x, int y, int width, int height) const;
  void validate() const;
};

struct RansacConfig {
  int iterations = 10000;
  double inlier_threshold = 0.01;  // meters
  std::uint64_t seed = 0;
  Trapezoid roi;
  double max_range = 80.0;  // meters
  bool refine = true;       // least-squares refit on the winning inlier set

  void validate() const;
};

// n . P + offset = 0, n unit length and oriented along the reference.
struct FittedPlane {
  Vec3 normal = Vec3::Zero();
  double offset = 0.0;
  std::size_t inlier_count = 0;
  double inlier_ratio = 0.0;

  bool operator==(const FittedPlane&) const = default;
  // Plane model for the gamma conversions; needs offset > 0 (camera above road).
  PlaneModel to_plane_model() const;
};

struct RoadMaskConfig {
  double theta_tol_deg = 5.0;
  double center_x = 0.5;   // normalized
  double center_y = 0.75;  // normalized from the top: 0.25 of the height above the bottom edge
  double sigma_w = 0.3;    // normalized to image width
  double sigma_h = 0.2;    // normalized to image height
  int normal_offset = 2;   // pixels
  Trapezoid roi;
  bool binarize = false;   // threshold at the median of non-zero ROI values

  void validate() const;
};

// Centered-difference normals of the backprojected depth with reflection
// padding; oriented towards the camera (n . P <= 0).
NormalField local_normals(const ScalarField& depth, const CameraIntrinsics& K, int delta);

// Candidate points after range and ROI pre-filtering (SoA, double).
struct PlanePoints {
  std::vector<double> x, y, z;
  std::size_t size() const { return x.size(); }
};

PlanePoints ransac_candidates(const ScalarField& depth, const CameraIntrinsics& K,
                              const RansacConfig& cfg);

// Number of points with |n . P + offset| < threshold.
std::size_t count_inliers(const PlanePoints& pts, const Vec3& normal, double offset,
                          double threshold);

FittedPlane ransac_plane(const ScalarField& depth, const CameraIntrinsics& K,
                         const RansacConfig& cfg, const Vec3& n_ref);
FittedPlane ransac_plane(const PlanePoints& pts, const RansacConfig& cfg, const Vec3& n_ref);

std::pair<ScalarField, FittedPlane> gamma_from_depth_ransac(const ScalarField& depth,
                                                            const CameraIntrinsics& K,
                                                            const RansacConfig& cfg,
                                                            const Vec3& n_ref);

// Angle in radians between each local normal and the global normal.
ScalarField angular_deviation(const NormalField& normals, const Vec3& n_pred);

ScalarField road_probability(const ScalarField& theta, const RoadMaskConfig& cfg);
ScalarField gaussian_prior(int width, int height, const RoadMaskConfig& cfg);
ScalarField road_mask(const ScalarField& depth, const CameraIntrinsics& K, const Vec3& n_pred,
                      const RoadMaskConfig& cfg);

}  // namespace gfm
