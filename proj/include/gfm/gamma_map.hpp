#pragma once

#include <utility>

#include "gfm/core.hpp"

namespace gfm {

// Pixels whose conversion denominator falls at or below this are invalid.
inline constexpr double kDenominatorEpsilon = 1e-6;

struct GammaRange {
  double gamma_min = -0.1;
  double gamma_max = 5.0;
  double alpha = 0.5;

  void validate() const;
};

struct Epipole {
  double u = 0.0;
  double v = 0.0;
  // Forward offset of the source camera centre in the target frame.
  double t_z = 0.0;
};

// Signed log-space output transform and its inverse.
double gamma_to_logspace(double gamma, double alpha);
double logspace_to_gamma(double gtilde, double alpha);
double sigmoid_to_gamma(double sigma, const GammaRange& range);

// d = h_c / (gamma + N_down . K^-1 p). Horizon and above-horizon pixels whose
// denominator is <= kDenominatorEpsilon come back invalid.
ScalarField depth_from_gamma(const ScalarField& gamma, const PlaneModel& plane,
                             const CameraIntrinsics& K);

ScalarField height_from_gamma(const ScalarField& gamma, const ScalarField& depth);

// gamma = (n . P + h_c) / D with P = D K^-1 p.
ScalarField gamma_from_depth_plane(const ScalarField& depth, const PlaneModel& plane,
                                   const CameraIntrinsics& K);

// Projection of the source camera centre into the target image.
Epipole epipole(const CameraIntrinsics& K, const RelativePose& pose);

// Height of the source camera centre above the road plane (equals h_c for
// motion parallel to the road).
double source_camera_height(const PlaneModel& plane, const RelativePose& pose);

struct FlowField {
  ScalarField u;
  ScalarField v;
};

// u_res = -(g T_z / h_c) / (1 - g T_z / h_c) * (p - e). The flow moves
// homography-aligned source content onto the target pixel; pixels whose
// guard 1 - g T_z / h_c drops below kDenominatorEpsilon are invalid.
FlowField residual_flow(const ScalarField& gamma, double t_z, double h_c, const Epipole& epi);

}  // namespace gfm
