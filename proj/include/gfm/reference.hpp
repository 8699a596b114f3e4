#pragma once

#include "gfm/core.hpp"
#include "gfm/gamma_map.hpp"
#include "gfm/planefit.hpp"
#include "gfm/warp.hpp"

// Single-threaded versions of the parallel kernels. They follow the same
// per-pixel arithmetic, so outputs must match the parallel path bit for bit
// whatever the thread count.

namespace gfm::reference {

ScalarField depth_from_gamma(const ScalarField& gamma, const PlaneModel& plane,
                             const CameraIntrinsics& K);
ScalarField gamma_from_depth_plane(const ScalarField& depth, const PlaneModel& plane,
                                   const CameraIntrinsics& K);
FlowField residual_flow(const ScalarField& gamma, double t_z, double h_c, const Epipole& epi);
RgbImage bilinear_sample(const RgbImage& img, const SamplingGrid& grid);
ScalarField ssim(const RgbImage& a, const RgbImage& b);
NormalField local_normals(const ScalarField& depth, const CameraIntrinsics& K, int delta);
std::size_t count_inliers(const PlanePoints& pts, const Vec3& normal, double offset,
                          double threshold);

}  // namespace gfm::reference
