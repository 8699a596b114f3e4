#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "gfm/core.hpp"
#include "gfm/gamma_map.hpp"

namespace gfm {

// Pixel-to-pixel map from target to source coordinates (gather convention).
class Homography {
 public:
  Homography() : m_(Mat3::Identity()) {}
  // Scales so that h33 == 1 when |h33| > 1e-9; rejects |det| <= 1e-12.
  explicit Homography(const Mat3& m);

  const Mat3& matrix() const { return m_; }
  // Maps a target pixel; empty when the point lands on the line at infinity.
  std::optional<Pixel> apply(double u, double v) const;
  Homography operator*(const Homography& rhs) const { return Homography(m_ * rhs.m_); }

 private:
  Mat3 m_;
};

// Source coordinates for every target pixel. `defined` marks pixels whose
// mapping exists geometrically; `valid` additionally requires the sample to
// fall inside [0, src_width - 1] x [0, src_height - 1].
struct SamplingGrid {
  int width = 0;
  int height = 0;
  int src_width = 0;
  int src_height = 0;
  std::vector<double> u, v;
  std::vector<std::uint8_t> defined, valid;

  SamplingGrid() = default;
  SamplingGrid(int w, int h, int sw, int sh);

  std::size_t index(int x, int y) const { return static_cast<std::size_t>(y) * width + x; }
  // Stores a sample and derives validity from the source bounds.
  void set(int x, int y, double su, double sv);
  std::size_t valid_count() const;
};

SamplingGrid identity_grid(int width, int height);

Homography plane_homography(const RelativePose& pose, const PlaneModel& plane,
                            const CameraIntrinsics& K);

// Bilinear gather. A sample is valid only when every tap with non-zero
// weight is inside the image and valid; invalid outputs are zero-filled.
RgbImage bilinear_sample(const RgbImage& img, const SamplingGrid& grid);

SamplingGrid homography_grid(const Homography& H, int width, int height, int src_width,
                             int src_height);
RgbImage homography_warp(const RgbImage& source, const Homography& H);

// Samples `img` at p - flow(p): the flow carries content onto the output pixel.
SamplingGrid flow_grid(const FlowField& flow, int src_width, int src_height);
RgbImage flow_warp(const RgbImage& img, const FlowField& flow);

// p_s = K (R d K^-1 p_t + t); samples behind the source camera are undefined.
SamplingGrid depth_reprojection_grid(const ScalarField& depth_t, const RelativePose& pose,
                                     const CameraIntrinsics& K);

struct DecompositionReport {
  double max_discrepancy = 0.0;   // pixels
  std::size_t compared = 0;       // pixels entering the comparison
  ScalarField discrepancy;        // per pixel, invalid where not compared

  std::size_t within(double tolerance) const;
};

// Compares depth reprojection against homography warp followed by the
// residual-flow warp. Pixels within `epipole_radius` of the epipole are
// skipped. Throws DegenerateTranslation when T_z == 0.
DecompositionReport parallax_decomposition_check(const ScalarField& depth_t,
                                                 const ScalarField& gamma_t,
                                                 const PlaneModel& plane,
                                                 const RelativePose& pose,
                                                 const CameraIntrinsics& K,
                                                 double epipole_radius = 5.0);

}  // namespace gfm
