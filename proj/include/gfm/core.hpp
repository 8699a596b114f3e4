#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "gfm/error.hpp"

namespace gfm {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

// Camera frame: x right, y down, z forward. Pixel centres sit at integer
// coordinates, so K maps (u, v) = (0, 0) to the top-left pixel centre.
struct CameraIntrinsics {
  double fx = 0.0;
  double fy = 0.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 0;
  int height = 0;

  static CameraIntrinsics make(double fx, double fy, double cx, double cy,
                               int width, int height);

  Mat3 matrix() const;
  Mat3 inverse() const;

  // K^-1 [u, v, 1]^T; the z component is always 1.
  Vec3 ray(double u, double v) const {
    return {(u - cx) / fx, (v - cy) / fy, 1.0};
  }

  void validate() const;
};

struct Pixel {
  double u = 0.0;
  double v = 0.0;
};

// T_{t->s}: maps a point in the target frame into the source frame,
// P_s = rotation * P_t + translation.
class RelativePose {
 public:
  RelativePose() : rotation_(Mat3::Identity()), translation_(Vec3::Zero()) {}
  RelativePose(const Mat3& rotation, const Vec3& translation);

  static RelativePose identity() { return {}; }
  // Rotation from an axis-angle vector (radians) followed by translation.
  static RelativePose from_axis_angle(const Vec3& axis_angle,
                                      const Vec3& translation);

  const Mat3& rotation() const { return rotation_; }
  const Vec3& translation() const { return translation_; }

  Vec3 apply(const Vec3& p) const { return rotation_ * p + translation_; }
  RelativePose inverse() const;
  // (a * b).apply(p) == a.apply(b.apply(p))
  RelativePose operator*(const RelativePose& rhs) const;

  // Source camera centre expressed in the target frame, -R^T t.
  Vec3 source_center() const { return -rotation_.transpose() * translation_; }

 private:
  Mat3 rotation_;
  Vec3 translation_;
};

// Road plane in camera coordinates. The stored normal points up (away from
// the road, towards the camera side); road points satisfy n . P = -h_c and
// the height of any point above the road is n . P + h_c.
class PlaneModel {
 public:
  PlaneModel(const Vec3& normal, double camera_height);

  const Vec3& normal() const { return normal_; }
  Vec3 down() const { return -normal_; }
  double camera_height() const { return camera_height_; }

  double height_of(const Vec3& p) const { return normal_.dot(p) + camera_height_; }
  PlaneModel with_camera_height(double camera_height) const {
    return {normal_, camera_height};
  }

 private:
  Vec3 normal_;
  double camera_height_;
};

enum class FieldRole { Generic, Gamma, Depth, Height, Mask, FlowU, FlowV };

const char* to_string(FieldRole role);

// Single-channel float map with an explicit per-pixel validity flag.
// Invalid pixels always store 0 so that equality of fields is well defined.
class ScalarField {
 public:
  ScalarField() = default;
  // All pixels invalid.
  ScalarField(int width, int height, FieldRole role);

  static ScalarField filled(int width, int height, FieldRole role, float value);

  int width() const { return width_; }
  int height() const { return height_; }
  FieldRole role() const { return role_; }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  float at(int x, int y) const { return values_[index(x, y)]; }
  bool valid(int x, int y) const { return valid_[index(x, y)] != 0; }
  float operator[](std::size_t i) const { return values_[i]; }
  bool valid(std::size_t i) const { return valid_[i] != 0; }

  // Stores a value and marks it valid. Non-finite values, and non-positive
  // values in a Depth field, mark the pixel invalid instead. Mask values
  // outside [0, 1] are rejected.
  void set(int x, int y, float value) { set(index(x, y), value); }
  void set(std::size_t i, float value);
  void invalidate(int x, int y) { invalidate(index(x, y)); }
  void invalidate(std::size_t i) {
    values_[i] = 0.0f;
    valid_[i] = 0;
  }

  std::span<const float> values() const { return values_; }
  std::span<const std::uint8_t> validity() const { return valid_; }
  std::size_t valid_count() const;

  ScalarField with_role(FieldRole role) const;
  bool same_shape(const ScalarField& other) const {
    return width_ == other.width_ && height_ == other.height_;
  }

  bool operator==(const ScalarField& other) const = default;

 private:
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(x);
  }

  int width_ = 0;
  int height_ = 0;
  FieldRole role_ = FieldRole::Generic;
  std::vector<float> values_;
  std::vector<std::uint8_t> valid_;
};

// Three-channel image with values in [0, 1] and per-pixel validity (warped
// images mark samples that fell outside the source).
class RgbImage {
 public:
  RgbImage() = default;
  // All pixels valid and black.
  RgbImage(int width, int height);

  int width() const { return width_; }
  int height() const { return height_; }
  bool empty() const { return data_.empty(); }

  float at(int x, int y, int c) const { return data_[3 * index(x, y) + c]; }
  bool valid(int x, int y) const { return valid_[index(x, y)] != 0; }

  void set(int x, int y, float r, float g, float b);
  void invalidate(int x, int y);

  std::span<const float> data() const { return data_; }
  std::span<const std::uint8_t> validity() const { return valid_; }
  std::size_t valid_count() const;

  bool same_shape(const RgbImage& other) const {
    return width_ == other.width_ && height_ == other.height_;
  }
  bool operator==(const RgbImage& other) const = default;

 private:
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(x);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<float> data_;
  std::vector<std::uint8_t> valid_;
};

struct Rgb8 {
  std::uint8_t r = 0, g = 0, b = 0;
};

struct PointCloud {
  std::vector<Vec3> points;
  std::vector<Rgb8> colors;  // empty, or one per point

  std::size_t size() const { return points.size(); }
  bool has_color() const { return !colors.empty(); }
};

// Per-pixel unit vectors; undefined pixels carry valid == 0.
struct NormalField {
  int width = 0;
  int height = 0;
  std::vector<Vec3> normals;
  std::vector<std::uint8_t> valid;

  NormalField() = default;
  NormalField(int w, int h)
      : width(w), height(h),
        normals(static_cast<std::size_t>(w) * h, Vec3::Zero()),
        valid(static_cast<std::size_t>(w) * h, 0) {}
};

Vec3 backproject(const Pixel& px, double depth, const CameraIntrinsics& K);
Pixel project(const Vec3& point, const CameraIntrinsics& K);

PointCloud depth_to_pointcloud(const ScalarField& depth, const CameraIntrinsics& K,
                               const RgbImage* color = nullptr);

// Vertical image gap of an object of height h at depth d under focal f.
double projected_gap(double f, double h, double d);

// Unit vector or InvalidParameter for (near-)zero input.
Vec3 normalized(const Vec3& v);
double angle_between(const Vec3& a, const Vec3& b);

}  // namespace gfm
