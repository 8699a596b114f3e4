#include "gfm/core.hpp"

#include <Eigen/Geometry>

#include <cmath>
#include <sstream>

#include "gfm/parallel.hpp"

#if defined(_OPENMP)
#include <omp.h>
#endif

namespace gfm {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidDepth: return "InvalidDepth";
    case ErrorKind::BehindCamera: return "BehindCamera";
    case ErrorKind::RoleError: return "RoleError";
    case ErrorKind::ShapeError: return "ShapeError";
    case ErrorKind::InvalidParameter: return "InvalidParameter";
    case ErrorKind::DegenerateTranslation: return "DegenerateTranslation";
    case ErrorKind::DegeneratePlane: return "DegeneratePlane";
    case ErrorKind::DegenerateGeometry: return "DegenerateGeometry";
    case ErrorKind::DegenerateScale: return "DegenerateScale";
    case ErrorKind::InsufficientPoints: return "InsufficientPoints";
    case ErrorKind::EmptyInput: return "EmptyInput";
    case ErrorKind::EmptyEvaluation: return "EmptyEvaluation";
    case ErrorKind::EmptyScene: return "EmptyScene";
    case ErrorKind::FormatError: return "FormatError";
    case ErrorKind::IoError: return "IoError";
    case ErrorKind::UsageError: return "UsageError";
  }
  return "Unknown";
}

namespace parallel {
int max_threads() {
#if defined(_OPENMP)
  return omp_get_max_threads();
#else
  return 1;
#endif
}
}  // namespace parallel

CameraIntrinsics CameraIntrinsics::make(double fx, double fy, double cx, double cy,
                                        int width, int height) {
  CameraIntrinsics K{fx, fy, cx, cy, width, height};
  K.validate();
  return K;
}

void CameraIntrinsics::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0) || !std::isfinite(fx) || !std::isfinite(fy)) {
    fail(ErrorKind::InvalidParameter, "camera focal lengths must be positive");
  }
  if (width <= 0 || height <= 0) {
    fail(ErrorKind::InvalidParameter, "camera image size must be positive");
  }
  if (!(cx >= 0.0 && cx < width) || !(cy >= 0.0 && cy < height)) {
    fail(ErrorKind::InvalidParameter, "principal point must lie inside the image");
  }
}

Mat3 CameraIntrinsics::matrix() const {
  Mat3 k;
  k << fx, 0.0, cx, 0.0, fy, cy, 0.0, 0.0, 1.0;
  return k;
}

Mat3 CameraIntrinsics::inverse() const {
  Mat3 k;
  k << 1.0 / fx, 0.0, -cx / fx, 0.0, 1.0 / fy, -cy / fy, 0.0, 0.0, 1.0;
  return k;
}

RelativePose::RelativePose(const Mat3& rotation, const Vec3& translation)
    : rotation_(rotation), translation_(translation) {
  const double ortho = (rotation.transpose() * rotation - Mat3::Identity()).cwiseAbs().maxCoeff();
  if (!(ortho <= 1e-9) || !(std::abs(rotation.determinant() - 1.0) <= 1e-9)) {
    fail(ErrorKind::InvalidParameter, "pose rotation is not a proper orthonormal matrix");
  }
  if (!translation.allFinite()) {
    fail(ErrorKind::InvalidParameter, "pose translation is not finite");
  }
}

RelativePose RelativePose::from_axis_angle(const Vec3& axis_angle, const Vec3& translation) {
  const double angle = axis_angle.norm();
  Mat3 r = Mat3::Identity();
  if (angle > 0.0) {
    r = Eigen::AngleAxisd(angle, axis_angle / angle).toRotationMatrix();
  }
  return {r, translation};
}

RelativePose RelativePose::inverse() const {
  const Mat3 rt = rotation_.transpose();
  return {rt, -rt * translation_};
}

RelativePose RelativePose::operator*(const RelativePose& rhs) const {
  return {rotation_ * rhs.rotation_, rotation_ * rhs.translation_ + translation_};
}

PlaneModel::PlaneModel(const Vec3& normal, double camera_height)
    : normal_(normalized(normal)), camera_height_(camera_height) {
  if (!(camera_height > 0.0) || !std::isfinite(camera_height)) {
    fail(ErrorKind::InvalidParameter, "camera height must be positive");
  }
}

const char* to_string(FieldRole role) {
  switch (role) {
    case FieldRole::Generic: return "generic";
    case FieldRole::Gamma: return "gamma";
    case FieldRole::Depth: return "depth";
    case FieldRole::Height: return "height";
    case FieldRole::Mask: return "mask";
    case FieldRole::FlowU: return "flow_u";
    case FieldRole::FlowV: return "flow_v";
  }
  return "unknown";
}

ScalarField::ScalarField(int width, int height, FieldRole role)
    : width_(width), height_(height), role_(role) {
  if (width < 0 || height < 0) {
    fail(ErrorKind::ShapeError, "negative field size");
  }
  const auto n = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  values_.assign(n, 0.0f);
  valid_.assign(n, 0);
}

ScalarField ScalarField::filled(int width, int height, FieldRole role, float value) {
  ScalarField f(width, height, role);
  for (std::size_t i = 0; i < f.size(); ++i) f.set(i, value);
  return f;
}

void ScalarField::set(std::size_t i, float value) {
  if (!std::isfinite(value) || (role_ == FieldRole::Depth && !(value > 0.0f))) {
    invalidate(i);
    return;
  }
  if (role_ == FieldRole::Mask && !(value >= 0.0f && value <= 1.0f)) {
    fail(ErrorKind::InvalidParameter, "mask values must lie in [0, 1]");
  }
  values_[i] = value;
  valid_[i] = 1;
}

std::size_t ScalarField::valid_count() const {
  std::size_t n = 0;
  for (auto v : valid_) n += v;
  return n;
}

ScalarField ScalarField::with_role(FieldRole role) const {
  ScalarField out(width_, height_, role);
  for (std::size_t i = 0; i < size(); ++i) {
    if (valid_[i]) out.set(i, values_[i]);
  }
  return out;
}

RgbImage::RgbImage(int width, int height) : width_(width), height_(height) {
  if (width < 0 || height < 0) {
    fail(ErrorKind::ShapeError, "negative image size");
  }
  const auto n = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  data_.assign(3 * n, 0.0f);
  valid_.assign(n, 1);
}

void RgbImage::set(int x, int y, float r, float g, float b) {
  const float c[3] = {r, g, b};
  const std::size_t i = index(x, y);
  for (int k = 0; k < 3; ++k) {
    if (!(c[k] >= -1e-6f && c[k] <= 1.0f + 1e-6f)) {
      fail(ErrorKind::InvalidParameter, "image values must lie in [0, 1]");
    }
    data_[3 * i + k] = std::clamp(c[k], 0.0f, 1.0f);
  }
  valid_[i] = 1;
}

void RgbImage::invalidate(int x, int y) {
  const std::size_t i = index(x, y);
  data_[3 * i] = data_[3 * i + 1] = data_[3 * i + 2] = 0.0f;
  valid_[i] = 0;
}

std::size_t RgbImage::valid_count() const {
  std::size_t n = 0;
  for (auto v : valid_) n += v;
  return n;
}

Vec3 backproject(const Pixel& px, double depth, const CameraIntrinsics& K) {
  if (!(depth > 0.0) || !std::isfinite(depth)) {
    fail(ErrorKind::InvalidDepth, "backproject needs a positive finite depth");
  }
  return depth * K.ray(px.u, px.v);
}

Pixel project(const Vec3& point, const CameraIntrinsics& K) {
  if (!(point.z() > 0.0)) {
    fail(ErrorKind::BehindCamera, "cannot project a point with z <= 0");
  }
  return {K.cx + K.fx * point.x() / point.z(), K.cy + K.fy * point.y() / point.z()};
}

PointCloud depth_to_pointcloud(const ScalarField& depth, const CameraIntrinsics& K,
                               const RgbImage* color) {
  if (depth.role() != FieldRole::Depth) {
    fail(ErrorKind::RoleError, std::string("expected a depth field, got ") + to_string(depth.role()));
  }
  if (depth.width() != K.width || depth.height() != K.height) {
    fail(ErrorKind::ShapeError, "depth size does not match the camera");
  }
  if (color && (color->width() != depth.width() || color->height() != depth.height())) {
    fail(ErrorKind::ShapeError, "color image size does not match depth");
  }
  PointCloud cloud;
  cloud.points.reserve(depth.valid_count());
  for (int y = 0; y < depth.height(); ++y) {
    for (int x = 0; x < depth.width(); ++x) {
      if (!depth.valid(x, y)) continue;
      cloud.points.push_back(static_cast<double>(depth.at(x, y)) * K.ray(x, y));
      if (color) {
        auto to8 = [&](int c) {
          return static_cast<std::uint8_t>(std::lround(color->at(x, y, c) * 255.0f));
        };
        cloud.colors.push_back({to8(0), to8(1), to8(2)});
      }
    }
  }
  return cloud;
}

double projected_gap(double f, double h, double d) {
  if (!(d > 0.0) || !std::isfinite(d)) {
    fail(ErrorKind::InvalidDepth, "projected_gap needs a positive depth");
  }
  return f * h / d;
}

Vec3 normalized(const Vec3& v) {
  const double n = v.norm();
  if (!(n > 1e-12) || !std::isfinite(n)) {
    fail(ErrorKind::InvalidParameter, "cannot normalize a zero or non-finite vector");
  }
  return v / n;
}

double angle_between(const Vec3& a, const Vec3& b) {
  const double c = a.dot(b) / (a.norm() * b.norm());
  return std::acos(std::clamp(c, -1.0, 1.0));
}

}  // namespace gfm
