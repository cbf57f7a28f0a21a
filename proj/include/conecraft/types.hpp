#pragma once

#include <Eigen/Dense>

namespace conecraft {

// Desk-scale bounds. Fixed-capacity Eigen types keep the simulation hot loop
// free of heap traffic.
inline constexpr int kMaxDim = 8;
inline constexpr int kMaxFaces = 32;

using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxDim, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxDim, kMaxDim>;
using FaceVec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxFaces, 1>;
using FaceMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxFaces, kMaxFaces>;
/// N x k, one face normal per row.
using FaceByDim = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor, kMaxFaces, kMaxDim>;
/// k x N, one reflection direction per column (the matrix D = (d_1 ... d_N)).
using DimByFace = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxDim, kMaxFaces>;

inline Vec make_vec(std::initializer_list<double> values) {
  Vec v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double x : values) v[i++] = x;
  return v;
}

}  // namespace conecraft
