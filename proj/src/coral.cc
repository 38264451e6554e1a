// coral.cc

// Copyright 2026  The kws-confusion Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include "kws/coral.h"

#include <string>

namespace kws {

namespace {

// dL/dD = 2/(n-1) * (D - 1 mean^T) * G for symmetric G = dL/dC.
Matrix backprop_covariance(const Matrix& d, const Matrix& grad_cov) {
  const std::size_t n = d.rows(), dim = d.cols();
  std::vector<double> mean(dim, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < dim; ++j) mean[j] += d(i, j);
  }
  for (double& m : mean) m /= static_cast<double>(n);
  const double scale = 2.0 / static_cast<double>(n - 1);
  Matrix out(n, dim);
  std::vector<double> centered(dim);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < dim; ++j) centered[j] = d(i, j) - mean[j];
    for (std::size_t k = 0; k < dim; ++k) {
      double s = 0.0;
      for (std::size_t j = 0; j < dim; ++j) s += centered[j] * grad_cov(j, k);
      out(i, k) = scale * s;
    }
  }
  return out;
}

void check_same_dim(const Matrix& a, const Matrix& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ValidationError(std::string(what) + ": dimension mismatch (" +
                          std::to_string(a.rows()) + "x" + std::to_string(a.cols()) + " vs " +
                          std::to_string(b.rows()) + "x" + std::to_string(b.cols()) + ")");
  }
}

}  // namespace

Matrix covariance(const Matrix& features) {
  const std::size_t n = features.rows(), dim = features.cols();
  if (n < 2) {
    throw ValidationError("covariance: need at least 2 samples, got " + std::to_string(n));
  }
  std::vector<double> colsum(dim, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < dim; ++j) colsum[j] += features(i, j);
  }
  Matrix c(dim, dim);
  const double inv_n = 1.0 / static_cast<double>(n);
  const double inv_n1 = 1.0 / static_cast<double>(n - 1);
  for (std::size_t a = 0; a < dim; ++a) {
    for (std::size_t b = a; b < dim; ++b) {
      double gram = 0.0;
      for (std::size_t i = 0; i < n; ++i) gram += features(i, a) * features(i, b);
      const double v = (gram - inv_n * colsum[a] * colsum[b]) * inv_n1;
      c(a, b) = v;
      c(b, a) = v;
    }
  }
  return c;
}

double coral_loss(const Matrix& cov_s, const Matrix& cov_t) {
  check_same_dim(cov_s, cov_t, "coral_loss");
  if (cov_s.rows() != cov_s.cols()) throw ValidationError("coral_loss: covariances must be square");
  const double d = static_cast<double>(cov_s.rows());
  double fro = 0.0;
  for (std::size_t i = 0; i < cov_s.data().size(); ++i) {
    const double diff = cov_s.data()[i] - cov_t.data()[i];
    fro += diff * diff;
  }
  return fro / (4.0 * d * d);
}

Matrix coral_feature_gradient(const Matrix& features_s, const Matrix& cov_s, const Matrix& cov_t) {
  check_same_dim(cov_s, cov_t, "coral_feature_gradient");
  const std::size_t dim = cov_s.rows();
  const double k = 1.0 / (2.0 * static_cast<double>(dim * dim));
  Matrix g(dim, dim);
  for (std::size_t i = 0; i < g.data().size(); ++i) {
    g.data()[i] = k * (cov_s.data()[i] - cov_t.data()[i]);
  }
  return backprop_covariance(features_s, g);
}

JointLoss joint_loss(double ce, const Matrix& real_pos, const Matrix& real_neg,
                     const Matrix& synt_neg, double eps) {
  if (real_pos.cols() != real_neg.cols() || real_pos.cols() != synt_neg.cols()) {
    throw ValidationError("joint_loss: clusters must share the embedding width");
  }
  const Matrix c_rp = covariance(real_pos);
  const Matrix c_rn = covariance(real_neg);
  const Matrix c_sn = covariance(synt_neg);

  JointLoss out;
  out.coral_neg = coral_loss(c_rn, c_sn);
  out.coral_pos = coral_loss(c_rp, c_rn);
  const double den = out.coral_neg + out.coral_pos + eps;
  out.ratio = out.coral_neg / den;
  out.loss = ce + out.ratio;

  const double d_ratio_d_neg = (out.coral_pos + eps) / (den * den);
  const double d_ratio_d_pos = -out.coral_neg / (den * den);

  const std::size_t dim = c_rn.rows();
  const double k = 1.0 / (2.0 * static_cast<double>(dim * dim));
  Matrix g_rp(dim, dim), g_rn(dim, dim), g_sn(dim, dim);
  for (std::size_t i = 0; i < g_rn.data().size(); ++i) {
    const double neg_diff = c_rn.data()[i] - c_sn.data()[i];
    const double pos_diff = c_rp.data()[i] - c_rn.data()[i];
    g_rn.data()[i] = k * (d_ratio_d_neg * neg_diff - d_ratio_d_pos * pos_diff);
    g_sn.data()[i] = -k * d_ratio_d_neg * neg_diff;
    g_rp.data()[i] = k * d_ratio_d_pos * pos_diff;
  }
  out.grad_real_pos = backprop_covariance(real_pos, g_rp);
  out.grad_real_neg = backprop_covariance(real_neg, g_rn);
  out.grad_synt_neg = backprop_covariance(synt_neg, g_sn);
  return out;
}

}  // namespace kws
