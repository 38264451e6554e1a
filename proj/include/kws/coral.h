// kws/coral.h

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

// Correlation alignment on embedding features.
//
//   C(D)        = (D^T D - (1^T D)^T (1^T D) / n) / (n - 1)
//   coral(S, T) = ||C_S - C_T||_F^2 / (4 d^2)
//
// and the three-cluster joint objective
//
//   L = ce + A / (A + B + eps),
//   A = coral(real-neg, synt-neg),  B = coral(real-pos, real-neg).
//
// Minimising L pulls synthetic negatives toward real negatives while pushing
// real positives away from real negatives.

#ifndef KWS_CORAL_H_
#define KWS_CORAL_H_

#include "kws/common.h"

namespace kws {

inline constexpr double kCoralEpsilon = 1e-8;

/// Rows of `features` are samples (n x d). Throws ValidationError when n < 2.
Matrix covariance(const Matrix& features);

double coral_loss(const Matrix& cov_s, const Matrix& cov_t);

/// d coral(S, T) / d D_S given both covariances and D_S. The gradient with
/// respect to D_T is the same expression with the roles swapped.
Matrix coral_feature_gradient(const Matrix& features_s, const Matrix& cov_s, const Matrix& cov_t);

struct JointLoss {
  double loss = 0.0;
  double ratio = 0.0;       // A / (A + B + eps)
  double coral_neg = 0.0;   // A
  double coral_pos = 0.0;   // B
  Matrix grad_real_pos;     // dL / d features, same shapes as inputs
  Matrix grad_real_neg;
  Matrix grad_synt_neg;
};

JointLoss joint_loss(double ce, const Matrix& real_pos, const Matrix& real_neg,
                     const Matrix& synt_neg, double eps = kCoralEpsilon);

}  // namespace kws

#endif  // KWS_CORAL_H_
