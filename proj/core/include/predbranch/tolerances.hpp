// Copyright 2026 The predbranch Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

namespace predbranch::tol {

// Every numeric threshold used by the library and its tests lives here.

inline constexpr double kSoftmaxSum = 1e-12;
inline constexpr double kShiftInvariance = 1e-9;
inline constexpr double kProbabilitySum = 1e-9;

inline constexpr double kGradCheckStep = 1e-5;
inline constexpr double kGradCheckMaxRelError = 1e-4;
/// Floor of the relative-error denominator in grad_check.
inline constexpr double kGradCheckDenominatorFloor = 1e-8;

inline constexpr double kForwardOracle = 1e-12;
inline constexpr double kClosedFormLoss = 1e-12;
inline constexpr double kClosedFormRelationLoss = 1e-9;

}  // namespace predbranch::tol
