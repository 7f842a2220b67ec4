#pragma once

// Acceptance bands and tuning constants. Bump kBandsVersion whenever a value changes.

namespace scanmix::bands {

inline constexpr int kBandsVersion = 1;

inline constexpr double kLumpingTol = 1e-12;
inline constexpr double kStationarityTol = 1e-10;
inline constexpr double kDetailedBalanceTol = 1e-12;

// Var[S_1 | m = n/2] * n^2 / k
inline constexpr double kVarianceBandLo = 0.5;
inline constexpr double kVarianceBandHi = 8.0;

// Var[S_t] <= C / (n (1 - beta)) along the trajectory from all-plus
inline constexpr double kAccumulatedVarianceC = 2.0;

// |E S_t| <= C exp(-k t (1 - beta) / n) from all-plus
inline constexpr double kPartialSumDecayC = 1.0;

inline constexpr double kSeSlack = 3.0;

inline constexpr double kCutoffCenterLo = 0.7;
inline constexpr double kCutoffCenterHi = 1.3;

inline constexpr double kCriticalExponent = 1.5;
inline constexpr double kCriticalExponentTol = 0.15;
inline constexpr double kCriticalR2Min = 0.98;
inline constexpr double kCriticalKRatioLo = 0.4;
inline constexpr double kCriticalKRatioHi = 0.6;

inline constexpr double kRestrictedRatioFactor = 3.0;
inline constexpr double kTauStarAlpha = 0.5;
inline constexpr double kTauStarExponentMin = 1.0;

inline constexpr double kChiSquarePMin = 0.001;
inline constexpr double kMoveFrequencyMin = 0.01;
inline constexpr double kTvAtZeroMin = 0.99;
inline constexpr double kCoalescedFractionMin = 0.99;

inline constexpr double kMixingEps = 0.25;

}  // namespace scanmix::bands
