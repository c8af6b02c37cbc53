#pragma once

// Multi-image scenes (one image under several smooth modulations) and
// simultaneous multi-slice superposition/separation.

#include <optional>
#include <string>
#include <vector>

#include "linpred/grid.hpp"
#include "linpred/lp.hpp"
#include "linpred/phantom.hpp"
#include "linpred/recon.hpp"

namespace linpred::multi {

enum class Scenario { Parallel, Multicontrast, VirtualConjugate };

const char *to_string(Scenario s);
Scenario parse_scenario(const std::string &s);

struct MultiScene {
  Phantom base;
  std::vector<Modulator> modulators;
  Scenario scenario = Scenario::Parallel;

  void validate() const;
};

// Virtual-conjugate scene from a phase pair: c_1 = c, c_2 = conj(c).
MultiScene virtual_conjugate_scene(const Phantom &base, const Modulator &c);

MultiKSignal scene_samples(const MultiScene &scene, const KGrid &grid);

lp::IdentityCheck verify_theorem2(const MultiScene &scene, const MultiFilter &mf,
                                  const KGrid &grid, int quadrature_points = 4096,
                                  std::optional<double> tolerance = std::nullopt);

struct SmashResult {
  MultiFilter filter;
  double residual = 0.0; // RMS of sum_q sum_k h_q[k] c_q(x) e^{i2pikx/B}
  bool ridge_fallback = false;
  std::vector<std::string> warnings;
};

// Least squares on a uniform grid of `points` FOV cell centres, with
// h_target[0] = -1. 1D modulators only.
SmashResult smash_fit(const std::vector<Modulator> &modulators, int target, int L,
                      int P, double fov = 1.0, int points = 1024);

// ---- simultaneous multi-slice ----

struct SmsScene {
  std::vector<Phantom> slices;
  // Optional coil sensitivities: coils[r][q] modulates slice r in coil q.
  std::vector<std::vector<Modulator>> coils;

  int slice_count() const { return static_cast<int>(slices.size()); }
  int coil_count() const {
    return coils.empty() ? 1 : static_cast<int>(coils.front().size());
  }
  void validate() const;
};

// Per-slice samples, slice-major: channel r * Q + q is slice r in coil q.
MultiKSignal sms_slices(const SmsScene &scene, const KGrid &grid);
// s_q = sum_r rho_{r,q}; Q channels (one without coils).
MultiKSignal sms_superpose(const SmsScene &scene, const KGrid &grid);
// Superposition of slice-major per-slice data with `coils` channels each.
MultiKSignal superpose(const MultiKSignal &slices, int coils);

// Taps over the Q superposed channels. Unlike a Filter, every tap may be
// zero (the best separator for an empty slice).
struct Separator {
  Window window;
  std::vector<std::vector<cplx>> taps;

  int q_count() const { return static_cast<int>(taps.size()); }
  cplx at(int q, int k0, int k1 = 0) const {
    return taps[q][window.tap_index(k0, k1)];
  }
  static Separator from(const MultiFilter &f);
};

struct SeparatorFit {
  Separator filter;
  double residual = 0.0;   // RMS reproduction error over calibration rows
  double leakage = 0.0;    // RMS of the filter applied to the other slices
  bool ridge_fallback = false;
};

// Separator for slice `target` (coil `coil`) from slice-major calibration
// data with `coils` channels per slice:
//   min ||rho_{m,coil} - sum_q sum_k a_q[k] s_q[n-k]||^2
//       + mu sum_{r != m} ||sum_q sum_k a_q[k] rho_{r,q}[n-k]||^2
SeparatorFit sms_fit_separator(const MultiKSignal &slices, int coils,
                               const IndexBox &calib, int target, int coil,
                               const Window &w, double mu = 1.0);

// All R * Q separators, slice-major.
std::vector<SeparatorFit> sms_fit_separators(const MultiKSignal &slices, int coils,
                                             const IndexBox &calib, const Window &w,
                                             double mu = 1.0);

// Fully sampled separation on the valid region: one output channel per
// separator, rho_hat = sum_q sum_k a_q[k] s_q[n-k].
MultiKSignal sms_separate(const MultiKSignal &superposed,
                          const std::vector<Separator> &separators);

struct SmsUndersampledParams {
  recon::AnnihilationParams annihilation;
  // Optional intra-slice annihilators on the Q coil channels of one slice,
  // applied to every slice. Windows may differ from the separators'; all
  // filters are padded to the enclosing window.
  lp::FilterBank intra;
  double superposition_weight = 1.0;
};

struct SmsSeparation {
  MultiKSignal slices;     // R * Q channels, slice-major, full grid
  MultiKSignal superposed; // completed superposed data
  recon::ReconReport report;
};

// Undersampled separation as one annihilation problem on the augmented
// channels {s_q, rho_{r,q}}: separator relations -rho_{m,q} + a * s = 0,
// superposition s_q - sum_r rho_{r,q} = 0, plus optional intra-slice
// filters. Superposed samples outside `mask` and all slice samples are
// unknown.
SmsSeparation sms_separate_undersampled(const MultiKSignal &superposed,
                                        const SamplingMask &mask,
                                        const std::vector<Separator> &separators,
                                        const SmsUndersampledParams &params);

// leak(r, q) = ||separator_r applied to slice q alone|| / ||slice r on the
// valid region||, single coil or coil-combined by summing over coils.
std::vector<std::vector<double>> sms_leakage(const MultiKSignal &slices, int coils,
                                             const std::vector<Separator> &separators);

// lhs = sum_n |-rho_m[n] + sum_r sum_k h[k] rho_r[n-k]|^2 (truncated),
// rhs = B int |-rho_m + H sum_r rho_r|^2.
lp::IdentityCheck verify_theorem3(const SmsScene &scene, int m, const Filter &filter,
                                  const KGrid &grid, int quadrature_points = 4096,
                                  std::optional<double> tolerance = std::nullopt);

} // namespace linpred::multi
