#pragma once

// Linear-prediction filters: calibration fitting, extrapolation, pattern-aware
// interpolation, Gram-operator eigenfilters and the single-image
// annihilation identity checker.

#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "linpred/grid.hpp"
#include "linpred/linalg.hpp"
#include "linpred/phantom.hpp"

namespace linpred::lp {

using Matrix = Eigen::MatrixXcd;

// Rows: valid calibration positions n (ascending, row-major in 2D).
// Columns: channel-major, then ascending tap k. Entry (n, (q, k)) = x_q[n - k].
struct CalibMatrix {
  Window window;
  int q_count = 1;
  IndexBox rows_box; // output positions n covered by the rows
  Matrix m;

  Eigen::Index column(int q, int k0, int k1 = 0) const {
    return static_cast<Eigen::Index>(q * window.size() + window.tap_index(k0, k1));
  }
};

CalibMatrix build_calib_matrix(const MultiKSignal &data, const IndexBox &calib,
                               const Window &window);

struct FilterBank {
  std::vector<MultiFilter> filters;
  std::vector<double> residuals;

  bool empty() const { return filters.empty(); }
  std::size_t size() const { return filters.size(); }
};

struct TapRef {
  int q = 0;
  int k0 = 0;
  int k1 = 0;
  auto operator<=>(const TapRef &) const = default;
};

struct FitResult {
  MultiFilter filter;
  double residual = 0.0;      // RMS prediction error over calibration rows
  bool underdetermined = false; // fewer rows than free taps
};

// Absolute ridge; std::nullopt selects 1e-9 * max diagonal of A^H A.
// With ridge == 0 a rank-deficient system throws ErrorCode::Singular.
FitResult fit_prediction_filter(const CalibMatrix &calib, int target,
                                const std::vector<TapRef> &zeroed = {},
                                std::optional<double> ridge = std::nullopt);

// Right singular vectors of the calibration matrix with sigma <= tau *
// sigma_max, ascending sigma; residual = sigma / sqrt(rows).
FilterBank nullspace_bank(const CalibMatrix &calib, double tau = 0.05);

// One anchored prediction filter per channel (target q, tap 0), fitted
// jointly from all channels. This is the SPIRiT-style kernel set.
FilterBank prediction_bank(const CalibMatrix &calib,
                           std::optional<double> ridge = std::nullopt);

enum class Direction { Forward, Backward };

// Recursive extension of `seed` with a causal (L = 0) filter. Forward
// produces x[end], x[end + 1], ...; backward produces x[start - 1],
// x[start - 2], ... (generation order in both cases).
std::vector<cplx> extrapolate(std::span<const cplx> seed, const Filter &filter,
                              int steps, Direction dir = Direction::Forward);

// ---- pattern-aware interpolation ----

// Acquired (1) / missing (0) bits over the positions n - k, k in the window,
// in tap order; positions off the grid count as missing.
std::string local_signature(const SamplingMask &mask, const Window &w, int n0,
                            int n1 = 0);

struct GrappaKernels {
  Window window;
  int q_count = 1;
  // (signature, target channel) -> anchored filter on the target channel.
  std::map<std::pair<std::string, int>, MultiFilter> kernels;
};

GrappaKernels fit_grappa(const MultiKSignal &calib_data, const IndexBox &calib,
                         const SamplingMask &mask, const Window &w,
                         std::optional<double> ridge = std::nullopt);

// Throws ErrorCode::UncoveredSignature when a missing sample's pattern has
// no kernel (for instance when none of its neighbours was acquired).
MultiKSignal interpolate_missing(const MultiKSignal &data,
                                 const SamplingMask &mask,
                                 const GrappaKernels &kernels);

// Fills what the kernels cover and leaves the rest at 0. `filled` marks the
// acquired and interpolated samples.
struct PartialInterpolation {
  MultiKSignal data;
  SamplingMask filled;
  std::size_t uncovered = 0;
  std::set<std::string> patterns;
};
PartialInterpolation interpolate_available(const MultiKSignal &data,
                                           const SamplingMask &mask,
                                           const GrappaKernels &kernels);

// ---- high-pass weighting along one axis: w[n] = (i 2 pi n_a / B_a) x[n] ----

KSignal highpass_weight(const KSignal &data, int axis = 0);
// Samples on the line n_axis = 0, which weighting destroys.
std::vector<cplx> dc_line(const KSignal &data, int axis = 0);
KSignal highpass_unweight(const KSignal &weighted, std::span<const cplx> dc,
                          int axis = 0);

// ---- Gram operator ----

struct GramMatrix {
  Window window;
  Matrix g; // (k, n) entry = gt[n - k], rows/cols in tap order
};

// gt[n] = (1 / B^2) int |rho|^2 exp(i 2 pi x n / B) dx, closed form for 1D
// boxcar phantoms.
cplx gram_sequence(const Phantom &phantom, int n);
GramMatrix gram_operator(const Phantom &phantom, int L, int P);

// Unit-norm eigenvectors with the `count` smallest eigenvalues, ascending.
FilterBank smallest_eigensequences(const GramMatrix &gram, int count);

// ---- annihilation identity check ----

struct IdentityCheck {
  double lhs = 0.0;        // truncated sum over valid n of |conv|^2
  double rhs = 0.0;        // B int |sum_q c_q rho_q H_q|^2, H = sum_k h[k] e^{i2pikx/B}
  double tail_bound = 0.0; // bound on the energy missing from lhs
  double gap() const { return std::abs(lhs - rhs); }
  // |lhs - rhs| <= max(rel_tol * rhs, tail_bound) (+ tiny absolute slack)
  bool agrees(double rel_tol = 1e-6) const;
};

struct ChannelSource {
  const Phantom *phantom = nullptr;
  const Modulator *modulator = nullptr; // null: c(x) = 1
};

// Multichannel form used by all three identity checks: conv[n] =
// sum_q sum_k h_q[k] rho_q[n - k], rho_q the samples of c_q(x) rho_q(x).
// `grid` only supplies the index range and fov; samples are streamed.
// When `tolerance` is set and the tail bound exceeds tolerance * rhs the
// check throws, since agreement could not be certified on that grid.
IdentityCheck verify_channels(const std::vector<ChannelSource> &channels,
                              const MultiFilter &filter, const KGrid &grid,
                              int quadrature_points = 4096,
                              std::optional<double> tolerance = std::nullopt);

// Same on raw per-channel taps, which may all vanish.
IdentityCheck verify_taps(const std::vector<ChannelSource> &channels,
                          const Window &w,
                          const std::vector<std::vector<cplx>> &taps,
                          const KGrid &grid, int quadrature_points = 4096,
                          std::optional<double> tolerance = std::nullopt);

IdentityCheck verify_theorem1(const Phantom &phantom, const Filter &filter,
                              const KGrid &grid, int quadrature_points = 4096,
                              std::optional<double> tolerance = std::nullopt);

} // namespace linpred::lp
