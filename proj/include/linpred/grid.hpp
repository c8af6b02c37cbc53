#pragma once

// Shared vocabulary: index grids, Fourier-sample signals, acquisition masks
// and convolution filters. Everything here is 1D or 2D; a 1D object is the
// 2D object with a degenerate second axis ([0, 0], window [0, 0]).

#include <array>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace linpred {

using cplx = std::complex<double>;

struct Axis {
  int n_min = 0;
  int n_max = 0;
  double fov = 1.0;

  int size() const { return n_max - n_min + 1; }
  bool contains(int n) const { return n >= n_min && n <= n_max; }
  bool operator==(const Axis &) const = default;
};

// Closed index rectangle; the second axis is [0, 0] for 1D boxes.
struct IndexBox {
  std::array<int, 2> lo{0, 0};
  std::array<int, 2> hi{0, 0};

  static IndexBox line(int lo, int hi) { return {{lo, 0}, {hi, 0}}; }

  int extent(int a) const { return hi[a] - lo[a] + 1; }
  bool empty() const { return extent(0) <= 0 || extent(1) <= 0; }
  std::size_t size() const {
    return empty() ? 0 : static_cast<std::size_t>(extent(0)) * extent(1);
  }
  bool contains(int n0, int n1 = 0) const {
    return n0 >= lo[0] && n0 <= hi[0] && n1 >= lo[1] && n1 <= hi[1];
  }
  bool contains(const IndexBox &o) const {
    return o.lo[0] >= lo[0] && o.hi[0] <= hi[0] && o.lo[1] >= lo[1] &&
           o.hi[1] <= hi[1];
  }
  bool operator==(const IndexBox &) const = default;
};

class KGrid {
public:
  KGrid() = default;

  // User-facing constructors enforce n_min <= 0 <= n_max, size >= 2, fov > 0.
  static KGrid line(int n_min, int n_max, double fov = 1.0);
  static KGrid plane(Axis a0, Axis a1);
  // [-size/2, size - size/2 - 1] per axis; the usual FFT-centred layout.
  static KGrid centered(int size, double fov = 1.0);
  static KGrid centered_plane(int size0, int size1, double fov0 = 1.0,
                              double fov1 = 1.0);
  // Restriction to a sub-box (e.g. the valid region of a convolution). The
  // result need not contain index 0.
  static KGrid subrange(const KGrid &parent, const IndexBox &box);

  int dims() const { return dims_; }
  const Axis &axis(int a) const { return axes_[a]; }
  double fov() const { return axes_[0].fov; }
  std::size_t size() const {
    return static_cast<std::size_t>(axes_[0].size()) * axes_[1].size();
  }
  IndexBox box() const {
    return {{axes_[0].n_min, axes_[1].n_min}, {axes_[0].n_max, axes_[1].n_max}};
  }
  bool contains(int n0, int n1 = 0) const {
    return axes_[0].contains(n0) && axes_[1].contains(n1);
  }
  std::size_t index(int n0, int n1 = 0) const {
    return static_cast<std::size_t>(n0 - axes_[0].n_min) * axes_[1].size() +
           static_cast<std::size_t>(n1 - axes_[1].n_min);
  }
  std::array<int, 2> coords(std::size_t idx) const {
    const auto s1 = static_cast<std::size_t>(axes_[1].size());
    return {static_cast<int>(idx / s1) + axes_[0].n_min,
            static_cast<int>(idx % s1) + axes_[1].n_min};
  }

  bool operator==(const KGrid &) const = default;

private:
  KGrid(int dims, Axis a0, Axis a1) : dims_(dims), axes_{a0, a1} {}

  int dims_ = 1;
  std::array<Axis, 2> axes_{Axis{0, 1, 1.0}, Axis{0, 0, 1.0}};
};

class KSignal {
public:
  KSignal() = default;
  KSignal(KGrid grid, std::vector<cplx> values);
  static KSignal zeros(const KGrid &grid) {
    return KSignal(grid, std::vector<cplx>(grid.size()));
  }

  const KGrid &grid() const { return grid_; }
  std::span<const cplx> values() const { return values_; }
  const std::vector<cplx> &vec() const { return values_; }
  std::size_t size() const { return values_.size(); }
  cplx at(int n0, int n1 = 0) const { return values_[grid_.index(n0, n1)]; }

private:
  KGrid grid_;
  std::vector<cplx> values_;
};

class MultiKSignal {
public:
  MultiKSignal() = default;
  explicit MultiKSignal(std::vector<KSignal> channels);
  MultiKSignal(const KGrid &grid, std::vector<std::vector<cplx>> channels);
  static MultiKSignal single(KSignal s) {
    return MultiKSignal(std::vector<KSignal>{std::move(s)});
  }

  const KGrid &grid() const { return channels_.front().grid(); }
  int q_count() const { return static_cast<int>(channels_.size()); }
  const KSignal &channel(int q) const { return channels_[q]; }
  const std::vector<KSignal> &channels() const { return channels_; }

  // Channel-major contiguous copy, the layout the kernels work on.
  std::vector<cplx> stacked() const;

private:
  std::vector<KSignal> channels_;
};

class SamplingMask {
public:
  SamplingMask() = default;
  SamplingMask(KGrid grid, std::vector<std::uint8_t> acquired,
               std::optional<IndexBox> calib = std::nullopt);
  static SamplingMask full(const KGrid &grid);

  const KGrid &grid() const { return grid_; }
  std::span<const std::uint8_t> acquired() const { return acquired_; }
  const std::optional<IndexBox> &calib() const { return calib_; }
  bool is_acquired(int n0, int n1 = 0) const {
    return acquired_[grid_.index(n0, n1)] != 0;
  }
  std::size_t count() const;

private:
  KGrid grid_;
  std::vector<std::uint8_t> acquired_;
  std::optional<IndexBox> calib_;
};

// Tap support k in [-L, P] per axis.
struct Window {
  int dims = 1;
  std::array<int, 2> L{0, 0};
  std::array<int, 2> P{0, 0};

  static Window line(int L, int P) { return {1, {L, 0}, {P, 0}}; }
  static Window plane(int L0, int P0, int L1, int P1) {
    return {2, {L0, L1}, {P0, P1}};
  }

  int span(int a) const { return L[a] + P[a] + 1; }
  std::size_t size() const {
    return static_cast<std::size_t>(span(0)) * span(1);
  }
  std::size_t tap_index(int k0, int k1 = 0) const {
    return static_cast<std::size_t>(k0 + L[0]) * span(1) +
           static_cast<std::size_t>(k1 + L[1]);
  }
  std::array<int, 2> tap_coords(std::size_t t) const {
    const auto s1 = static_cast<std::size_t>(span(1));
    return {static_cast<int>(t / s1) - L[0], static_cast<int>(t % s1) - L[1]};
  }
  bool operator==(const Window &) const = default;
};

// Valid output box of a convolution of `grid` data with taps on `w`:
// indices n with every n - k inside the grid.
IndexBox valid_box(const KGrid &grid, const Window &w);

class Filter {
public:
  Filter() = default;
  Filter(Window window, std::vector<cplx> taps, bool anchor_fixed = false);
  // Taps zero except h[0] = -1.
  static Filter anchor_only(const Window &window);
  static Filter line(int L, int P, std::vector<cplx> taps) {
    return Filter(Window::line(L, P), std::move(taps));
  }

  const Window &window() const { return window_; }
  std::span<const cplx> taps() const { return taps_; }
  const std::vector<cplx> &vec() const { return taps_; }
  cplx at(int k0, int k1 = 0) const { return taps_[window_.tap_index(k0, k1)]; }
  bool anchor_fixed() const { return anchor_fixed_; }

private:
  Window window_;
  std::vector<cplx> taps_;
  bool anchor_fixed_ = false;
};

// One tap array per channel on a shared window. Individual channels may be
// all-zero; the filter as a whole may not.
class MultiFilter {
public:
  MultiFilter() = default;
  MultiFilter(Window window, std::vector<std::vector<cplx>> taps,
              std::optional<int> anchor = std::nullopt);
  static MultiFilter from(const Filter &f);
  // Inverse of flatten(): channel-major, then ascending tap.
  static MultiFilter unflatten(const Window &window, int q_count,
                               std::span<const cplx> flat,
                               std::optional<int> anchor = std::nullopt);

  const Window &window() const { return window_; }
  int q_count() const { return static_cast<int>(taps_.size()); }
  std::span<const cplx> channel(int q) const { return taps_[q]; }
  cplx at(int q, int k0, int k1 = 0) const {
    return taps_[q][window_.tap_index(k0, k1)];
  }
  const std::optional<int> &anchor() const { return anchor_; }
  std::vector<cplx> flatten() const;
  Filter channel_filter(int q) const;

private:
  Window window_;
  std::vector<std::vector<cplx>> taps_;
  std::optional<int> anchor_;
};

KSignal zero_fill(const KSignal &data, const SamplingMask &mask);
MultiKSignal zero_fill(const MultiKSignal &data, const SamplingMask &mask);

// Valid-region convolution: out[n] = sum_k h[k] x[n - k].
KSignal conv_apply(const KSignal &signal, const Filter &filter);
// Multichannel annihilation: out[n] = sum_q sum_k h_q[k] x_q[n - k].
KSignal conv_apply(const MultiKSignal &signal, const MultiFilter &filter);

double norm2(std::span<const cplx> v);

} // namespace linpred
