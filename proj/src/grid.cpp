#include "linpred/grid.hpp"

#include <cmath>
#include <string>

#include "linpred/error.hpp"
#include "linpred/kernels.hpp"

namespace linpred {

const char *to_string(ErrorCode code) {
  switch (code) {
  case ErrorCode::InvalidArgument: return "invalid-argument";
  case ErrorCode::GridMismatch: return "grid-mismatch";
  case ErrorCode::Truncated: return "truncated";
  case ErrorCode::LengthMismatch: return "length-mismatch";
  case ErrorCode::UnknownVersion: return "unknown-version";
  case ErrorCode::MalformedHeader: return "malformed-header";
  case ErrorCode::Io: return "io";
  case ErrorCode::Parse: return "parse";
  case ErrorCode::Singular: return "singular";
  case ErrorCode::UncoveredSignature: return "uncovered-signature";
  case ErrorCode::NotConverged: return "not-converged";
  }
  return "unknown";
}

namespace {

void check_axis(const Axis &a) {
  require(a.n_min <= 0 && 0 <= a.n_max,
          "grid axis must contain index 0 (got [" + std::to_string(a.n_min) +
              ", " + std::to_string(a.n_max) + "])");
  require(a.size() >= 2, "grid axis needs at least 2 samples");
  require(a.fov > 0.0 && std::isfinite(a.fov), "fov must be positive");
}

bool all_finite(std::span<const cplx> v) {
  for (const auto &z : v) {
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) {
      return false;
    }
  }
  return true;
}

} // namespace

KGrid KGrid::line(int n_min, int n_max, double fov) {
  Axis a{n_min, n_max, fov};
  check_axis(a);
  return KGrid(1, a, Axis{0, 0, 1.0});
}

KGrid KGrid::plane(Axis a0, Axis a1) {
  check_axis(a0);
  check_axis(a1);
  return KGrid(2, a0, a1);
}

KGrid KGrid::centered(int size, double fov) {
  return line(-(size / 2), size - size / 2 - 1, fov);
}

KGrid KGrid::centered_plane(int size0, int size1, double fov0, double fov1) {
  return plane({-(size0 / 2), size0 - size0 / 2 - 1, fov0},
               {-(size1 / 2), size1 - size1 / 2 - 1, fov1});
}

KGrid KGrid::subrange(const KGrid &parent, const IndexBox &box) {
  require(!box.empty(), "empty sub-range");
  require(parent.box().contains(box), "sub-range exceeds parent grid");
  Axis a0{box.lo[0], box.hi[0], parent.axis(0).fov};
  Axis a1{box.lo[1], box.hi[1], parent.axis(1).fov};
  return KGrid(parent.dims(), a0, a1);
}

KSignal::KSignal(KGrid grid, std::vector<cplx> values)
    : grid_(std::move(grid)), values_(std::move(values)) {
  if (values_.size() != grid_.size()) {
    fail(ErrorCode::GridMismatch,
         "signal length " + std::to_string(values_.size()) +
             " does not match grid size " + std::to_string(grid_.size()));
  }
  require(all_finite(values_), "signal contains non-finite samples");
}

MultiKSignal::MultiKSignal(std::vector<KSignal> channels)
    : channels_(std::move(channels)) {
  require(!channels_.empty(), "multichannel signal needs at least one channel");
  for (const auto &c : channels_) {
    if (!(c.grid() == channels_.front().grid())) {
      fail(ErrorCode::GridMismatch, "channels do not share one grid");
    }
  }
}

MultiKSignal::MultiKSignal(const KGrid &grid,
                           std::vector<std::vector<cplx>> channels) {
  require(!channels.empty(), "multichannel signal needs at least one channel");
  channels_.reserve(channels.size());
  for (auto &c : channels) {
    channels_.emplace_back(grid, std::move(c));
  }
}

std::vector<cplx> MultiKSignal::stacked() const {
  std::vector<cplx> out;
  out.reserve(grid().size() * channels_.size());
  for (const auto &c : channels_) {
    out.insert(out.end(), c.values().begin(), c.values().end());
  }
  return out;
}

SamplingMask::SamplingMask(KGrid grid, std::vector<std::uint8_t> acquired,
                           std::optional<IndexBox> calib)
    : grid_(std::move(grid)), acquired_(std::move(acquired)),
      calib_(std::move(calib)) {
  if (acquired_.size() != grid_.size()) {
    fail(ErrorCode::GridMismatch, "mask length does not match grid size");
  }
  for (auto &a : acquired_) {
    require(a == 0 || a == 1, "mask entries must be 0 or 1");
  }
  if (calib_) {
    require(!calib_->empty(), "calibration region is empty");
    require(grid_.box().contains(*calib_),
            "calibration region lies outside the grid");
    for (int n0 = calib_->lo[0]; n0 <= calib_->hi[0]; ++n0) {
      for (int n1 = calib_->lo[1]; n1 <= calib_->hi[1]; ++n1) {
        require(is_acquired(n0, n1),
                "calibration region contains unacquired samples");
      }
    }
  }
}

SamplingMask SamplingMask::full(const KGrid &grid) {
  return SamplingMask(grid, std::vector<std::uint8_t>(grid.size(), 1));
}

std::size_t SamplingMask::count() const {
  std::size_t c = 0;
  for (auto a : acquired_) {
    c += a;
  }
  return c;
}

IndexBox valid_box(const KGrid &grid, const Window &w) {
  IndexBox b = grid.box();
  for (int a = 0; a < 2; ++a) {
    b.lo[a] += w.P[a];
    b.hi[a] -= w.L[a];
  }
  return b;
}

Filter::Filter(Window window, std::vector<cplx> taps, bool anchor_fixed)
    : window_(window), taps_(std::move(taps)), anchor_fixed_(anchor_fixed) {
  require(window_.L[0] >= 0 && window_.P[0] >= 0 && window_.L[1] >= 0 &&
              window_.P[1] >= 0,
          "filter support bounds must be nonnegative");
  require(window_.dims == 2 || (window_.L[1] == 0 && window_.P[1] == 0),
          "1D filter cannot have a second-axis extent");
  require(taps_.size() == window_.size(),
          "tap count " + std::to_string(taps_.size()) +
              " does not match window size " + std::to_string(window_.size()));
  require(all_finite(taps_), "filter taps must be finite");
  bool any = false;
  for (const auto &t : taps_) {
    any = any || t != cplx{};
  }
  require(any, "filter must have at least one nonzero tap");
  if (anchor_fixed_) {
    require(at(0, 0) == cplx(-1.0, 0.0), "anchored filter needs h[0] = -1");
  }
}

Filter Filter::anchor_only(const Window &window) {
  std::vector<cplx> taps(window.size());
  taps[window.tap_index(0, 0)] = -1.0;
  return Filter(window, std::move(taps), true);
}

MultiFilter::MultiFilter(Window window, std::vector<std::vector<cplx>> taps,
                         std::optional<int> anchor)
    : window_(window), taps_(std::move(taps)), anchor_(anchor) {
  require(!taps_.empty(), "multichannel filter needs at least one channel");
  bool any = false;
  for (const auto &t : taps_) {
    require(t.size() == window_.size(), "channel tap count mismatch");
    require(all_finite(t), "filter taps must be finite");
    for (const auto &z : t) {
      any = any || z != cplx{};
    }
  }
  require(any, "filter must have at least one nonzero tap");
  if (anchor_) {
    require(*anchor_ >= 0 && *anchor_ < q_count(), "anchor channel out of range");
    require(at(*anchor_, 0, 0) == cplx(-1.0, 0.0),
            "anchored filter needs h_m[0] = -1");
  }
}

MultiFilter MultiFilter::from(const Filter &f) {
  std::optional<int> anchor;
  if (f.anchor_fixed()) {
    anchor = 0;
  }
  return MultiFilter(f.window(), {f.vec()}, anchor);
}

MultiFilter MultiFilter::unflatten(const Window &window, int q_count,
                                   std::span<const cplx> flat,
                                   std::optional<int> anchor) {
  const auto w = window.size();
  require(flat.size() == w * static_cast<std::size_t>(q_count),
          "flat tap vector has wrong length");
  std::vector<std::vector<cplx>> taps(q_count);
  for (int q = 0; q < q_count; ++q) {
    taps[q].assign(flat.begin() + q * w, flat.begin() + (q + 1) * w);
  }
  return MultiFilter(window, std::move(taps), anchor);
}

std::vector<cplx> MultiFilter::flatten() const {
  std::vector<cplx> out;
  out.reserve(window_.size() * taps_.size());
  for (const auto &t : taps_) {
    out.insert(out.end(), t.begin(), t.end());
  }
  return out;
}

Filter MultiFilter::channel_filter(int q) const {
  return Filter(window_, taps_[q], anchor_ && *anchor_ == q);
}

KSignal zero_fill(const KSignal &data, const SamplingMask &mask) {
  if (!(data.grid() == mask.grid())) {
    fail(ErrorCode::GridMismatch, "data and mask grids differ");
  }
  std::vector<cplx> out(data.vec());
  const auto acq = mask.acquired();
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!acq[i]) {
      out[i] = 0.0;
    }
  }
  return KSignal(data.grid(), std::move(out));
}

MultiKSignal zero_fill(const MultiKSignal &data, const SamplingMask &mask) {
  std::vector<KSignal> out;
  out.reserve(data.q_count());
  for (const auto &c : data.channels()) {
    out.push_back(zero_fill(c, mask));
  }
  return MultiKSignal(std::move(out));
}

namespace {

KSignal conv_stack(const KGrid &grid, std::span<const cplx> stack, int q_count,
                   const Window &w, std::span<const cplx> taps) {
  require(w.dims == grid.dims() || (w.dims == 1 && w.L[1] == 0 && w.P[1] == 0),
          "filter and signal dimensionality differ");
  const auto box = valid_box(grid, w);
  if (box.empty()) {
    fail(ErrorCode::InvalidArgument,
         "filter support (" + std::to_string(w.span(0)) +
             " taps) is longer than the signal");
  }
  const auto g = kernels::Geometry::of(grid, w);
  std::vector<cplx> out(g.valid());
  kernels::omp::annihilate(stack, q_count, g, taps, out);
  return KSignal(KGrid::subrange(grid, box), std::move(out));
}

} // namespace

KSignal conv_apply(const KSignal &signal, const Filter &filter) {
  return conv_stack(signal.grid(), signal.values(), 1, filter.window(),
                    filter.taps());
}

KSignal conv_apply(const MultiKSignal &signal, const MultiFilter &filter) {
  require(signal.q_count() == filter.q_count(),
          "filter and signal channel counts differ");
  const auto stack = signal.stacked();
  const auto taps = filter.flatten();
  return conv_stack(signal.grid(), stack, signal.q_count(), filter.window(),
                    taps);
}

double norm2(std::span<const cplx> v) {
  double s = 0.0;
  for (const auto &z : v) {
    s += std::norm(z);
  }
  return std::sqrt(s);
}

} // namespace linpred
