#pragma once

// Reconstruction engines: structured (lifted) matrices, Cadzow-style
// low-rank completion, annihilation-penalised least squares and
// virtual-conjugate partial-Fourier recovery.

#include <optional>
#include <string>
#include <vector>

#include "linpred/grid.hpp"
#include "linpred/linalg.hpp"
#include "linpred/lp.hpp"

namespace linpred::recon {

// C: plain lifted channels. S: channels doubled with their virtual
// conjugates conj(x_q[-n]) appended after the originals.
enum class Variant { C, S };

const char *to_string(Variant v);
Variant parse_variant(const std::string &s);

// conj(x[-n]) on the same grid. On grids that are not symmetric the
// indices whose mirror lies off the grid are set to 0 and counted.
struct VirtualResult {
  MultiKSignal data;
  std::size_t unpaired = 0;
};
KSignal conjugate_reverse(const KSignal &x, std::size_t *unpaired = nullptr);
VirtualResult virtual_conjugate(const MultiKSignal &data);

struct StructuredMatrix {
  Variant variant = Variant::C;
  Window window;
  KGrid grid;
  int q_count = 1; // original channels; columns cover 2 * q_count for S
  RowMatrix m;
};

StructuredMatrix lift(const MultiKSignal &data, const Window &w, Variant v);
// Real adjoint of lift (the S variant's conjugate-reversal is antilinear).
MultiKSignal lift_adjoint(const StructuredMatrix &m);
// How many matrix entries each sample feeds; 0 means never covered.
std::vector<double> window_counts(const KGrid &grid, const Window &w, Variant v,
                                  int q_count);
// Adjoint divided by the counts (uncovered samples come back as 0).
MultiKSignal unlift(const StructuredMatrix &m);

struct ReconReport {
  std::string engine;
  int iterations = 0;
  bool converged = false;
  double residual = 0.0;      // final stopping quantity of the engine
  double data_residual = 0.0; // ||M x - d|| / ||d|| on measured samples
  int rank = 0;
  std::vector<double> spectrum_head; // leading singular values / sigma_max
  std::vector<double> objective;     // per-iteration objective (annihilation)
  double condition_estimate = 0.0;
  std::size_t uncovered = 0;
  std::vector<std::string> warnings;
};

struct ReconResult {
  MultiKSignal data;
  ReconReport report;
};

struct LowrankParams {
  Window window = Window::line(2, 2);
  Variant variant = Variant::C;
  int rank = 0; // 0 selects the auto rule
  double auto_tau = 0.05;
  int max_iters = 500;
  double tol = 1e-9;
  // Starting values for the missing samples (zero-fill when absent).
  std::optional<MultiKSignal> initial;
};

ReconResult lowrank_complete(const MultiKSignal &measured, const SamplingMask &mask,
                             const LowrankParams &params);

enum class AnnihilationMode { Hard, Soft };

struct AnnihilationParams {
  AnnihilationMode mode = AnnihilationMode::Hard;
  double lambda = 1.0;
  int max_iters = 500;
  double tol = 1e-9;
  // Bank filters cover [x, conj-reversed x] (2Q channels) instead of x.
  bool virtual_channels = false;
};

// Per-channel acquisition: channel q is measured where masks[q] is set.
// A single mask is shared by every channel.
ReconResult annihilation_recon(const MultiKSignal &measured,
                               const std::vector<SamplingMask> &masks,
                               const lp::FilterBank &bank,
                               const AnnihilationParams &params);
ReconResult annihilation_recon(const MultiKSignal &measured, const SamplingMask &mask,
                               const lp::FilterBank &bank,
                               const AnnihilationParams &params);

enum class PfMethod { LowrankS, AnnihilationVirtual };

struct PfParams {
  PfMethod method = PfMethod::LowrankS;
  LowrankParams lowrank{Window::line(3, 3), Variant::S, 0, 0.05, 2000, 1e-10, {}};
  // Start missing samples at conj(x[-n]) where the mirror was acquired.
  bool mirror_init = true;
  AnnihilationParams annihilation;
  double null_tau = 0.05; // nullspace threshold for the filter-based method
};

ReconResult pf_recon(const MultiKSignal &measured, const SamplingMask &mask,
                     const PfParams &params);

} // namespace linpred::recon
