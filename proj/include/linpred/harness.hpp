#pragma once

// Sampling masks, noise, error metrics, the reconstruction engine registry
// and batch experiments.

#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "linpred/grid.hpp"
#include "linpred/recon.hpp"

namespace linpred::harness {

enum class MaskKind {
  Full,
  Lowres,
  Uniform,
  Random,
  RandomPf,
  RandomNocalib,
  RandomPfNocalib,
  Stencil,
};

const char *to_string(MaskKind k);
MaskKind parse_mask_kind(const std::string &s);

struct MaskSpec {
  MaskKind kind = MaskKind::Full;
  double accel = 1.0;
  int calib = -1; // width per axis; -1 selects 1/8 of the grid
  double pf = 9.0 / 16.0;
  std::uint64_t seed = 0;
  std::vector<std::uint8_t> stencil; // row-major, grid-sized
};

// Axis 0 is the undersampled (phase-encode) axis in 2D: uniform and partial
// Fourier masks keep or drop whole lines n0 = const.
SamplingMask gen_mask(const MaskSpec &spec, const KGrid &grid);

// Plain PBM (P1 or P4) bitmap, rows along axis 0.
std::vector<std::uint8_t> read_pbm(const std::filesystem::path &path, int &rows,
                                   int &cols);

// Circular complex Gaussian noise: variance sigma^2 per sample.
MultiKSignal add_noise(const MultiKSignal &data, double sigma, std::uint64_t seed);

// ||estimate - truth|| / ||truth||; +inf when the truth is all zero.
double nrmse(const MultiKSignal &estimate, const MultiKSignal &truth);
double nrmse(const KSignal &estimate, const KSignal &truth);

struct Metrics {
  double nrmse = 0.0;
  std::vector<double> channel_nrmse;
  std::vector<std::vector<double>> leakage; // SMS only
  double condition_estimate = 0.0;
  bool truth_zero = false;
};

Metrics score(const MultiKSignal &estimate, const MultiKSignal &truth);

// ---- engine registry ----

struct EngineConfig {
  std::string engine = "zerofill"; // zerofill grappa spirit pruno lowrank pf
  recon::Variant variant = recon::Variant::C;
  int rank = 0;
  double lambda = 1.0;
  double tol = 1e-9;
  int max_iters = 500;
  int L = 2;
  int P = 2;
  double tau = 0.05;
  recon::AnnihilationMode mode = recon::AnnihilationMode::Hard;
  std::optional<double> ridge;
};

const std::vector<std::string> &engine_names();
EngineConfig config_from(const nlohmann::json &j, EngineConfig base = {});
nlohmann::json to_json(const EngineConfig &c);

// Window spanning [-L, P] on every active axis of the grid.
Window engine_window(const KGrid &grid, int L, int P);

// `measured` holds the acquired samples (anything elsewhere is ignored).
recon::ReconResult reconstruct(const MultiKSignal &measured, const SamplingMask &mask,
                               const EngineConfig &config);

// ---- experiments ----

// Image-space magnitude, root-sum-of-squares over channels, by a separable
// inverse DFT on the grid (2D only).
std::vector<double> rss_image(const MultiKSignal &data);
// Binary 16-bit PGM, max-normalised; rows are axis 0.
void write_pgm(const std::vector<double> &image, int rows, int cols,
               const std::filesystem::path &path);

struct ExperimentOptions {
  std::filesystem::path out_dir; // empty: nothing written
  bool omit_timing = false;
  std::filesystem::path base_dir; // resolves relative scene/stencil paths
};

// Config:
//   {"name":"demo", "scene":"demo.scene.json" | {...}, "grid":[64,64],
//    "masks":[{"name":"r4","kind":"random","accel":4,"calib":16,"seed":1}],
//    "methods":[{"name":"grappa","engine":"grappa","L":1,"P":1}],
//    "sigmas":[0,0.01], "seeds":[1,2], "images":true}
// Returns the report document; writes report.json, results.csv and images
// into out_dir when set. Failing cases are recorded and the run continues.
nlohmann::json run_experiment(const nlohmann::json &config,
                              const ExperimentOptions &options = {});

std::string results_csv(const nlohmann::json &report);

} // namespace linpred::harness
