#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ddsde/drift.hpp"
#include "ddsde/euler_density.hpp"
#include "ddsde/grid.hpp"
#include "ddsde/initial.hpp"

namespace ddsde {

struct ParticleEnsemble {
  int dim = 1;
  std::uint64_t M = 0;
  std::uint64_t k = 0;
  std::uint64_t seed = 0;
  std::vector<double> positions;  // M * dim, particle-major
};

struct KdeSpec {
  enum class Rule { fixed, silverman };
  Rule rule = Rule::silverman;
  double sigma_b = 0.1;  // per-axis bandwidth when rule == fixed
};

ParticleEnsemble init_ensemble(const InitialDistribution& dist, int dim,
                               std::uint64_t M, std::uint64_t seed);

// One Euler step kh -> (k+1)h. density supplies the feedback value at the
// step's start; it may be null for k = 0 (undrifted first step) or for
// drifts declaring lipschitz_u == 0 (no density dependence, u passed as 0).
ParticleEnsemble advance(const ParticleEnsemble& e, const DriftSpec& drift,
                         const GridDensity* density, double h);

// Per-axis kernel widths: fixed, or 1.06 sd_axis M^{-1/(d+4)}.
std::vector<double> kde_bandwidth(const ParticleEnsemble& e, const KdeSpec& spec);

// Exact Gaussian-mixture KDE at queries (Q * dim row-major), unit integral.
std::vector<double> kde_evaluate(const ParticleEnsemble& e, const KdeSpec& spec,
                                 std::span<const double> queries);

// Grid KDE: conservative linear binning then Gaussian smoothing with the
// same per-axis bandwidths; the step-feedback estimator.
GridDensity binned_kde(const ParticleEnsemble& e, const KdeSpec& spec,
                       const GridSpec& grid);

enum class FeedbackMode { kde, coupled };

struct ParticleRunResult {
  std::vector<std::pair<double, ParticleEnsemble>> snapshots;
};

// Full trajectory with snapshots at lattice times in [0, T]. kde mode builds
// the feedback from the ensemble each step (dim <= 2); coupled mode reads
// feedback[k-1] = grid density at time kh, k = 1..N-1. Drifts declaring
// lipschitz_u == 0 need no feedback in any dim.
ParticleRunResult run_particles(const InitialDistribution& dist,
                                const DriftSpec& drift, int dim, std::uint64_t M,
                                std::uint64_t seed, const TimeGrid& time,
                                FeedbackMode mode, const KdeSpec& kde,
                                const GridSpec* kde_grid,
                                std::span<const GridDensity> feedback,
                                std::span<const double> snapshot_times);

// sup over pairs of mean |X_t - X_s|^4 / |t - s|^2.
double moment_increment_check(
    const std::vector<std::pair<double, ParticleEnsemble>>& trajectory,
    std::span<const std::pair<double, double>> pairs);

struct Expectation {
  double value = 0.0;
  double half_width = 0.0;  // 3 sigma-hat / sqrt(M)
};

Expectation empirical_expectation(
    const ParticleEnsemble& e,
    const std::function<double(std::span<const double>)>& f, double f_bound);

void save_particles(const ParticleEnsemble& e, const std::string& path);
ParticleEnsemble load_particles(const std::string& path);

}  // namespace ddsde
