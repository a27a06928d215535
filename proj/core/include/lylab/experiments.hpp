#ifndef LYLAB_EXPERIMENTS_HPP
#define LYLAB_EXPERIMENTS_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "lylab/cocycles.hpp"
#include "lylab/sections.hpp"
#include "lylab/spectra.hpp"
#include "lylab/types.hpp"

namespace lylab {

struct ScanConfig {
    std::vector<double> epsilon_grid;  // non-negative, ascending
    int n_seeds = 10;
    double gap_floor = 1e-4;
    double horizon_T = 2000.0;
    double renorm_dt = 1.0;
    double transient = 50.0;
    CocycleGenerator base_generator = CocycleGenerator::zero(2);
    VectorFieldSpec flow = VectorFieldSpec::lorenz();
    Vec3 x0 = Vec3(1.0, 1.0, 20.0);
    IntegratorConfig integrator;
    std::uint64_t experiment_id = 1;
    std::uint64_t seed_offset = 0;
    int jobs = 1;
    // bunching precheck parameters
    double theta = 0.5;
    double eta = 1.0;

    void validate() const;
};

struct SeedRecord {
    std::uint64_t seed = 0;
    double epsilon = 0.0;
    double min_gap = 0.0;
    bool simple = false;
    bool resolved = false;
    bool failed = false;
    std::string error;
};

struct EpsilonAggregate {
    double epsilon = 0.0;
    int n_resolved = 0;
    int unresolved_count = 0;
    int failed_count = 0;
    double fraction_simple = 0.0;  // over resolved spectra only
    double gap_q10 = 0.0, gap_q50 = 0.0, gap_q90 = 0.0;
};

struct ScanResult {
    std::vector<SeedRecord> records;  // sorted by (epsilon index, seed)
    std::vector<EpsilonAggregate> per_epsilon;
    bool base_bunched = false;  // warning flag when false, not an error
    double base_gamma_star = 0.0;
};

/// Density surrogate for the simple-spectrum genericity claim: perturb the
/// base generator per (epsilon, seed), estimate the spectrum, aggregate the
/// fraction of resolved spectra that are simple.
ScanResult simplicity_scan(const ScanConfig& cfg);

struct OpennessPoint {
    double delta = 0.0;
    double retention = 0.0;  // fraction of seeds retaining a simple verdict
    double min_gap_over_seeds = 0.0;
    int n_resolved = 0;
};

struct OpennessResult {
    std::vector<OpennessPoint> per_delta;
    double base_min_gap = 0.0;
};

/// Openness surrogate: retention of the simple verdict under delta-sized
/// perturbations of a generator with a resolved simple spectrum.
OpennessResult openness_probe(const CocycleGenerator& gen_simple, const ScanConfig& cfg,
                              const std::vector<double>& delta_grid, int n_seeds);

struct SuspensionReport {
    int n_returns = 0;
    double s_n = 0.0;              // sum of return times
    double orbit_time = 0.0;       // crossing time measured on one continuous orbit
    double time_rel_error = 0.0;   // |s_n - orbit_time| / s_n
    double matrix_rel_error = 0.0; // product-of-legs vs direct evolution
    double exponent_error = 0.0;   // max difference of per-time log singular values
};

/// Reconstructs the flow cocycle over [0, s_n] as the ordered product of
/// per-return legs and compares against direct evolution over the same orbit.
SuspensionReport suspension_consistency(const CocycleGenerator& gen, const VectorFieldSpec& spec,
                                        const CrossSection& sec, const Vec2& x0, int n_returns,
                                        const IntegratorConfig& cfg, double tau_min = 0.05,
                                        double tau_max = 50.0);

/// Fixed observable catalog for Birkhoff averaging.
enum class Observable { One, X, Y, Z, Z2, IndicatorZGt27 };

Observable observable_from_name(const std::string& name);
std::string observable_name(Observable o);
double evaluate_observable(Observable o, const Vec3& p);

struct BirkhoffReport {
    Observable observable = Observable::X;
    std::vector<double> averages;  // one per initial condition
    double max_pairwise_spread = 0.0;
    double empirical_std = 0.0;  // std of the observable along the first orbit
    double horizon = 0.0;
};

/// Time averages of one observable from several initial conditions; pairwise
/// agreement is the numerical evidence of a physical measure.
BirkhoffReport birkhoff_check(const VectorFieldSpec& spec, Observable obs,
                              const std::vector<Vec3>& x0_list, double T,
                              const IntegratorConfig& cfg, double transient = 20.0);

}  // namespace lylab

#endif
