#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "phsyn/lti_eval.hpp"
#include "phsyn/ph_core.hpp"
#include "phsyn/synthesis.hpp"

namespace phsyn {

/// Scalable mass-spring-damper chain in port-Hamiltonian form. Masses are
/// chained by springs, the first mass is attached to ground by another
/// spring, and each mass carries a damper to ground. The state interleaves
/// (momentum, position) per mass, force inputs and velocity outputs sit at
/// the io masses, the disturbance w is an extra force at the first io mass
/// and z stacks that mass's velocity with the weighted control effort.
struct MSDConfig {
    int n_masses = 5;
    double mass = 4.0;    // kg
    double spring = 4.0;  // N/m
    double damper = 1.0;  // Ns/m
    std::vector<int> io_masses;  // 1-based; empty selects {1, 2} ({1} if n=1)
    double effort_weight = 0.1;  // beta in D12
    double noise_weight = 0.1;   // eta in D21
    double dist_gain = 4.8;      // disturbance force magnitude (calibrated
                                 // once so closed-loop levels match the
                                 // reference table magnitudes; see README)
};

PHPlant msd_plant(const MSDConfig& cfg);

/// Tabulates the plant on a frequency grid (generator for sampled-plant
/// files and the data-driven synthesis path).
SampledPlant sample_plant(const PHPlant& plant, const std::vector<double>& grid);

struct Table1Cell {
    int n = 0;  // plant state dimension
    int k = 0;  // controller order
    double hinf = 0.0;
    bool validated = false;  // norm solver vs grid bound
    double runtime_seconds = 0.0;
    long factorizations = 0;
    std::string status;  // "ok" or the failure message
};

/// Runs the synthesis sweep over (state dimension, controller order) cells
/// on MSD plants. Per-cell failures are recorded and the run continues.
std::vector<Table1Cell> run_table1_experiment(const std::vector<int>& sizes,
                                              const std::vector<int>& orders,
                                              const SynthesisConfig& base);

void write_table1_csv(const std::vector<Table1Cell>& cells, std::ostream& os);

}  // namespace phsyn
