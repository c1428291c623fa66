#include "phsyn/bench.hpp"

#include <algorithm>
#include <ostream>
#include <set>

#include <Eigen/Eigenvalues>

namespace phsyn {

PHPlant msd_plant(const MSDConfig& cfg) {
    const int N = cfg.n_masses;
    if (N < 1) throw Error("msd_plant: n_masses must be >= 1");
    if (!(cfg.mass > 0.0) || !(cfg.spring > 0.0) || !(cfg.damper >= 0.0)) {
        throw Error("msd_plant: need mass > 0, spring > 0, damper >= 0");
    }
    std::vector<int> io = cfg.io_masses;
    if (io.empty()) io = N >= 2 ? std::vector<int>{1, 2} : std::vector<int>{1};
    std::set<int> seen;
    for (int idx : io) {
        if (idx < 1 || idx > N) {
            throw Error("msd_plant: io mass index " + std::to_string(idx) +
                        " out of range 1.." + std::to_string(N));
        }
        if (!seen.insert(idx).second) {
            throw Error("msd_plant: duplicate io mass index");
        }
    }

    const int n = 2 * N;
    const int m = static_cast<int>(io.size());
    const auto p_of = [](int mass_idx) { return 2 * mass_idx; };      // 0-based
    const auto q_of = [](int mass_idx) { return 2 * mass_idx + 1; };

    // Spring Laplacian: ground edge at mass 0, neighbor edges along the chain.
    Matrix L = Matrix::Zero(N, N);
    L(0, 0) += 1.0;  // ground attachment
    for (int i = 0; i + 1 < N; ++i) {
        L(i, i) += 1.0;
        L(i + 1, i + 1) += 1.0;
        L(i, i + 1) -= 1.0;
        L(i + 1, i) -= 1.0;
    }

    PHForm ph;
    ph.J = Matrix::Zero(n, n);
    ph.R = Matrix::Zero(n, n);
    ph.Q = Matrix::Zero(n, n);
    for (int i = 0; i < N; ++i) {
        ph.J(p_of(i), q_of(i)) = -1.0;
        ph.J(q_of(i), p_of(i)) = 1.0;
        ph.Q(p_of(i), p_of(i)) = 1.0 / cfg.mass;
        ph.R(p_of(i), p_of(i)) = cfg.damper;  // per-mass damper to ground
        for (int j = 0; j < N; ++j) {
            ph.Q(q_of(i), q_of(j)) = cfg.spring * L(i, j);
        }
    }
    ph.G = Matrix::Zero(n, m);
    for (int j = 0; j < m; ++j) ph.G(p_of(io[j] - 1), j) = 1.0;
    ph.F = Matrix::Zero(n, m);
    ph.S = Matrix::Zero(m, m);
    ph.N = Matrix::Zero(m, m);

    PHPlant plant;
    plant.ph = std::move(ph);
    const int p1 = 1 + m;
    plant.B1 = Matrix::Zero(n, 1);
    plant.B1(p_of(io[0] - 1), 0) = cfg.dist_gain;
    plant.C1 = Matrix::Zero(p1, n);
    plant.C1(0, p_of(io[0] - 1)) = 1.0 / cfg.mass;  // velocity of first io mass
    plant.D11 = Matrix::Zero(p1, 1);
    plant.D12 = Matrix::Zero(p1, m);
    plant.D12.bottomRows(m) = cfg.effort_weight * Matrix::Identity(m, m);
    plant.D21 = Matrix::Zero(m, 1);
    plant.D21(m - 1, 0) = cfg.noise_weight;
    plant.check_dims();
    return plant;
}

SampledPlant sample_plant(const PHPlant& plant, const std::vector<double>& grid) {
    std::vector<double> sorted = grid;
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());

    PlantEvaluator evaluator(plant);
    SampledPlant sp;
    sp.points.reserve(sorted.size());
    for (double w : sorted) sp.points.push_back(evaluator.at(w));
    sp.check();
    return sp;
}

std::vector<Table1Cell> run_table1_experiment(const std::vector<int>& sizes,
                                              const std::vector<int>& orders,
                                              const SynthesisConfig& base) {
    std::vector<Table1Cell> cells;
    for (int n : sizes) {
        if (n < 2 || n % 2 != 0) {
            Table1Cell bad;
            bad.n = n;
            bad.status = "state dimension must be even and >= 2";
            cells.push_back(bad);
            continue;
        }
        MSDConfig mcfg;
        mcfg.n_masses = n / 2;
        const PHPlant plant = msd_plant(mcfg);
        for (int k : orders) {
            Table1Cell cell;
            cell.n = n;
            cell.k = k;
            try {
                SynthesisConfig cfg = base;
                cfg.order = k;
                const SynthesisReport rep = sobsyn(plant, cfg);
                cell.hinf = rep.achieved_hinf;
                cell.validated = rep.hinf_validated;
                cell.runtime_seconds = rep.wall_seconds;
                cell.factorizations = rep.plant_factorizations;
                cell.status = "ok";
            } catch (const std::exception& e) {
                cell.status = e.what();
            }
            cells.push_back(std::move(cell));
        }
    }
    return cells;
}

void write_table1_csv(const std::vector<Table1Cell>& cells, std::ostream& os) {
    os << "n,k,hinf,validated,runtime_s,factorizations,status\n";
    os.precision(16);
    for (const auto& c : cells) {
        std::string status = c.status;
        std::replace(status.begin(), status.end(), ',', ';');
        std::replace(status.begin(), status.end(), '\n', ' ');
        os << c.n << "," << c.k << "," << c.hinf << ","
           << (c.validated ? 1 : 0) << "," << c.runtime_seconds << ","
           << c.factorizations << "," << status << "\n";
    }
}

}  // namespace phsyn
