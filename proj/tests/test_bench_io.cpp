#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "phsyn/bench.hpp"
#include "phsyn/hinf.hpp"
#include "phsyn/linalg.hpp"
#include "phsyn/serialize.hpp"
#include "phsyn/synthesis.hpp"

using namespace phsyn;

namespace {

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("msd_plant structural validity across the parameter sweep") {
    for (int n_masses : {1, 2, 5, 10, 50}) {
        for (double damper : {0.0, 1.0}) {
            MSDConfig cfg;
            cfg.n_masses = n_masses;
            cfg.damper = damper;
            const PHPlant plant = msd_plant(cfg);
            CHECK(plant.state_dim() == 2 * n_masses);
            CHECK(validate_ph_form(plant.ph).pass);
            if (damper == 0.0) CHECK(plant.ph.R.norm() == 0.0);
        }
    }
    MSDConfig cfg;  // default five masses
    const PHPlant plant = msd_plant(cfg);
    CHECK(plant.port_dim() == 2);
    CHECK(plant.dist_dim() == 1);
    CHECK(plant.perf_dim() == 3);
}

TEST_CASE("undamped chain is lossless") {
    MSDConfig cfg;
    cfg.n_masses = 4;
    cfg.damper = 0.0;
    const PHPlant plant = msd_plant(cfg);
    const StateSpace ss = ph_to_statespace(plant.ph);
    CHECK(std::abs(spectral_abscissa(ss.A)) <= 1e-10);
}

TEST_CASE("single mass characteristic polynomial") {
    MSDConfig cfg;
    cfg.n_masses = 1;
    cfg.mass = 1.0;
    cfg.spring = 1.0;
    cfg.damper = 1.0;
    cfg.io_masses = {1};
    const PHPlant plant = msd_plant(cfg);
    const StateSpace ss = ph_to_statespace(plant.ph);
    // Roots of lambda^2 + lambda + 1.
    Eigen::EigenSolver<Matrix> es(ss.A);
    for (int i = 0; i < 2; ++i) {
        const Complex ev = es.eigenvalues()(i);
        CHECK(std::abs(ev * ev + ev + Complex(1.0, 0.0)) < 1e-12);
    }
}

TEST_CASE("msd_plant rejects bad io indices") {
    MSDConfig cfg;
    cfg.n_masses = 2;
    cfg.io_masses = {3};
    CHECK_THROWS_AS(msd_plant(cfg), Error);
    cfg.io_masses = {1, 1};
    CHECK_THROWS_AS(msd_plant(cfg), Error);
}

TEST_CASE("plant JSON round trip is bitwise lossless") {
    MSDConfig cfg;
    const PHPlant plant = msd_plant(cfg);
    const std::string path = temp_path("phsyn_plant_rt.json");
    save_ph_plant(plant, path);
    const PHPlant back = load_ph_plant(path);
    CHECK((back.ph.J - plant.ph.J).norm() == 0.0);
    CHECK((back.ph.R - plant.ph.R).norm() == 0.0);
    CHECK((back.ph.Q - plant.ph.Q).norm() == 0.0);
    CHECK((back.ph.G - plant.ph.G).norm() == 0.0);
    CHECK((back.ph.F - plant.ph.F).norm() == 0.0);
    CHECK((back.ph.S - plant.ph.S).norm() == 0.0);
    CHECK((back.ph.N - plant.ph.N).norm() == 0.0);
    CHECK((back.B1 - plant.B1).norm() == 0.0);
    CHECK((back.C1 - plant.C1).norm() == 0.0);
    CHECK((back.D11 - plant.D11).norm() == 0.0);
    CHECK((back.D12 - plant.D12).norm() == 0.0);
    CHECK((back.D21 - plant.D21).norm() == 0.0);
    std::remove(path.c_str());
}

TEST_CASE("loading a non-skew J names the violated constraint") {
    MSDConfig cfg;
    PHPlant plant = msd_plant(cfg);
    plant.ph.J(0, 1) += 1e-3;
    const std::string path = temp_path("phsyn_bad_j.json");
    {
        std::ofstream os(path);
        os << to_json_string(plant);
    }
    CHECK_THROWS_WITH_AS(load_ph_plant(path),
                         doctest::Contains("J skewness"), CertificateError);
    std::remove(path.c_str());
}

TEST_CASE("schema violations carry field-level messages") {
    const std::string path = temp_path("phsyn_missing_field.json");
    {
        std::ofstream os(path);
        os << "{\"format\": \"ph-plant/v1\", \"j\": [[0]]}";
    }
    CHECK_THROWS_WITH_AS(load_ph_plant(path), doctest::Contains("'r'"),
                         SchemaError);
    std::remove(path.c_str());

    const std::string path2 = temp_path("phsyn_bad_format.json");
    {
        std::ofstream os(path2);
        os << "{\"format\": \"something/v9\"}";
    }
    CHECK_THROWS_AS(load_plant(path2), SchemaError);
    std::remove(path2.c_str());
}

TEST_CASE("state-space and ph-form controller documents load") {
    StateSpace K;
    K.A = Matrix::Constant(1, 1, -1.0);
    K.B = Matrix::Constant(1, 1, 1.0);
    K.C = Matrix::Constant(1, 1, -3.0);
    K.D = Matrix::Constant(1, 1, 1.0);
    const std::string path = temp_path("phsyn_ctrl_ss.json");
    save_statespace(K, path);
    const StateSpace back = load_controller(path);
    CHECK((back.A - K.A).norm() == 0.0);
    CHECK((back.C - K.C).norm() == 0.0);
    std::remove(path.c_str());

    ThetaPartition part{2, 1};
    const ThetaVector theta(Vector::Ones(part.total()), part);
    const PHForm ph = theta_to_controller(theta, 1e-8);
    const std::string path2 = temp_path("phsyn_ctrl_ph.json");
    save_ph_form(ph, path2);
    const StateSpace kss = load_controller(path2);
    const StateSpace direct = ph_to_statespace(ph);
    CHECK((kss.A - direct.A).norm() == 0.0);
    CHECK((kss.D - direct.D).norm() == 0.0);
    std::remove(path2.c_str());
}

TEST_CASE("sampled-plant path matches the state-space path") {
    MSDConfig cfg;
    cfg.n_masses = 2;
    const PHPlant plant = msd_plant(cfg);
    const auto grid = log_grid(1e-3, 1e3, 200);
    const SampledPlant sp = sample_plant(plant, grid);

    const std::string path = temp_path("phsyn_sampled.json");
    save_sampled_plant(sp, path);
    const LoadedPlant loaded = load_plant(path);
    REQUIRE(loaded.sampled.has_value());
    std::remove(path.c_str());

    PlantEvaluator ev_file(*loaded.sampled);
    PlantEvaluator ev_ss(plant);

    // Identical (theta, S) on both paths.
    std::vector<double> pts;
    for (size_t i = 0; i < grid.size(); i += 10) pts.push_back(grid[i]);
    const SampleSet S = SampleSet::from_points(pts);
    const ThetaVector theta = initial_theta(2, plant.port_dim(), 99);

    for (double gamma : {0.1, 0.5, 2.0}) {
        const double a = loss(gamma, ev_file, theta, S);
        const double b = loss(gamma, ev_ss, theta, S);
        CHECK(std::abs(a - b) <= 1e-10 * std::max(1.0, b));
    }
}

TEST_CASE("synthesis runs on a sampled plant and matches the dense loss") {
    MSDConfig cfg;
    cfg.n_masses = 1;
    cfg.io_masses = {1};
    const PHPlant plant = msd_plant(cfg);
    const SampledPlant sp = sample_plant(plant, log_grid(1e-3, 1e3, 200));
    PlantEvaluator ev(sp);

    SynthesisConfig scfg;
    scfg.order = 1;
    scfg.seed = 5;
    scfg.eps1 = 5e-2;
    scfg.initial_samples = 50;
    const SynthesisReport rep = sobsyn(ev, scfg);
    CHECK(validate_ph_form(rep.controller).pass);
    CHECK_FALSE(rep.hinf_validated);  // grid bound only on the sampled path

    // Final sampled-loss alpha agrees with the dense-path loss at the same
    // theta and sample set.
    PlantEvaluator dense(plant);
    SampleSet S = SampleSet::from_points(sp.grid());
    const double a = loss(rep.gamma_hi, ev, rep.theta, S);
    const double b = loss(rep.gamma_hi, dense, rep.theta, S);
    CHECK(std::abs(a - b) <= 1e-10 * std::max(1.0, b));
}

TEST_CASE("sigma and popov CSV layouts") {
    SigmaTable st;
    st.omega = {0.5, 2.0};
    st.sigma = Matrix{{3.0, 1.0}, {2.5, 0.5}};
    std::ostringstream os;
    write_sigma_csv(st, os);
    const std::string text = os.str();
    CHECK(text.rfind("omega,sigma_1,sigma_2\n", 0) == 0);
    CHECK(text.find("0.5,3,1") != std::string::npos);

    PopovTable pt;
    pt.omega = {1.0};
    pt.eigs = Matrix{{-1.5, 2.0}};
    std::ostringstream os2;
    write_popov_csv(pt, os2);
    CHECK(os2.str().rfind("omega,eig_1,eig_2\n", 0) == 0);
}

TEST_CASE("table1 runner records cells and failures") {
    SynthesisConfig base;
    base.seed = 1;
    base.eps1 = 5e-2;
    const auto cells = run_table1_experiment({10, 7}, {1}, base);
    REQUIRE(cells.size() == 2);
    CHECK(cells[0].status == "ok");
    CHECK(cells[0].hinf > 0.0);
    CHECK(cells[0].factorizations > 0);
    CHECK(cells[1].status != "ok");  // odd size rejected, run continues

    std::ostringstream os;
    write_table1_csv(cells, os);
    CHECK(os.str().rfind("n,k,hinf,validated,runtime_s,factorizations,status\n",
                         0) == 0);
}

TEST_CASE("certificate JSON emits the expected fields") {
    PassivityCertificate cert;
    cert.passive = true;
    cert.min_popov_eig = 0.25;
    cert.kyp_feasible = true;
    cert.method = "hamiltonian-test";
    const std::string text = to_json_string(cert);
    CHECK(text.find("\"passive\": true") != std::string::npos);
    CHECK(text.find("\"min_popov_eig\"") != std::string::npos);
    CHECK(text.find("\"kyp_feasible\": true") != std::string::npos);
}
