#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "phsyn/bench.hpp"
#include "phsyn/hinf.hpp"
#include "phsyn/linalg.hpp"
#include "phsyn/lti_eval.hpp"
#include "phsyn/parallel.hpp"
#include "phsyn/passivity.hpp"
#include "phsyn/ph_core.hpp"
#include "phsyn/serialize.hpp"
#include "phsyn/synthesis.hpp"

namespace py = pybind11;
using namespace phsyn;

namespace {

ThetaVector make_theta(const Vector& data, int k, int m) {
    return ThetaVector(data, ThetaPartition{k, m});
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Structured fixed-order H-infinity synthesis for "
              "port-Hamiltonian plants";

    py::register_exception<DimensionError>(m, "DimensionError");
    py::register_exception<PoleAtSampleError>(m, "PoleAtSampleError");
    py::register_exception<IllPosedError>(m, "IllPosedError");
    py::register_exception<InstabilityError>(m, "InstabilityError");
    py::register_exception<CertificateError>(m, "CertificateError");
    py::register_exception<InfeasibleError>(m, "InfeasibleError");
    py::register_exception<SchemaError>(m, "SchemaError");

    py::enum_<FeedbackSign>(m, "FeedbackSign")
        .value("POSITIVE", FeedbackSign::Positive)
        .value("NEGATIVE", FeedbackSign::Negative);

    py::class_<StateSpace>(m, "StateSpace")
        .def(py::init([](Matrix A, Matrix B, Matrix C, Matrix D) {
                 StateSpace ss{std::move(A), std::move(B), std::move(C),
                               std::move(D)};
                 ss.check_dims();
                 return ss;
             }),
             py::arg("a"), py::arg("b"), py::arg("c"), py::arg("d"))
        .def_readwrite("a", &StateSpace::A)
        .def_readwrite("b", &StateSpace::B)
        .def_readwrite("c", &StateSpace::C)
        .def_readwrite("d", &StateSpace::D)
        .def_property_readonly("states", &StateSpace::states)
        .def_property_readonly("inputs", &StateSpace::inputs)
        .def_property_readonly("outputs", &StateSpace::outputs);

    py::class_<PHForm>(m, "PHForm")
        .def(py::init([](Matrix J, Matrix R, Matrix Q, Matrix G, Matrix F,
                         Matrix S, Matrix N) {
                 PHForm ph{std::move(J), std::move(R), std::move(Q),
                           std::move(G), std::move(F), std::move(S),
                           std::move(N)};
                 ph.check_dims();
                 return ph;
             }),
             py::arg("j"), py::arg("r"), py::arg("q"), py::arg("g"),
             py::arg("f"), py::arg("s"), py::arg("n"))
        .def_readwrite("j", &PHForm::J)
        .def_readwrite("r", &PHForm::R)
        .def_readwrite("q", &PHForm::Q)
        .def_readwrite("g", &PHForm::G)
        .def_readwrite("f", &PHForm::F)
        .def_readwrite("s", &PHForm::S)
        .def_readwrite("n", &PHForm::N)
        .def_property_readonly("state_dim", &PHForm::state_dim)
        .def_property_readonly("port_dim", &PHForm::port_dim)
        .def("passivity_matrix", &PHForm::passivity_matrix);

    py::class_<PHPlant>(m, "PHPlant")
        .def(py::init([](PHForm ph, Matrix B1, Matrix C1, Matrix D11,
                         Matrix D12, Matrix D21) {
                 PHPlant plant{std::move(ph), std::move(B1), std::move(C1),
                               std::move(D11), std::move(D12), std::move(D21)};
                 plant.check_dims();
                 return plant;
             }),
             py::arg("ph"), py::arg("b1"), py::arg("c1"), py::arg("d11"),
             py::arg("d12"), py::arg("d21"))
        .def_readwrite("ph", &PHPlant::ph)
        .def_readwrite("b1", &PHPlant::B1)
        .def_readwrite("c1", &PHPlant::C1)
        .def_readwrite("d11", &PHPlant::D11)
        .def_readwrite("d12", &PHPlant::D12)
        .def_readwrite("d21", &PHPlant::D21)
        .def_property_readonly("state_dim", &PHPlant::state_dim)
        .def_property_readonly("port_dim", &PHPlant::port_dim)
        .def_property_readonly("dist_dim", &PHPlant::dist_dim)
        .def_property_readonly("perf_dim", &PHPlant::perf_dim);

    py::class_<ValidationEntry>(m, "ValidationEntry")
        .def_readonly("constraint", &ValidationEntry::constraint)
        .def_readonly("violation", &ValidationEntry::violation)
        .def_readonly("ok", &ValidationEntry::pass);

    py::class_<ValidationReport>(m, "ValidationReport")
        .def_readonly("entries", &ValidationReport::entries)
        .def_property_readonly("ok",
                               [](const ValidationReport& r) { return r.pass; })
        .def("summary", &ValidationReport::summary);

    py::class_<HinfResult>(m, "HinfResult")
        .def_readonly("norm", &HinfResult::norm)
        .def_readonly("peak_omega", &HinfResult::peak_omega)
        .def_readonly("iterations", &HinfResult::iterations)
        .def_readonly("converged", &HinfResult::converged);

    py::class_<PassivityCertificate>(m, "PassivityCertificate")
        .def_readonly("passive", &PassivityCertificate::passive)
        .def_readonly("min_popov_eig", &PassivityCertificate::min_popov_eig)
        .def_readonly("witness_omega", &PassivityCertificate::witness_omega)
        .def_readonly("kyp_feasible", &PassivityCertificate::kyp_feasible)
        .def_readonly("method", &PassivityCertificate::method)
        .def_readonly("indeterminate", &PassivityCertificate::indeterminate);

    py::class_<MSDConfig>(m, "MSDConfig")
        .def(py::init<>())
        .def_readwrite("n_masses", &MSDConfig::n_masses)
        .def_readwrite("mass", &MSDConfig::mass)
        .def_readwrite("spring", &MSDConfig::spring)
        .def_readwrite("damper", &MSDConfig::damper)
        .def_readwrite("io_masses", &MSDConfig::io_masses)
        .def_readwrite("effort_weight", &MSDConfig::effort_weight)
        .def_readwrite("noise_weight", &MSDConfig::noise_weight)
        .def_readwrite("dist_gain", &MSDConfig::dist_gain);

    py::class_<SynthesisConfig>(m, "SynthesisConfig")
        .def(py::init<>())
        .def_readwrite("order", &SynthesisConfig::order)
        .def_readwrite("gamma_u", &SynthesisConfig::gamma_u)
        .def_readwrite("eps1", &SynthesisConfig::eps1)
        .def_readwrite("eps2", &SynthesisConfig::eps2)
        .def_readwrite("max_bfgs_iterations",
                       &SynthesisConfig::max_bfgs_iterations)
        .def_readwrite("omega_min", &SynthesisConfig::omega_min)
        .def_readwrite("omega_max", &SynthesisConfig::omega_max)
        .def_readwrite("initial_samples", &SynthesisConfig::initial_samples)
        .def_readwrite("seed", &SynthesisConfig::seed)
        .def_readwrite("sign", &SynthesisConfig::sign)
        .def_readwrite("audit_points", &SynthesisConfig::audit_points)
        .def_readwrite("audit_slack", &SynthesisConfig::audit_slack)
        .def_readwrite("q_shift", &SynthesisConfig::q_shift)
        .def_readwrite("validate", &SynthesisConfig::validate);

    py::class_<IterationRecord>(m, "IterationRecord")
        .def_readonly("gamma", &IterationRecord::gamma)
        .def_readonly("alpha", &IterationRecord::alpha)
        .def_readonly("sample_count", &IterationRecord::sample_count)
        .def_readonly("bfgs_iterations", &IterationRecord::bfgs_iterations)
        .def_readonly("accepted", &IterationRecord::accepted);

    py::class_<SynthesisReport>(m, "SynthesisReport")
        .def_property_readonly(
            "theta", [](const SynthesisReport& r) { return r.theta.data; })
        .def_readonly("controller", &SynthesisReport::controller)
        .def_readonly("gamma_lo", &SynthesisReport::gamma_lo)
        .def_readonly("gamma_hi", &SynthesisReport::gamma_hi)
        .def_readonly("history", &SynthesisReport::history)
        .def_readonly("achieved_hinf", &SynthesisReport::achieved_hinf)
        .def_readonly("peak_omega", &SynthesisReport::peak_omega)
        .def_readonly("hinf_validated", &SynthesisReport::hinf_validated)
        .def_readonly("closed_loop_abscissa",
                      &SynthesisReport::closed_loop_abscissa)
        .def_readonly("controller_certificate",
                      &SynthesisReport::controller_certificate)
        .def_readonly("wall_seconds", &SynthesisReport::wall_seconds)
        .def_readonly("plant_factorizations",
                      &SynthesisReport::plant_factorizations)
        .def_readonly("degraded_convergence",
                      &SynthesisReport::degraded_convergence);

    m.def("set_num_threads", &set_num_threads, py::arg("n"));
    m.def("log_grid", &log_grid, py::arg("wmin"), py::arg("wmax"), py::arg("n"));

    m.def("validate_ph_form",
          [](const PHForm& ph) { return validate_ph_form(ph); }, py::arg("ph"));
    m.def("theta_length", [](int k, int m) {
        return ThetaPartition{k, m}.total();
    }, py::arg("k"), py::arg("m"));
    m.def("theta_to_controller",
          [](const Vector& theta, int k, int m, double shift) {
              return theta_to_controller(make_theta(theta, k, m), shift);
          },
          py::arg("theta"), py::arg("k"), py::arg("m"), py::arg("shift") = -1.0);
    m.def("controller_to_theta",
          [](const PHForm& ph) { return controller_to_theta(ph).data; },
          py::arg("ph"));
    m.def("initial_theta",
          [](int k, int m, std::uint64_t seed, double noise) {
              return initial_theta(k, m, seed, noise).data;
          },
          py::arg("k"), py::arg("m"), py::arg("seed") = 0,
          py::arg("noise") = 0.1);
    m.def("ph_to_statespace", &ph_to_statespace, py::arg("ph"));
    m.def("hamiltonian_value", &hamiltonian_value, py::arg("ph"), py::arg("x"));

    m.def("eval_transfer", &eval_transfer, py::arg("ss"), py::arg("s"));
    m.def("spectral_abscissa", &spectral_abscissa, py::arg("a"));
    m.def("hinf_norm", &hinf_norm, py::arg("ss"), py::arg("rel_tol") = 1e-6);
    m.def("closed_loop_matrix", &closed_loop_matrix, py::arg("plant_uy"),
          py::arg("controller"), py::arg("sign") = FeedbackSign::Negative);
    m.def("closed_loop_system",
          [](const PHPlant& plant, const StateSpace& K, FeedbackSign sign) {
              return closed_loop_system(PlantSS::from_ph(plant), K, sign);
          },
          py::arg("plant"), py::arg("controller"),
          py::arg("sign") = FeedbackSign::Negative);
    m.def("closed_loop_sigma",
          [](const PHPlant& plant, const StateSpace& K, FeedbackSign sign,
             const std::vector<double>& grid) {
              PlantEvaluator ev(plant);
              const SigmaTable t = sigma_sweep(
                  [&](double w) {
                      return closed_loop_response(ev, K, sign, w);
                  },
                  grid);
              return py::make_tuple(t.omega, t.sigma);
          },
          py::arg("plant"), py::arg("controller"), py::arg("sign"),
          py::arg("grid"));
    m.def("simulate_lti",
          [](const StateSpace& ss, const Matrix& u, const Vector& x0,
             double dt) {
              const Trajectory t = simulate_lti(ss, u, x0, dt);
              return py::make_tuple(t.x, t.y);
          },
          py::arg("ss"), py::arg("u"), py::arg("x0"), py::arg("dt"));

    m.def("popov_sweep",
          [](const StateSpace& K, const std::vector<double>& grid) {
              const PopovTable t = popov_sweep(K, grid);
              return py::make_tuple(t.omega, t.eigs);
          },
          py::arg("controller"), py::arg("grid"));
    m.def("kyp_check", &kyp_check, py::arg("controller"),
          py::arg("tol") = -1.0);
    m.def("controllability_gramian_cholesky", &controllability_gramian_cholesky,
          py::arg("controller"));
    m.def("passivity_enforce",
          [](const StateSpace& K, const std::vector<double>& grid) {
              const EnforceResult r = passivity_enforce(K, grid);
              return py::make_tuple(r.controller, r.perturbation_norm,
                                    r.certificate);
          },
          py::arg("controller"), py::arg("grid"));

    m.def("msd_plant", &msd_plant, py::arg("config"));
    m.def("loss",
          [](double gamma, const PHPlant& plant, const Vector& theta, int k,
             const std::vector<double>& omegas) {
              PlantEvaluator ev(plant);
              return loss(gamma, ev, make_theta(theta, k, plant.port_dim()),
                          SampleSet::from_points(omegas));
          },
          py::arg("gamma"), py::arg("plant"), py::arg("theta"), py::arg("k"),
          py::arg("omegas"));
    m.def("loss_gradient",
          [](double gamma, const PHPlant& plant, const Vector& theta, int k,
             const std::vector<double>& omegas) {
              PlantEvaluator ev(plant);
              return loss_gradient(gamma, ev,
                                   make_theta(theta, k, plant.port_dim()),
                                   SampleSet::from_points(omegas));
          },
          py::arg("gamma"), py::arg("plant"), py::arg("theta"), py::arg("k"),
          py::arg("omegas"));
    m.def("sobsyn",
          [](const PHPlant& plant, const SynthesisConfig& cfg) {
              return sobsyn(plant, cfg);
          },
          py::arg("plant"), py::arg("config"));

    m.def("save_ph_plant", &save_ph_plant, py::arg("plant"), py::arg("path"));
    m.def("save_ph_form", &save_ph_form, py::arg("ph"), py::arg("path"));
    m.def("save_statespace", &save_statespace, py::arg("ss"), py::arg("path"));
    m.def("load_ph_plant", &load_ph_plant, py::arg("path"));
    m.def("load_ph_form", &load_ph_form, py::arg("path"));
    m.def("load_controller", &load_controller, py::arg("path"));
}
