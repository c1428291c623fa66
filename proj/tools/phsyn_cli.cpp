// phsyn: fixed-order structured H-infinity synthesis for port-Hamiltonian
// plants, plus the validation toolbox (norms, stability, passivity).
#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include "phsyn/bench.hpp"
#include "phsyn/hinf.hpp"
#include "phsyn/linalg.hpp"
#include "phsyn/parallel.hpp"
#include "phsyn/passivity.hpp"
#include "phsyn/serialize.hpp"
#include "phsyn/synthesis.hpp"

#include <json.hpp>

namespace {

using namespace phsyn;

int g_log_level = 1;  // 0 quiet, 1 info, 2 debug

void info(const std::string& msg) {
    if (g_log_level >= 1) std::cerr << "[phsyn] " << msg << "\n";
}

void debug(const std::string& msg) {
    if (g_log_level >= 2) std::cerr << "[phsyn:debug] " << msg << "\n";
}

std::vector<int> parse_int_list(const std::string& text) {
    std::vector<int> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(std::stoi(item));
    }
    return out;
}

void write_text(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream os(path);
    if (!os) throw SchemaError("cannot write '" + path + "'");
    os << text;
}

StateSpace zero_controller(int m) {
    StateSpace K;
    K.A = Matrix::Zero(0, 0);
    K.B = Matrix::Zero(0, m);
    K.C = Matrix::Zero(m, 0);
    K.D = Matrix::Zero(m, m);
    return K;
}

int run_synth(const std::string& plant_path, SynthesisConfig cfg,
              const std::string& report_path, const std::string& ctrl_path) {
    const LoadedPlant lp = load_plant(plant_path);
    SynthesisReport rep;
    if (lp.ph) {
        rep = sobsyn(*lp.ph, cfg);
    } else {
        PlantEvaluator ev(*lp.sampled);
        rep = sobsyn(ev, cfg);
    }
    info("synthesis done: gamma in [" + std::to_string(rep.gamma_lo) + ", " +
         std::to_string(rep.gamma_hi) + "], achieved H-infinity " +
         std::to_string(rep.achieved_hinf) +
         (rep.hinf_validated ? " (norm solver)" : " (grid bound)"));
    if (g_log_level >= 2) {
        for (const auto& it : rep.history) {
            debug("gamma=" + std::to_string(it.gamma) +
                  " alpha=" + std::to_string(it.alpha) +
                  " samples=" + std::to_string(it.sample_count) +
                  " bfgs=" + std::to_string(it.bfgs_iterations) +
                  (it.accepted ? " accepted" : " rejected"));
        }
    }
    save_synthesis_report(rep, report_path);
    save_ph_form(rep.controller, ctrl_path);
    info("wrote " + report_path + " and " + ctrl_path);
    return 0;
}

int run_validate(const std::string& plant_path, const std::string& ctrl_path,
                 const std::string& out_path) {
    const PHPlant plant = load_ph_plant(plant_path);
    const PlantSS pss = PlantSS::from_ph(plant);
    const StateSpace K = ctrl_path.empty() ? zero_controller(plant.port_dim())
                                           : load_controller(ctrl_path);
    nlohmann::json j;
    bool well_posed = true;
    double abscissa = 0.0;
    try {
        const StateSpace cl = closed_loop_system(pss, K, FeedbackSign::Negative);
        abscissa = spectral_abscissa(cl.A);
        j["spectral_abscissa"] = abscissa;
        try {
            const HinfResult hr = hinf_norm(cl, 1e-6);
            j["hinf_norm"] = hr.norm;
            j["peak_omega"] = hr.peak_omega;
        } catch (const InstabilityError&) {
            j["hinf_norm"] = nullptr;
            j["peak_omega"] = nullptr;
        }
    } catch (const IllPosedError&) {
        well_posed = false;
        j["spectral_abscissa"] = nullptr;
        j["hinf_norm"] = nullptr;
        j["peak_omega"] = nullptr;
    }
    j["well_posed"] = well_posed;
    write_text(out_path, j.dump(2) + "\n");
    if (!well_posed || abscissa > 1e-8) return 2;
    return 0;
}

int run_passivity(const std::string& ctrl_path, double wmin, double wmax,
                  int points, const std::string& csv_path,
                  const std::string& cert_path) {
    const StateSpace K = load_controller(ctrl_path);
    const PopovTable table = popov_sweep(K, log_grid(wmin, wmax, points));
    std::ostringstream csv;
    write_popov_csv(table, csv);
    write_text(csv_path, csv.str());
    const PassivityCertificate cert = kyp_check(K);
    write_text(cert_path, to_json_string(cert) + "\n");
    info(std::string("controller is ") + (cert.passive ? "passive" : "not passive"));
    return cert.passive ? 0 : 2;
}

int run_sigma(const std::string& plant_path, const std::string& ctrl_path,
              double wmin, double wmax, int points,
              const std::string& out_path) {
    const LoadedPlant lp = load_plant(plant_path);
    PlantEvaluator ev = lp.ph ? PlantEvaluator(*lp.ph)
                              : PlantEvaluator(*lp.sampled);
    const StateSpace K = ctrl_path.empty() ? zero_controller(ev.port_dim())
                                           : load_controller(ctrl_path);
    const std::vector<double> grid =
        ev.is_sampled() ? ev.fixed_grid() : log_grid(wmin, wmax, points);
    const SigmaTable table = sigma_sweep(
        [&](double w) {
            return closed_loop_response(ev, K, FeedbackSign::Negative, w);
        },
        grid);
    std::ostringstream csv;
    write_sigma_csv(table, csv);
    write_text(out_path, csv.str());
    return 0;
}

int run_msd(const MSDConfig& cfg, const std::string& out_path) {
    const PHPlant plant = msd_plant(cfg);
    write_text(out_path, to_json_string(plant) + "\n");
    info("wrote MSD plant with state dimension " +
         std::to_string(plant.state_dim()));
    return 0;
}

int run_table1(const std::string& sizes_text, const std::string& orders_text,
               SynthesisConfig base, const std::string& out_path) {
    const auto cells = run_table1_experiment(parse_int_list(sizes_text),
                                             parse_int_list(orders_text), base);
    std::ostringstream csv;
    write_table1_csv(cells, csv);
    write_text(out_path, csv.str());
    for (const auto& c : cells) {
        info("n=" + std::to_string(c.n) + " k=" + std::to_string(c.k) +
             ": " + (c.status == "ok"
                         ? "hinf=" + std::to_string(c.hinf) + " (" +
                               std::to_string(c.runtime_seconds) + " s)"
                         : c.status));
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Structured fixed-order H-infinity synthesis for "
                 "port-Hamiltonian plants"};
    app.require_subcommand(1);

    int threads = 1;
    std::string log_level = "info";
    app.add_option("--threads", threads, "Worker threads for grid sweeps");
    app.add_option("--log-level", log_level, "quiet | info | debug");

    // synth
    auto* synth = app.add_subcommand("synth", "Synthesize a pH controller");
    std::string plant_path, report_path = "report.json",
                ctrl_out = "controller.json";
    SynthesisConfig scfg;
    synth->add_option("--plant", plant_path, "Plant JSON (ph-plant/v1 or sampled-plant/v1)")->required();
    synth->add_option("--order", scfg.order, "Controller order k");
    synth->add_option("--eps1", scfg.eps1, "Bisection tolerance");
    synth->add_option("--eps2", scfg.eps2, "Loss termination tolerance");
    synth->add_option("--gamma-u", scfg.gamma_u, "Initial upper bound (0 = auto)");
    synth->add_option("--omega-min", scfg.omega_min, "Sample grid lower end");
    synth->add_option("--omega-max", scfg.omega_max, "Sample grid upper end");
    synth->add_option("--samples", scfg.initial_samples, "Initial sample count");
    synth->add_option("--seed", scfg.seed, "Seed for the initial parameters");
    synth->add_option("--max-bfgs", scfg.max_bfgs_iterations, "Inner iteration budget");
    synth->add_option("--out-report", report_path, "Report JSON path");
    synth->add_option("--out-controller", ctrl_out, "Controller JSON path");

    // validate
    auto* validate = app.add_subcommand("validate", "Closed-loop validation report");
    std::string v_plant, v_ctrl, v_out = "-";
    validate->add_option("--plant", v_plant, "Plant JSON")->required();
    validate->add_option("--controller", v_ctrl, "Controller JSON (default: zero controller)");
    validate->add_option("--out", v_out, "Report path (default stdout)");

    // passivity
    auto* passivity = app.add_subcommand("passivity", "Popov sweep and KYP certificate");
    std::string p_ctrl, p_csv = "-", p_cert = "certificate.json";
    double p_wmin = 1e-4, p_wmax = 1e4;
    int p_points = 400;
    passivity->add_option("--controller", p_ctrl, "Controller JSON")->required();
    passivity->add_option("--grid-min", p_wmin, "Sweep lower end (rad/s)");
    passivity->add_option("--grid-max", p_wmax, "Sweep upper end (rad/s)");
    passivity->add_option("--grid-points", p_points, "Sweep point count");
    passivity->add_option("--out-csv", p_csv, "Popov CSV path (default stdout)");
    passivity->add_option("--out-cert", p_cert, "Certificate JSON path");

    // sigma
    auto* sigma = app.add_subcommand("sigma", "Closed-loop singular-value sweep");
    std::string s_plant, s_ctrl, s_out = "-";
    double s_wmin = 1e-3, s_wmax = 1e3;
    int s_points = 400;
    sigma->add_option("--plant", s_plant, "Plant JSON")->required();
    sigma->add_option("--controller", s_ctrl, "Controller JSON (default: zero controller)");
    sigma->add_option("--grid-min", s_wmin, "Sweep lower end (rad/s)");
    sigma->add_option("--grid-max", s_wmax, "Sweep upper end (rad/s)");
    sigma->add_option("--grid-points", s_points, "Sweep point count");
    sigma->add_option("--out", s_out, "CSV path (default stdout)");

    // msd
    auto* msd = app.add_subcommand("msd", "Emit a mass-spring-damper benchmark plant");
    MSDConfig mcfg;
    std::string m_io, m_out = "plant.json";
    msd->add_option("--masses", mcfg.n_masses, "Number of masses");
    msd->add_option("--mass", mcfg.mass, "Mass (kg)");
    msd->add_option("--spring", mcfg.spring, "Spring constant (N/m)");
    msd->add_option("--damper", mcfg.damper, "Damper constant (Ns/m)");
    msd->add_option("--io", m_io, "io mass indices, e.g. 1,2");
    msd->add_option("--dist-gain", mcfg.dist_gain, "Disturbance force gain");
    msd->add_option("--effort-weight", mcfg.effort_weight, "Control effort weight");
    msd->add_option("--noise-weight", mcfg.noise_weight, "Measurement noise weight");
    msd->add_option("--out", m_out, "Plant JSON path");

    // table1
    auto* table1 = app.add_subcommand("table1", "Synthesis sweep over sizes and orders");
    std::string t_sizes = "10,20,50,100", t_orders = "1,5", t_out = "-";
    SynthesisConfig tcfg;
    table1->add_option("--sizes", t_sizes, "State dimensions, comma separated");
    table1->add_option("--orders", t_orders, "Controller orders, comma separated");
    table1->add_option("--seed", tcfg.seed, "Seed");
    table1->add_option("--eps1", tcfg.eps1, "Bisection tolerance");
    table1->add_option("--eps2", tcfg.eps2, "Loss termination tolerance");
    table1->add_option("--out", t_out, "CSV path (default stdout)");

    CLI11_PARSE(app, argc, argv);

    g_log_level = log_level == "quiet" ? 0 : log_level == "debug" ? 2 : 1;
    set_num_threads(threads);

    try {
        if (*synth) return run_synth(plant_path, scfg, report_path, ctrl_out);
        if (*validate) return run_validate(v_plant, v_ctrl, v_out);
        if (*passivity)
            return run_passivity(p_ctrl, p_wmin, p_wmax, p_points, p_csv, p_cert);
        if (*sigma)
            return run_sigma(s_plant, s_ctrl, s_wmin, s_wmax, s_points, s_out);
        if (*msd) {
            if (!m_io.empty()) mcfg.io_masses = parse_int_list(m_io);
            return run_msd(mcfg, m_out);
        }
        if (*table1) return run_table1(t_sizes, t_orders, tcfg, t_out);
    } catch (const SchemaError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const InfeasibleError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const CertificateError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
