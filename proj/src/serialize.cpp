#include "phsyn/serialize.hpp"

#include <fstream>
#include <ostream>

#include <json.hpp>

namespace phsyn {

namespace {

using nlohmann::json;

json matrix_to_json(const Matrix& M) {
    json rows = json::array();
    for (int i = 0; i < M.rows(); ++i) {
        json row = json::array();
        for (int j = 0; j < M.cols(); ++j) row.push_back(M(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

json cmatrix_to_json(const ComplexMatrix& M) {
    json out;
    out["re"] = matrix_to_json(M.real());
    out["im"] = matrix_to_json(M.imag());
    return out;
}

Matrix matrix_from_json(const json& j, const std::string& field) {
    if (!j.is_array()) {
        throw SchemaError("field '" + field + "': expected an array of rows");
    }
    const int rows = static_cast<int>(j.size());
    int cols = -1;
    for (int i = 0; i < rows; ++i) {
        if (!j[i].is_array()) {
            throw SchemaError("field '" + field + "': row " + std::to_string(i) +
                              " is not an array");
        }
        if (cols < 0) cols = static_cast<int>(j[i].size());
        if (static_cast<int>(j[i].size()) != cols) {
            throw SchemaError("field '" + field + "': ragged rows");
        }
    }
    if (cols < 0) cols = 0;
    Matrix M(rows, cols);
    for (int i = 0; i < rows; ++i) {
        for (int c = 0; c < cols; ++c) {
            if (!j[i][c].is_number()) {
                throw SchemaError("field '" + field + "': entry (" +
                                  std::to_string(i) + "," + std::to_string(c) +
                                  ") is not a number");
            }
            M(i, c) = j[i][c].get<double>();
        }
    }
    return M;
}

ComplexMatrix cmatrix_from_json(const json& j, const std::string& field) {
    if (!j.is_object() || !j.contains("re") || !j.contains("im")) {
        throw SchemaError("field '" + field + "': expected {re, im}");
    }
    const Matrix re = matrix_from_json(j["re"], field + ".re");
    const Matrix im = matrix_from_json(j["im"], field + ".im");
    if (re.rows() != im.rows() || re.cols() != im.cols()) {
        throw SchemaError("field '" + field + "': re/im shape mismatch");
    }
    return re.cast<Complex>() + Complex(0.0, 1.0) * im.cast<Complex>();
}

const json& require(const json& j, const std::string& field) {
    if (!j.contains(field)) {
        throw SchemaError("missing field '" + field + "'");
    }
    return j[field];
}

json ph_form_json(const PHForm& ph) {
    json j;
    j["format"] = "ph-form/v1";
    j["j"] = matrix_to_json(ph.J);
    j["r"] = matrix_to_json(ph.R);
    j["q"] = matrix_to_json(ph.Q);
    j["g"] = matrix_to_json(ph.G);
    j["f"] = matrix_to_json(ph.F);
    j["s"] = matrix_to_json(ph.S);
    j["n"] = matrix_to_json(ph.N);
    return j;
}

PHForm ph_form_from(const json& j) {
    PHForm ph;
    ph.J = matrix_from_json(require(j, "j"), "j");
    ph.R = matrix_from_json(require(j, "r"), "r");
    ph.Q = matrix_from_json(require(j, "q"), "q");
    ph.G = matrix_from_json(require(j, "g"), "g");
    ph.F = matrix_from_json(require(j, "f"), "f");
    ph.S = matrix_from_json(require(j, "s"), "s");
    ph.N = matrix_from_json(require(j, "n"), "n");
    try {
        ph.check_dims();
    } catch (const DimensionError& e) {
        throw SchemaError(std::string("ph form blocks: ") + e.what());
    }
    return ph;
}

json load_json_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw SchemaError("cannot open '" + path + "'");
    json j;
    try {
        is >> j;
    } catch (const json::parse_error& e) {
        throw SchemaError("parse error in '" + path + "': " + e.what());
    }
    return j;
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream os(path);
    if (!os) throw SchemaError("cannot write '" + path + "'");
    os << text << "\n";
}

std::string format_of(const json& j) {
    if (!j.contains("format") || !j["format"].is_string()) {
        throw SchemaError("missing 'format' tag");
    }
    return j["format"].get<std::string>();
}

void validate_loaded_ph(const PHForm& ph) {
    const ValidationReport rep = validate_ph_form(ph);
    if (!rep.pass) {
        std::string bad;
        for (const auto& e : rep.entries) {
            if (!e.pass) bad += (bad.empty() ? "" : ", ") + e.constraint;
        }
        throw CertificateError("pH constraints violated: " + bad);
    }
}

}  // namespace

std::string to_json_string(const PHForm& ph) { return ph_form_json(ph).dump(2); }

std::string to_json_string(const PHPlant& plant) {
    json j = ph_form_json(plant.ph);
    j["format"] = "ph-plant/v1";
    j["b1"] = matrix_to_json(plant.B1);
    j["c1"] = matrix_to_json(plant.C1);
    j["d11"] = matrix_to_json(plant.D11);
    j["d12"] = matrix_to_json(plant.D12);
    j["d21"] = matrix_to_json(plant.D21);
    return j.dump(2);
}

std::string to_json_string(const StateSpace& ss) {
    json j;
    j["format"] = "state-space/v1";
    j["a"] = matrix_to_json(ss.A);
    j["b"] = matrix_to_json(ss.B);
    j["c"] = matrix_to_json(ss.C);
    j["d"] = matrix_to_json(ss.D);
    return j.dump(2);
}

std::string to_json_string(const SampledPlant& sp) {
    json j;
    j["format"] = "sampled-plant/v1";
    json pts = json::array();
    for (const auto& p : sp.points) {
        json e;
        e["omega"] = p.omega;
        e["p11"] = cmatrix_to_json(p.P11);
        e["p12"] = cmatrix_to_json(p.P12);
        e["p21"] = cmatrix_to_json(p.P21);
        e["p22"] = cmatrix_to_json(p.P22);
        pts.push_back(std::move(e));
    }
    j["points"] = std::move(pts);
    return j.dump(2);
}

void save_ph_form(const PHForm& ph, const std::string& path) {
    write_file(path, to_json_string(ph));
}

void save_ph_plant(const PHPlant& plant, const std::string& path) {
    write_file(path, to_json_string(plant));
}

void save_statespace(const StateSpace& ss, const std::string& path) {
    write_file(path, to_json_string(ss));
}

void save_sampled_plant(const SampledPlant& sp, const std::string& path) {
    write_file(path, to_json_string(sp));
}

PHPlant load_ph_plant(const std::string& path) {
    const json j = load_json_file(path);
    if (format_of(j) != "ph-plant/v1") {
        throw SchemaError("'" + path + "': expected format ph-plant/v1");
    }
    PHPlant plant;
    plant.ph = ph_form_from(j);
    plant.B1 = matrix_from_json(require(j, "b1"), "b1");
    plant.C1 = matrix_from_json(require(j, "c1"), "c1");
    plant.D11 = matrix_from_json(require(j, "d11"), "d11");
    plant.D12 = matrix_from_json(require(j, "d12"), "d12");
    plant.D21 = matrix_from_json(require(j, "d21"), "d21");
    try {
        plant.check_dims();
    } catch (const DimensionError& e) {
        throw SchemaError(std::string("plant blocks: ") + e.what());
    }
    validate_loaded_ph(plant.ph);
    return plant;
}

PHForm load_ph_form(const std::string& path) {
    const json j = load_json_file(path);
    const std::string fmt = format_of(j);
    if (fmt != "ph-form/v1" && fmt != "ph-plant/v1") {
        throw SchemaError("'" + path + "': expected format ph-form/v1");
    }
    PHForm ph = ph_form_from(j);
    validate_loaded_ph(ph);
    return ph;
}

LoadedPlant load_plant(const std::string& path) {
    const json j = load_json_file(path);
    const std::string fmt = format_of(j);
    LoadedPlant out;
    if (fmt == "ph-plant/v1") {
        out.ph = load_ph_plant(path);
        return out;
    }
    if (fmt == "sampled-plant/v1") {
        SampledPlant sp;
        const json& pts = require(j, "points");
        if (!pts.is_array()) throw SchemaError("field 'points': expected array");
        for (size_t i = 0; i < pts.size(); ++i) {
            const json& e = pts[i];
            PlantEvaluation pe;
            if (!e.contains("omega") || !e["omega"].is_number()) {
                throw SchemaError("points[" + std::to_string(i) +
                                  "].omega: expected number");
            }
            pe.omega = e["omega"].get<double>();
            pe.P11 = cmatrix_from_json(require(e, "p11"), "p11");
            pe.P12 = cmatrix_from_json(require(e, "p12"), "p12");
            pe.P21 = cmatrix_from_json(require(e, "p21"), "p21");
            pe.P22 = cmatrix_from_json(require(e, "p22"), "p22");
            sp.points.push_back(std::move(pe));
        }
        try {
            sp.check();
        } catch (const SchemaError&) {
            throw;
        }
        out.sampled = std::move(sp);
        return out;
    }
    throw SchemaError("'" + path + "': unknown format '" + fmt + "'");
}

StateSpace load_controller(const std::string& path) {
    const json j = load_json_file(path);
    const std::string fmt = format_of(j);
    if (fmt == "ph-form/v1" || fmt == "ph-plant/v1") {
        return ph_to_statespace(load_ph_form(path));
    }
    if (fmt != "state-space/v1") {
        throw SchemaError("'" + path +
                          "': expected ph-form/v1 or state-space/v1");
    }
    StateSpace ss;
    ss.A = matrix_from_json(require(j, "a"), "a");
    ss.B = matrix_from_json(require(j, "b"), "b");
    ss.C = matrix_from_json(require(j, "c"), "c");
    ss.D = matrix_from_json(require(j, "d"), "d");
    try {
        ss.check_dims();
    } catch (const DimensionError& e) {
        throw SchemaError(std::string("state-space blocks: ") + e.what());
    }
    return ss;
}

void write_sigma_csv(const SigmaTable& table, std::ostream& os) {
    os << "omega";
    for (int j = 0; j < table.sigma.cols(); ++j) os << ",sigma_" << (j + 1);
    os << "\n";
    os.precision(16);
    for (size_t i = 0; i < table.omega.size(); ++i) {
        os << table.omega[i];
        for (int j = 0; j < table.sigma.cols(); ++j) {
            os << "," << table.sigma(static_cast<int>(i), j);
        }
        os << "\n";
    }
}

void write_popov_csv(const PopovTable& table, std::ostream& os) {
    os << "omega";
    for (int j = 0; j < table.eigs.cols(); ++j) os << ",eig_" << (j + 1);
    os << "\n";
    os.precision(16);
    for (size_t i = 0; i < table.omega.size(); ++i) {
        os << table.omega[i];
        for (int j = 0; j < table.eigs.cols(); ++j) {
            os << "," << table.eigs(static_cast<int>(i), j);
        }
        os << "\n";
    }
}

namespace {

json certificate_json(const PassivityCertificate& cert) {
    json j;
    j["passive"] = cert.passive;
    j["min_popov_eig"] = cert.min_popov_eig;
    if (cert.witness_omega) {
        j["witness_omega"] = *cert.witness_omega;
    } else {
        j["witness_omega"] = nullptr;
    }
    j["kyp_feasible"] = cert.kyp_feasible;
    j["method"] = cert.method;
    j["indeterminate"] = cert.indeterminate;
    return j;
}

}  // namespace

std::string to_json_string(const PassivityCertificate& cert) {
    return certificate_json(cert).dump(2);
}

void save_certificate(const PassivityCertificate& cert,
                      const std::string& path) {
    write_file(path, to_json_string(cert));
}

std::string to_json_string(const SynthesisReport& report) {
    json j;
    j["gamma_lo"] = report.gamma_lo;
    j["gamma_hi"] = report.gamma_hi;
    j["order"] = report.theta.part.k;
    j["port_dim"] = report.theta.part.m;
    j["achieved_hinf"] = report.achieved_hinf;
    j["peak_omega"] = report.peak_omega;
    j["hinf_validated"] = report.hinf_validated;
    j["closed_loop_abscissa"] = report.closed_loop_abscissa;
    j["wall_seconds"] = report.wall_seconds;
    j["plant_factorizations"] = report.plant_factorizations;
    j["degraded_convergence"] = report.degraded_convergence;
    j["certificate"] = certificate_json(report.controller_certificate);
    json hist = json::array();
    for (const auto& it : report.history) {
        json e;
        e["gamma"] = it.gamma;
        e["alpha"] = it.alpha;
        e["samples"] = it.sample_count;
        e["bfgs_iterations"] = it.bfgs_iterations;
        e["accepted"] = it.accepted;
        hist.push_back(std::move(e));
    }
    j["history"] = std::move(hist);
    json theta = json::array();
    for (int i = 0; i < report.theta.size(); ++i) {
        theta.push_back(report.theta.data(i));
    }
    j["theta"] = std::move(theta);
    return j.dump(2);
}

void save_synthesis_report(const SynthesisReport& report,
                           const std::string& path) {
    write_file(path, to_json_string(report));
}

}  // namespace phsyn
