#pragma once

// Command-line front end. `run_cli` is the whole program minus main(), so
// tests can drive it with argument vectors and captured streams.
//
// Exit status: 0 success / certified, 2 sound but not certified, 1 error.

#include "quadcert/certificate.hpp"
#include "quadcert/errors.hpp"
#include "quadcert/matpower.hpp"
#include "quadcert/oracle.hpp"
#include "quadcert/powerflow.hpp"
#include "quadcert/quadform.hpp"
#include "quadcert/scan.hpp"
#include "quadcert/system_json.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <charconv>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace quadcert::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitNotCertified = 2;

struct RunConfig {
    std::string command;
    std::string case_path;
    std::string system_path;
    std::string u_list;
    std::optional<double> radius;
    std::optional<double> kappa;
    std::size_t dirs = 1000;
    std::uint64_t seed = 42;
    std::size_t theta_count = 360;
    std::string relax_csv;
    std::string export_zeta;
    bool verify = false;
    std::string out_path;
};

/// Parses "1.5", "-2", "0.1+0.2j", "0.3-1e-2i", "2j".
inline Complex parse_complex(std::string_view token) {
    auto fail = [&]() -> Complex {
        throw FormatError("cannot parse complex number '" + std::string(token) + "'");
    };
    std::string t;
    for (const char c : token) {
        if (!std::isspace(static_cast<unsigned char>(c))) {
            t.push_back(c);
        }
    }
    if (t.empty()) {
        return fail();
    }
    auto read = [&](std::size_t& pos, double& v) {
        const char* first = t.data() + pos;
        if (*first == '+') {
            ++first;
        }
        const auto [ptr, ec] = std::from_chars(first, t.data() + t.size(), v);
        if (ec != std::errc{}) {
            return false;
        }
        pos = static_cast<std::size_t>(ptr - t.data());
        return true;
    };
    auto is_unit = [](char c) { return c == 'j' || c == 'i'; };
    std::size_t pos = 0;
    double first = 0.0;
    if (!read(pos, first)) {
        return fail();
    }
    if (pos == t.size()) {
        return {first, 0.0};
    }
    if (is_unit(t[pos]) && pos + 1 == t.size()) {
        return {0.0, first};
    }
    if (t[pos] != '+' && t[pos] != '-') {
        return fail();
    }
    double second = 0.0;
    if (!read(pos, second) || pos + 1 != t.size() || !is_unit(t[pos])) {
        return fail();
    }
    return {first, second};
}

inline Vector parse_complex_list(const std::string& list) {
    Vector out;
    std::stringstream ss(list);
    std::string token;
    while (std::getline(ss, token, ',')) {
        out.push_back(parse_complex(token));
    }
    if (out.empty()) {
        throw FormatError("--u: empty parameter list");
    }
    return out;
}

inline std::string read_file(const std::string& path, const char* what) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(std::string("cannot open ") + what + " '" + path + "'");
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Worker count: hardware concurrency, capped by QUADCERT_THREADS when set.
inline std::size_t scan_threads() {
    std::size_t threads = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("QUADCERT_THREADS")) {
        std::size_t cap = 0;
        const std::string_view v(env);
        const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), cap);
        if (ec == std::errc{} && ptr == v.data() + v.size() && cap > 0) {
            threads = std::min(threads, cap);
        }
    }
    return threads;
}

namespace detail {

class Output {
public:
    Output(const std::string& path, std::ostream& fallback) : fallback_(fallback) {
        if (!path.empty()) {
            file_.open(path, std::ios::binary);
            if (!file_) {
                throw Error("cannot open output file '" + path + "'");
            }
        }
    }
    std::ostream& stream() { return file_.is_open() ? file_ : fallback_; }

private:
    std::ofstream file_;
    std::ostream& fallback_;
};

inline nlohmann::json complex_json(Complex z) { return nlohmann::json::array({z.real(), z.imag()}); }

inline PowerFlowModel load_model(const RunConfig& cfg) {
    if (cfg.case_path.empty()) {
        throw Error("--case is required");
    }
    return build_model(parse_matpower(read_file(cfg.case_path, "case file")));
}

inline nlohmann::json certificate_json(const BallCertificate& c) {
    nlohmann::json j;
    j["certified"] = c.certified;
    j["lhs"] = c.lhs_value;
    j["witness_radius"] = c.witness_radius ? nlohmann::json(*c.witness_radius) : nlohmann::json();
    if (!c.diagnostic.empty()) {
        j["diagnostic"] = c.diagnostic;
    }
    return j;
}

} // namespace detail

inline int cmd_certify(const RunConfig& cfg, std::ostream& out) {
    if (cfg.system_path.empty()) {
        throw Error("--system is required");
    }
    if (cfg.u_list.empty()) {
        throw Error("--u is required");
    }
    const SystemDescription desc = system_from_json_text(read_file(cfg.system_path, "system file"));
    const QuadraticSystem& sys = desc.system;
    const Vector u = parse_complex_list(cfg.u_list);
    if (u.size() != sys.k()) {
        throw DimensionError("--u has " + std::to_string(u.size()) + " entries, system has k = " +
                             std::to_string(sys.k()));
    }
    const NominalPoint nominal = make_nominal(sys, desc.x_star.value_or(Vector(sys.n())),
                                              desc.u_star.value_or(Vector(sys.k())));
    const CertificateTerms terms = compute_terms(nominal, sys, u);

    nlohmann::json report;
    report["terms"] = {{"e", terms.e}, {"g", terms.g}, {"h", terms.h}, {"h_exact", terms.h_exact}};
    BallCertificate cert;
    if (cfg.radius) {
        cert = certify_terms_in_ball(terms, *cfg.radius);
        report["mode"] = "ball";
        report["r"] = *cfg.radius;
    } else {
        cert = certify_terms_unbounded(terms);
        report["mode"] = "unbounded";
    }
    report["certificate"] = detail::certificate_json(cert);

    if (cfg.kappa) {
        const TightnessBounds b = tightness_bounds(nominal, sys, *cfg.kappa);
        report["tightness"] = {{"kappa", *cfg.kappa},
                               {"h_star", b.h_star},
                               {"inner_threshold", b.inner_threshold},
                               {"outer_threshold", b.outer_threshold},
                               {"ball_radius", b.ball_radius},
                               {"inner_member", b.certifies(terms.e)},
                               {"outside_outer", b.excludes(terms.e)}};
    }

    if (cfg.verify) {
        const double search_radius =
            cfg.radius.value_or(cert.witness_radius.value_or(1.0));
        const SolveReport rep = newton_multistart(sys, u, nominal.x_star, search_radius);
        nlohmann::json v;
        v["search_radius"] = search_radius;
        v["found"] = rep.found;
        v["starts_tried"] = rep.starts_tried;
        if (rep.found) {
            nlohmann::json x = nlohmann::json::array();
            for (const auto& z : rep.x) {
                x.push_back(detail::complex_json(z));
            }
            v["x"] = std::move(x);
            v["residual"] = rep.residual;
            v["distance_from_nominal"] = rep.distance_from_nominal;
        }
        report["verification"] = std::move(v);
    }

    detail::Output sink(cfg.out_path, out);
    sink.stream() << report.dump(2) << '\n';
    return cert.certified ? kExitOk : kExitNotCertified;
}

inline int cmd_scan(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    if (cfg.dirs < 1) {
        throw DomainError("--dirs must be at least 1");
    }
    const PowerFlowModel model = detail::load_model(cfg);
    const auto dirs = random_directions(model, cfg.dirs, cfg.seed);
    auto records = direction_scan(model, dirs, ScanOptions{scan_threads()});
    if (!cfg.relax_csv.empty()) {
        std::ifstream relax(cfg.relax_csv);
        if (!relax) {
            throw Error("cannot open relaxation CSV '" + cfg.relax_csv + "'");
        }
        records = merge_relaxation(std::move(records), relax);
        for (const auto& r : records) {
            if (r.inconsistent) {
                err << "warning: direction " << r.direction_id
                    << ": t_relax below t_cert (inconsistent relaxation bound)\n";
            }
        }
    }
    for (const auto& r : records) {
        if (!r.valid) {
            err << "warning: direction " << r.direction_id << ": zeta(s_hat) vanishes\n";
        }
    }
    if (!cfg.export_zeta.empty()) {
        std::ofstream zf(cfg.export_zeta, std::ios::binary);
        if (!zf) {
            throw Error("cannot open zeta export file '" + cfg.export_zeta + "'");
        }
        write_zeta_jsonl(zf, model, dirs, records);
    }
    detail::Output sink(cfg.out_path, out);
    write_scan_csv(sink.stream(), records);
    return kExitOk;
}

inline int cmd_rotate(const RunConfig& cfg, std::ostream& out) {
    if (cfg.theta_count < 4) {
        throw DomainError("--theta-count must be at least 4");
    }
    const PowerFlowModel model = detail::load_model(cfg);
    const auto base = random_directions(model, 1, cfg.seed);
    const auto points = rotation_scan(model, base.front().s_hat, cfg.theta_count);
    detail::Output sink(cfg.out_path, out);
    write_rotation_csv(sink.stream(), points);
    return kExitOk;
}

inline nlohmann::json model_summary(const PowerFlowModel& model) {
    double min_w = std::numeric_limits<double>::infinity();
    for (const auto& z : model.w) {
        min_w = std::min(min_w, std::abs(z));
    }
    nlohmann::json j;
    j["n"] = model.n;
    j["slack_id"] = model.slack_id;
    j["base_mva"] = model.base_mva;
    j["z_inf_norm"] = inf_norm_induced(model.z);
    j["min_abs_w"] = min_w;
    j["warnings"] = model.warnings;
    return j;
}

inline int cmd_case_info(const RunConfig& cfg, std::ostream& out) {
    const PowerFlowModel model = detail::load_model(cfg);
    detail::Output sink(cfg.out_path, out);
    sink.stream() << model_summary(model).dump(2) << '\n';
    return kExitOk;
}

inline int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"quadcert: solvability certificates for quadratic systems and AC power flow"};
    app.require_subcommand(1);
    RunConfig cfg;
    std::optional<double> radius;
    std::optional<double> kappa;

    auto* certify = app.add_subcommand("certify", "Certify solvability of a system at a parameter u");
    certify->add_option("--system", cfg.system_path, "System description (JSON)")->required();
    certify->add_option("--u", cfg.u_list, "Comma-separated parameter vector (a, a+bj)")->required();
    certify->add_option("--r", radius, "Ball radius; omit for the unbounded certificate");
    certify->add_option("--kappa", kappa, "Also report inner/outer thresholds for this kappa");
    certify->add_flag("--verify", cfg.verify, "Cross-check with the Newton multistart oracle");
    certify->add_option("--out", cfg.out_path, "Write the JSON report here");

    auto* scan = app.add_subcommand("scan", "Random-direction margin scan of a MATPOWER case");
    scan->add_option("--case", cfg.case_path, "MATPOWER case file")->required();
    scan->add_option("--dirs", cfg.dirs, "Number of random directions")->default_val(1000);
    scan->add_option("--seed", cfg.seed, "Direction seed")->default_val(42);
    scan->add_option("--relax-csv", cfg.relax_csv, "Relaxation bounds (direction_id,t_relax)");
    scan->add_option("--export-zeta", cfg.export_zeta, "Write zeta(s_hat) JSON-lines for the relaxation oracle");
    scan->add_option("--out", cfg.out_path, "Write the CSV here");

    auto* rotate = app.add_subcommand("rotate", "Phase-rotation scan of one random direction");
    rotate->add_option("--case", cfg.case_path, "MATPOWER case file")->required();
    rotate->add_option("--seed", cfg.seed, "Seed of the base direction")->default_val(42);
    rotate->add_option("--theta-count", cfg.theta_count, "Number of angles")->default_val(360);
    rotate->add_option("--out", cfg.out_path, "Write the CSV here");

    auto* info = app.add_subcommand("case-info", "Summarize the power-flow model of a case");
    info->add_option("--case", cfg.case_path, "MATPOWER case file")->required();
    info->add_option("--out", cfg.out_path, "Write the JSON summary here");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kExitError;
    }
    cfg.radius = radius;
    cfg.kappa = kappa;

    try {
        if (*certify) {
            cfg.command = "certify";
            return cmd_certify(cfg, out);
        }
        if (*scan) {
            cfg.command = "scan";
            return cmd_scan(cfg, out, err);
        }
        if (*rotate) {
            cfg.command = "rotate";
            return cmd_rotate(cfg, out);
        }
        cfg.command = "case-info";
        return cmd_case_info(cfg, out);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitError;
    }
}

} // namespace quadcert::cli
