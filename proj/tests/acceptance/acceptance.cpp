// Acceptance checks: one PASS/FAIL line per criterion, each with a wall-clock
// budget. Exit status is the number of failed criteria.

#include "quadcert/certificate.hpp"
#include "quadcert/matpower.hpp"
#include "quadcert/oracle.hpp"
#include "quadcert/powerflow.hpp"
#include "quadcert/quadform.hpp"
#include "quadcert/scan.hpp"

#include "../test_support.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace quadcert;

namespace {

// =============================================================================
// Pinned tolerances and budgets
// =============================================================================

constexpr double kScalarBoundaryTol = 1e-12;
constexpr double kSandwichTol = 1e-12;
constexpr double kTwoBusTol = 1e-9;
constexpr double kRatioMedianFraction = 0.5;
constexpr double kPicardScale = 0.99;
constexpr double kNewtonSlack = 1e-8;
constexpr double kPhaseTol = 1e-10;
constexpr double kEmbeddingTol = 1e-10;

struct Outcome {
    bool pass = false;
    std::string detail;
};

struct Criterion {
    const char* name;
    double budget_s;
    std::function<Outcome()> check;
};

std::string fmt(const char* format, double a, double b = 0.0, double c = 0.0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, format, a, b, c);
    return buf;
}

// =============================================================================
// Criteria
// =============================================================================

Outcome scalar_exactness() {
    const auto sys = testsupport::scalar_demo();
    const auto nominal = make_nominal(sys, Vector{0.0}, Vector{0.0});
    auto certified = [&](double u) { return certify_unbounded(nominal, sys, Vector{u}).certified; };
    double lo = 0.0;
    double hi = 1.0;
    for (int it = 0; it < 200 && hi - lo > 0.0; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi) break;
        (certified(mid) ? lo : hi) = mid;
    }
    const auto eqs = extract_diagonal(sys);
    const double oracle =
        scalar_quadratic_region(eqs, std::vector<double>{0.0}, std::numeric_limits<double>::infinity())[0].hi;
    const double err = std::max(std::abs(lo - 0.25), std::abs(lo - oracle));
    return {err <= kScalarBoundaryTol && oracle == 0.25,
            fmt("boundary_cert = %.17g, oracle = %.17g, |diff| = %.3g", lo, oracle, err)};
}

Outcome sandwich() {
    const auto sys = testsupport::scalar_demo();
    const auto nominal = make_nominal(sys, Vector{0.0}, Vector{0.0});
    const auto eqs = extract_diagonal(sys);
    bool ok = true;
    std::string detail;
    for (const double kappa : {0.25, 0.5, 0.75}) {
        const auto b = tightness_bounds(nominal, sys, kappa);
        // e(u) = |u| for this system, so the threshold sets are symmetric intervals
        const Interval inner{-b.inner_threshold, b.inner_threshold};
        const Interval outer{-b.outer_threshold, b.outer_threshold};
        const Interval exact = scalar_quadratic_region(eqs, std::vector<double>{0.0}, b.ball_radius)[0];
        ok = ok && exact.contains(inner) && outer.contains(exact);
        if (kappa == 0.5) {
            const double dev = std::max({std::abs(inner.lo + 0.1875), std::abs(inner.hi - 0.1875),
                                         std::abs(exact.lo + 0.3125), std::abs(exact.hi - 0.1875),
                                         std::abs(outer.lo + 0.3125), std::abs(outer.hi - 0.3125)});
            ok = ok && dev <= kSandwichTol;
            detail = fmt("kappa=0.5: inner [%.4g, ...], exact [%.4g, %.4g]", inner.lo, exact.lo, exact.hi) +
                     fmt(", outer [%.4g, %.4g], max deviation %.3g", outer.lo, outer.hi, dev);
        }
    }
    return {ok, detail};
}

Outcome two_bus_loadability() {
    const auto c = parse_matpower(testsupport::slurp(testsupport::data_path("cases/case2.m")));
    const auto m = build_model(c);
    const double x = c.branches.front().x;
    const double analytic = std::norm(m.v0) / (4.0 * x);
    const double t_cert = scan_direction(m, {0, 0, Vector{1.0}}).t_cert;
    const double err = std::abs(t_cert - analytic);
    return {err <= kTwoBusTol && std::abs(analytic - 2.5) <= 1e-12,
            fmt("t_cert = %.17g, V0^2/(4x) = %.17g, |diff| = %.3g", t_cert, analytic, err)};
}

Outcome ratio_reproduction() {
    const auto m = testsupport::load_case("case18.m");
    const auto records = direction_scan(m, random_directions(m, 1000, 42), ScanOptions{0});
    std::size_t at_least_one = 0;
    std::size_t at_least_two = 0;
    double min_ratio = std::numeric_limits<double>::infinity();
    for (const auto& r : records) {
        at_least_one += r.valid && r.ratio_prior >= 1.0;
        at_least_two += r.valid && r.ratio_prior >= 2.0;
        min_ratio = std::min(min_ratio, r.ratio_prior);
    }
    const double n = static_cast<double>(records.size());
    return {at_least_one == records.size() && at_least_two >= kRatioMedianFraction * n,
            fmt("ratio>=1: %.1f%%, ratio>=2: %.1f%%, min ratio %.4f", 100.0 * at_least_one / n,
                100.0 * at_least_two / n, min_ratio)};
}

Outcome brouwer_soundness() {
    const auto m = testsupport::load_case("case18.m");
    std::size_t picard_ok = 0;
    const auto dirs = random_directions(m, 200, 42);
    for (const auto& d : dirs) {
        const Vector s = scaled(d.s_hat, kPicardScale / kappa(m, d.s_hat));
        const auto rep = picard_solve(m, s);
        picard_ok += rep.converged;
    }

    std::mt19937_64 rng(2024);
    std::size_t certified = 0;
    std::size_t confirmed = 0;
    for (int trial = 0; trial < 50; ++trial) {
        testsupport::RandomSystemShape shape;
        shape.n = 1 + trial % 2;
        shape.k = 1 + (trial / 2) % 2;
        shape.real_only = trial % 5 != 4;
        const auto sys = testsupport::random_system(rng, shape);
        const Vector x0(shape.n);
        const auto nominal = make_nominal(sys, x0, Vector(shape.k));
        for (int draw = 0; draw < 4; ++draw) {
            const Vector u = testsupport::random_vector(rng, shape.k, shape.real_only,
                                                        testsupport::uniform(rng, 0.05, 0.4));
            const double r = testsupport::uniform(rng, 0.1, 1.0);
            const auto cert = certify_in_ball(nominal, sys, u, r);
            if (!cert.certified) continue;
            ++certified;
            const auto rep = newton_multistart(sys, u, x0, r);
            confirmed += rep.found && rep.distance_from_nominal <= r + kNewtonSlack &&
                         inf_norm_vec(eval_f(sys, rep.x, u)) <= kNewtonSlack;
        }
    }
    const bool ok = picard_ok == dirs.size() && certified > 0 && confirmed == certified;
    return {ok, fmt("picard %.0f/200 at 0.99 t_cert; newton confirmed %.0f/%.0f certified (u, r)",
                    static_cast<double>(picard_ok), static_cast<double>(confirmed),
                    static_cast<double>(certified))};
}

Outcome phase_invariance() {
    const auto m = testsupport::load_case("case18.m");
    const auto dir = random_directions(m, 1, 42).front();
    const auto points = rotation_scan(m, dir.s_hat, 360);
    double lo = std::numeric_limits<double>::infinity();
    double hi = 0.0;
    for (const auto& p : points) {
        lo = std::min(lo, p.t_cert);
        hi = std::max(hi, p.t_cert);
    }
    const double t = points.front().t_cert;
    return {points.size() == 360 && hi - lo <= kPhaseTol * t,
            fmt("t_cert = %.17g, max-min = %.3g (limit %.3g)", t, hi - lo, kPhaseTol * t)};
}

Outcome complex_real_embedding() {
    std::mt19937_64 rng(99);
    double worst = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
        testsupport::RandomSystemShape shape;
        shape.n = 1 + trial % 4;
        shape.k = 1 + trial % 3;
        const auto sys = testsupport::random_system(rng, shape);
        const Vector x0(shape.n);
        const Vector u0(shape.k);
        const auto direct = make_nominal(sys, x0, u0, NominalForm::Direct);
        const auto embedded = make_nominal(sys, x0, u0, NominalForm::Conjugate);
        const Vector u = testsupport::random_vector(rng, shape.k, true, 0.5);
        const auto a = compute_terms(direct, sys, u);
        const auto b = compute_terms(embedded, sys, u);
        worst = std::max({worst, std::abs(a.e - b.e), std::abs(a.g - b.g), std::abs(a.h - b.h)});
    }
    return {worst <= kEmbeddingTol, fmt("max |real - complex| over e, g, h: %.3g", worst)};
}

Outcome parser_corpus() {
    std::size_t parsed = 0;
    std::size_t roundtrips = 0;
    for (const auto& entry : std::filesystem::directory_iterator(testsupport::data_path("cases"))) {
        if (entry.path().extension() != ".m") continue;
        const auto c = parse_matpower(testsupport::slurp(entry.path().string()));
        ++parsed;
        const std::string once = serialize_matpower(c);
        const auto again = parse_matpower(once);
        roundtrips += again == c && serialize_matpower(again) == once;
    }
    struct Expected {
        const char* file;
        const char* message;
    };
    const Expected corpus[] = {
        {"empty.m", "missing mpc.baseMVA"},
        {"bad_number.m", "malformed number '0.x5' in mpc.bus"},
        {"no_slack.m", "no slack bus (type 3) in mpc.bus"},
        {"two_slack.m", "multiple slack buses"},
        {"bad_endpoint.m", "branch references unknown bus 7"},
        {"unterminated.m", "unterminated matrix for mpc.branch"},
        {"short_row.m", "branch row has 4 columns, expected at least 11"},
    };
    std::size_t designated = 0;
    for (const auto& e : corpus) {
        try {
            parse_matpower(testsupport::slurp(testsupport::test_data_path(std::string("malformed/") + e.file)));
        } catch (const ParseError& err) {
            designated += err.message() == e.message && err.line() > 0;
        }
    }
    const bool ok = parsed >= 2 && roundtrips == parsed && designated == 7;
    return {ok, fmt("%.0f cases parsed, %.0f idempotent round-trips, ", static_cast<double>(parsed),
                    static_cast<double>(roundtrips)) +
                    fmt("%.0f/7 malformed files with the designated error", static_cast<double>(designated))};
}

} // namespace

int main() {
    const std::vector<Criterion> criteria = {
        {"scalar exactness", 1.0, scalar_exactness},
        {"tightness sandwich", 1.0, sandwich},
        {"2-bus loadability", 1.0, two_bus_loadability},
        {"18-bus ratio reproduction", 30.0, ratio_reproduction},
        {"Brouwer soundness sweep", 60.0, brouwer_soundness},
        {"phase invariance", 5.0, phase_invariance},
        {"complex/real embedding", 10.0, complex_real_embedding},
        {"parser corpus", 1.0, parser_corpus},
    };
    int failures = 0;
    for (const auto& c : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Outcome out;
        try {
            out = c.check();
        } catch (const std::exception& e) {
            out = {false, std::string("exception: ") + e.what()};
        }
        const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        const bool in_time = elapsed < c.budget_s;
        const bool pass = out.pass && in_time;
        failures += !pass;
        std::printf("%s  %-28s %s [%.3f s, budget %.0f s%s]\n", pass ? "PASS" : "FAIL", c.name,
                    out.detail.c_str(), elapsed, c.budget_s, in_time ? "" : ", over budget");
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
    return failures;
}
