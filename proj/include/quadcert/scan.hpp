#pragma once

// =============================================================================
// quadcert - direction scans over the injection space
// =============================================================================
// For a unit direction s_hat the certified margin is t_cert = 1 / kappa(s_hat)
// and the comparator margin is t_prior = 1 / kappa_prime(s_hat). Scans emit
// one record per direction; an external relaxation oracle may later supply
// t_relax, an upper bound on the true margin.
// =============================================================================

#include "quadcert/errors.hpp"
#include "quadcert/linalg.hpp"
#include "quadcert/powerflow.hpp"

#include "json.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace quadcert {

/// splitmix64: seeds the main generator.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

private:
    std::uint64_t state_;
};

/// xoshiro256** with Box-Muller normals. The stream is fully specified:
///   - state = four consecutive splitmix64 outputs of the seed
///   - uniform01 = (next() >> 11) * 2^-53, in [0, 1)
///   - normals come in pairs from u1 = 1 - uniform01 (in (0, 1]) and
///     u2 = uniform01: sqrt(-2 ln u1) * (cos, sin)(2 pi u2), cosine first.
class DirectionRng {
public:
    explicit DirectionRng(std::uint64_t seed) {
        SplitMix64 sm(seed);
        for (auto& s : state_) {
            s = sm.next();
        }
    }

    std::uint64_t next() {
        const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    double normal() {
        if (spare_) {
            const double v = *spare_;
            spare_.reset();
            return v;
        }
        const double u1 = 1.0 - uniform01();
        const double u2 = uniform01();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * std::numbers::pi * u2;
        spare_ = radius * std::sin(angle);
        return radius * std::cos(angle);
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    std::uint64_t state_[4]{};
    std::optional<double> spare_;
};

struct InjectionDirection {
    std::size_t id = 0;
    std::uint64_t seed = 0;
    Vector s_hat;
};

/// Gaussian directions normalized to unit 2-norm. Entry order within a
/// direction is re_0, im_0, re_1, im_1, ...; directions are drawn in id order
/// from one stream, so a prefix of a longer request is identical.
inline std::vector<InjectionDirection> random_directions(std::size_t n, std::size_t count,
                                                         std::uint64_t seed) {
    if (count < 1) {
        throw DomainError("random_directions: count must be at least 1");
    }
    if (n < 1) {
        throw DomainError("random_directions: dimension must be at least 1");
    }
    DirectionRng rng(seed);
    std::vector<InjectionDirection> out;
    out.reserve(count);
    for (std::size_t id = 0; id < count; ++id) {
        Vector s(n);
        for (auto& z : s) {
            const double re = rng.normal();
            const double im = rng.normal();
            z = Complex(re, im);
        }
        const double norm = norm2(s);
        for (auto& z : s) {
            z /= norm;
        }
        out.push_back({id, seed, std::move(s)});
    }
    return out;
}

inline std::vector<InjectionDirection> random_directions(const PowerFlowModel& model,
                                                         std::size_t count, std::uint64_t seed) {
    return random_directions(model.n, count, seed);
}

struct ScanRecord {
    std::size_t direction_id = 0;
    std::uint64_t seed = 0;
    double t_cert = 0.0;
    double t_prior = 0.0;
    std::optional<double> t_relax;
    double ratio_prior = 0.0;  // t_cert / t_prior
    std::optional<double> ratio_relax;
    bool valid = true;          // false when zeta(s_hat) vanishes
    bool inconsistent = false;  // t_relax < t_cert
};

struct ScanOptions {
    /// 0 picks std::thread::hardware_concurrency().
    std::size_t threads = 1;
};

inline ScanRecord scan_direction(const PowerFlowModel& model, const InjectionDirection& dir) {
    ScanRecord rec;
    rec.direction_id = dir.id;
    rec.seed = dir.seed;
    const double k = kappa(model, dir.s_hat);
    const double kp = kappa_prime(model, dir.s_hat);
    if (!(k > 0.0) || !(kp > 0.0)) {
        rec.valid = false;
        rec.t_cert = rec.t_prior = std::numeric_limits<double>::infinity();
        rec.ratio_prior = std::numeric_limits<double>::quiet_NaN();
        return rec;
    }
    rec.t_cert = 1.0 / k;
    rec.t_prior = 1.0 / kp;
    rec.ratio_prior = rec.t_cert / rec.t_prior;
    return rec;
}

/// Records come back in input order whatever the worker count.
inline std::vector<ScanRecord> direction_scan(const PowerFlowModel& model,
                                              const std::vector<InjectionDirection>& directions,
                                              ScanOptions options = {}) {
    std::vector<ScanRecord> out(directions.size());
    std::size_t workers = options.threads == 0 ? std::thread::hardware_concurrency() : options.threads;
    workers = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(1, directions.size()));
    if (workers == 1) {
        for (std::size_t i = 0; i < directions.size(); ++i) {
            out[i] = scan_direction(model, directions[i]);
        }
        return out;
    }
    std::atomic<std::size_t> cursor{0};
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = cursor++; i < directions.size(); i = cursor++) {
                out[i] = scan_direction(model, directions[i]);
            }
        });
    }
    pool.clear();
    return out;
}

struct RotationPoint {
    double theta = 0.0;
    double t_cert = 0.0;
    double t_prior = 0.0;
};

/// Boundary distances along s_hat e^{i theta} for theta on a uniform grid over [0, 2 pi).
inline std::vector<RotationPoint> rotation_scan(const PowerFlowModel& model,
                                                std::span<const Complex> s_hat,
                                                std::size_t theta_count) {
    if (theta_count < 4) {
        throw DomainError("rotation_scan: theta count must be at least 4");
    }
    std::vector<RotationPoint> out;
    out.reserve(theta_count);
    for (std::size_t k = 0; k < theta_count; ++k) {
        const double theta =
            2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(theta_count);
        const Vector s = scaled(s_hat, std::polar(1.0, theta));
        out.push_back({theta, 1.0 / kappa(model, s), 1.0 / kappa_prime(model, s)});
    }
    return out;
}

namespace detail {

inline std::string trim(std::string s) {
    const auto not_space = [](unsigned char c) { return !std::isspace(c); };
    s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
    s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
    return s;
}

inline double parse_csv_double(const std::string& token, std::size_t line) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(token, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != token.size()) {
        throw FormatError("relaxation CSV line " + std::to_string(line) + ": bad number '" +
                          token + "'");
    }
    return v;
}

inline std::string csv_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace detail

/// Reads `direction_id,t_relax` rows. Duplicate ids are a format error.
inline std::map<std::size_t, double> read_relaxation_csv(std::istream& in) {
    std::map<std::size_t, double> rows;
    std::string line;
    std::size_t lineno = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++lineno;
        line = detail::trim(line);
        if (line.empty()) {
            continue;
        }
        if (!header_seen) {
            if (line != "direction_id,t_relax") {
                throw FormatError("relaxation CSV: expected header 'direction_id,t_relax'");
            }
            header_seen = true;
            continue;
        }
        const auto comma = line.find(',');
        if (comma == std::string::npos) {
            throw FormatError("relaxation CSV line " + std::to_string(lineno) + ": missing comma");
        }
        const std::string id_text = detail::trim(line.substr(0, comma));
        const std::string t_text = detail::trim(line.substr(comma + 1));
        const double id_value = detail::parse_csv_double(id_text, lineno);
        if (id_value < 0 || id_value != std::floor(id_value)) {
            throw FormatError("relaxation CSV line " + std::to_string(lineno) +
                              ": direction_id must be a nonnegative integer");
        }
        const auto id = static_cast<std::size_t>(id_value);
        if (rows.contains(id)) {
            throw FormatError("relaxation CSV line " + std::to_string(lineno) +
                              ": duplicate direction_id " + id_text);
        }
        rows[id] = detail::parse_csv_double(t_text, lineno);
    }
    return rows;
}

/// Joins t_relax onto the records by direction_id. A record whose t_relax is
/// below its t_cert is flagged inconsistent: the inner certificate must lie
/// within the relaxation's outer bound.
inline std::vector<ScanRecord> merge_relaxation(std::vector<ScanRecord> records,
                                                std::istream& relax_csv) {
    const auto relax = read_relaxation_csv(relax_csv);
    for (auto& rec : records) {
        const auto it = relax.find(rec.direction_id);
        if (it == relax.end()) {
            continue;
        }
        rec.t_relax = it->second;
        rec.ratio_relax = rec.t_cert / it->second;
        rec.inconsistent = it->second < rec.t_cert;
    }
    return records;
}

inline constexpr const char* kScanCsvHeader =
    "direction_id,seed,t_cert,t_prior,t_relax,ratio_prior,ratio_relax";

inline void write_scan_csv(std::ostream& os, const std::vector<ScanRecord>& records) {
    using detail::csv_double;
    os << kScanCsvHeader << '\n';
    for (const auto& r : records) {
        os << r.direction_id << ',' << r.seed << ',' << csv_double(r.t_cert) << ','
           << csv_double(r.t_prior) << ',' << (r.t_relax ? csv_double(*r.t_relax) : "") << ','
           << csv_double(r.ratio_prior) << ','
           << (r.ratio_relax ? csv_double(*r.ratio_relax) : "") << '\n';
    }
}

inline void write_rotation_csv(std::ostream& os, const std::vector<RotationPoint>& points) {
    using detail::csv_double;
    os << "theta,t_cert,t_prior\n";
    for (const auto& p : points) {
        os << csv_double(p.theta) << ',' << csv_double(p.t_cert) << ',' << csv_double(p.t_prior)
           << '\n';
    }
}

/// One JSON object per line for the relaxation oracle:
/// {"direction_id", "n", "zeta_re", "zeta_im", "t_cert"} with zeta(s_hat) row-major.
inline void write_zeta_jsonl(std::ostream& os, const PowerFlowModel& model,
                             const std::vector<InjectionDirection>& directions,
                             const std::vector<ScanRecord>& records) {
    if (directions.size() != records.size()) {
        throw DimensionError("write_zeta_jsonl: directions and records differ in length");
    }
    for (std::size_t d = 0; d < directions.size(); ++d) {
        const DenseMatrix zt = zeta(model, directions[d].s_hat);
        nlohmann::json re = nlohmann::json::array();
        nlohmann::json im = nlohmann::json::array();
        for (std::size_t i = 0; i < zt.rows(); ++i) {
            nlohmann::json rr = nlohmann::json::array();
            nlohmann::json ri = nlohmann::json::array();
            for (const auto& z : zt.row(i)) {
                rr.push_back(z.real());
                ri.push_back(z.imag());
            }
            re.push_back(std::move(rr));
            im.push_back(std::move(ri));
        }
        nlohmann::json row;
        row["direction_id"] = directions[d].id;
        row["n"] = model.n;
        row["zeta_re"] = std::move(re);
        row["zeta_im"] = std::move(im);
        row["t_cert"] = records[d].t_cert;
        os << row.dump() << '\n';
    }
}

} // namespace quadcert
