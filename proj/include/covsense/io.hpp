#pragma once

// File formats: sample files (text, one value per line, or consecutive little-endian
// IEEE-754 doubles), filter-tap files, "l alpha_l" correlation-profile files, and the
// sweep CSV.

#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "covsense/error.hpp"
#include "covsense/harness.hpp"
#include "covsense/prewhiten.hpp"
#include "covsense/theory.hpp"

namespace covsense::io {

namespace detail {

inline std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

inline double parse_double(std::string_view token, const std::string& where) {
    double value = 0.0;
    const auto* end = token.data() + token.size();
    auto [ptr, ec] = std::from_chars(token.data(), end, value);
    if (ec != std::errc() || ptr != end) {
        throw Error(ErrorCode::MalformedBuffer, where + ": cannot parse '" + std::string(token) + "'");
    }
    return value;
}

inline std::ifstream open_in(const std::string& path, std::ios::openmode mode = std::ios::in) {
    std::ifstream in(path, mode);
    if (!in) {
        throw Error(ErrorCode::Io, "cannot open " + path);
    }
    return in;
}

inline std::uint64_t to_little_endian(std::uint64_t v) {
    if constexpr (std::endian::native == std::endian::big) {
        std::uint64_t r = 0;
        for (int i = 0; i < 8; ++i) {
            r = (r << 8) | ((v >> (8 * i)) & 0xFF);
        }
        return r;
    }
    return v;
}

}  // namespace detail

/// One real value per line; blank lines and lines starting with '#' are skipped.
[[nodiscard]] inline std::vector<double> read_values_text(const std::string& path) {
    std::ifstream in = detail::open_in(path);
    std::vector<double> values;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string_view token = detail::trim(line);
        if (token.empty() || token.front() == '#') {
            continue;
        }
        values.push_back(detail::parse_double(token, path + ":" + std::to_string(line_no)));
    }
    return values;
}

[[nodiscard]] inline std::vector<double> read_samples_binary(const std::string& path) {
    std::ifstream in = detail::open_in(path, std::ios::in | std::ios::binary);
    const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (bytes.size() % 8 != 0) {
        throw Error(ErrorCode::MalformedBuffer, path + ": size is not a multiple of 8 bytes");
    }
    std::vector<double> values(bytes.size() / 8);
    for (std::size_t i = 0; i < values.size(); ++i) {
        std::uint64_t raw = 0;
        std::memcpy(&raw, bytes.data() + 8 * i, 8);
        values[i] = std::bit_cast<double>(detail::to_little_endian(raw));
    }
    return values;
}

[[nodiscard]] inline std::vector<double> read_samples(const std::string& path, bool binary) {
    return binary ? read_samples_binary(path) : read_values_text(path);
}

inline void write_samples_text(const std::string& path, std::span<const double> samples) {
    std::ofstream out(path);
    if (!out) {
        throw Error(ErrorCode::Io, "cannot write " + path);
    }
    char buf[40];
    for (double v : samples) {
        std::snprintf(buf, sizeof buf, "%.17g\n", v);
        out << buf;
    }
}

inline void write_samples_binary(const std::string& path, std::span<const double> samples) {
    std::ofstream out(path, std::ios::out | std::ios::binary);
    if (!out) {
        throw Error(ErrorCode::Io, "cannot write " + path);
    }
    for (double v : samples) {
        const std::uint64_t raw = detail::to_little_endian(std::bit_cast<std::uint64_t>(v));
        out.write(reinterpret_cast<const char*>(&raw), 8);
    }
}

[[nodiscard]] inline FilterSpec read_filter_taps(const std::string& path) {
    FilterSpec filter{read_values_text(path)};
    if (filter.taps.empty()) {
        throw Error(ErrorCode::MalformedBuffer, path + ": no filter taps");
    }
    return filter;
}

/**
 * Correlation profile from "l alpha_l" lines. Every lag 1..max(l) must appear exactly once;
 * the result holds alpha_1 ... alpha_max.
 */
[[nodiscard]] inline CorrelationProfile read_alpha_profile(const std::string& path) {
    std::ifstream in = detail::open_in(path);
    std::map<std::size_t, double> by_lag;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string_view body = detail::trim(line);
        if (body.empty() || body.front() == '#') {
            continue;
        }
        std::istringstream fields{std::string(body)};
        std::string lag_tok;
        std::string alpha_tok;
        std::string extra;
        const std::string where = path + ":" + std::to_string(line_no);
        if (!(fields >> lag_tok >> alpha_tok) || (fields >> extra)) {
            throw Error(ErrorCode::MalformedBuffer, where + ": expected 'l alpha_l'");
        }
        const double lag = detail::parse_double(lag_tok, where);
        const double alpha = detail::parse_double(alpha_tok, where);
        if (!(lag >= 1.0) || lag != static_cast<double>(static_cast<std::size_t>(lag))) {
            throw Error(ErrorCode::MalformedBuffer, where + ": lag must be a positive integer");
        }
        if (!(std::abs(alpha) <= 1.0)) {
            throw Error(ErrorCode::MalformedBuffer, where + ": |alpha_l| must not exceed 1");
        }
        if (!by_lag.emplace(static_cast<std::size_t>(lag), alpha).second) {
            throw Error(ErrorCode::MalformedBuffer, where + ": duplicate lag");
        }
    }
    CorrelationProfile profile;
    for (const auto& [lag, alpha] : by_lag) {
        if (lag != profile.alphas.size() + 1) {
            throw Error(ErrorCode::MalformedBuffer, path + ": lags must run 1, 2, ... without gaps");
        }
        profile.alphas.push_back(alpha);
    }
    return profile;
}

inline constexpr std::string_view kSweepCsvHeader =
    "detector,signal,axis,axis_value,snr_db,L,Ns,M,trials,threshold,estimate,stderr,seed";

/// Float formatting shared by every report: 12 significant digits.
[[nodiscard]] inline std::string format_real(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

inline void write_sweep_csv_header(std::ostream& out) { out << kSweepCsvHeader << '\n'; }

inline void write_sweep_csv_rows(std::ostream& out, const SweepResult& result) {
    for (const SweepPoint& p : result.points) {
        out << result.detector << ',' << result.signal << ',' << to_string(result.axis) << ','
            << format_real(p.axis_value) << ',' << format_real(p.snr > 0.0 ? linear_to_db(p.snr) : -INFINITY) << ','
            << p.smoothing << ',' << p.n_s << ',' << p.antennas << ',' << p.trials << ','
            << format_real(p.threshold) << ',' << format_real(p.estimate) << ',' << format_real(p.stderr_) << ','
            << result.base_seed << '\n';
    }
}

inline void write_sweep_csv(std::ostream& out, const std::vector<SweepResult>& results) {
    write_sweep_csv_header(out);
    for (const auto& r : results) {
        write_sweep_csv_rows(out, r);
    }
}

}  // namespace covsense::io
