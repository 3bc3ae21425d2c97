// Copyright 2026 The Rondeau Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Text formats. Every CSV starts with "# key=value" metadata lines followed
// by a single header row. Floating-point values are written with 17
// significant digits so files round-trip exactly.

#include <charconv>
#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "rondeau/analysis.hpp"
#include "rondeau/error.hpp"
#include "rondeau/evolution.hpp"
#include "rondeau/sequence.hpp"
#include "rondeau/spinsystem.hpp"
#include "rondeau/version.hpp"

namespace rondeau::io {

using Metadata = std::map<std::string, std::string>;

inline std::string fmt(double v) {
    char buf[32];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    if (ec != std::errc{}) throw ArgumentError("cannot format number");
    return std::string(buf, end);
}

inline double parse_double(std::string_view s) {
    double v = 0.0;
    const auto *first = s.data();
    const auto *last = s.data() + s.size();
    while (first < last && *first == ' ') ++first;
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc{} || ptr != last) throw ParseError("not a number: '" + std::string(s) + "'");
    return v;
}

template <typename Int>
Int parse_int(std::string_view s) {
    Int v{};
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) throw ParseError("not an integer: '" + std::string(s) + "'");
    return v;
}

inline std::vector<std::string_view> split(std::string_view line, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(sep, start);
        out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

inline void write_metadata(std::ostream &os, std::string_view format, const Metadata &meta) {
    os << "# rondeau " << format << " v1\n";
    os << "# code_version=" << kVersion << "\n";
    for (const auto &[k, v] : meta) os << "# " << k << "=" << v << "\n";
}

/// Consumes leading "# key=value" lines; returns the first non-comment line.
inline std::string read_metadata(std::istream &is, Metadata &meta) {
    std::string line;
    while (std::getline(is, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] != '#') return line;
        std::string_view body(line);
        body.remove_prefix(1);
        while (!body.empty() && body.front() == ' ') body.remove_prefix(1);
        const auto eq = body.find('=');
        if (eq != std::string_view::npos) meta[std::string(body.substr(0, eq))] = std::string(body.substr(eq + 1));
    }
    return {};
}

inline Metadata spec_metadata(const MonopoleSpec &spec) {
    return {{"spec.N", std::to_string(spec.pulses_per_block)},
            {"spec.N_plus", std::to_string(spec.kick_plus)},
            {"spec.N_minus", std::to_string(spec.kick_minus)},
            {"spec.tau", fmt(spec.tau)},
            {"spec.theta_x", fmt(spec.theta_x)},
            {"spec.gamma_y", fmt(spec.gamma_y)}};
}

inline const std::string &field(const Metadata &meta, const std::string &key) {
    auto it = meta.find(key);
    if (it == meta.end()) throw ParseError("missing metadata field " + key);
    return it->second;
}

inline MonopoleSpec spec_from_metadata(const Metadata &meta) {
    auto get = [&](const std::string &k) -> const std::string & { return field(meta, k); };
    MonopoleSpec spec;
    spec.pulses_per_block = parse_int<int>(get("spec.N"));
    spec.kick_plus = parse_int<int>(get("spec.N_plus"));
    spec.kick_minus = parse_int<int>(get("spec.N_minus"));
    spec.tau = parse_double(get("spec.tau"));
    spec.theta_x = parse_double(get("spec.theta_x"));
    spec.gamma_y = parse_double(get("spec.gamma_y"));
    return spec;
}

// ---- symbol streams ----

inline void write_stream(std::ostream &os, const SymbolStream &s) {
    Metadata meta{{"kind", std::string(to_string(s.kind))},
                  {"n_order", s.n_order == kInfiniteOrder ? "inf" : std::to_string(s.n_order)},
                  {"seed", s.seed ? std::to_string(*s.seed) : "none"},
                  {"cycles", std::to_string(s.size())}};
    write_metadata(os, "stream", meta);
    os << s.to_string() << "\n";
}

inline SymbolStream read_stream(std::istream &is) {
    Metadata meta;
    std::string body = read_metadata(is, meta);
    std::string rest;
    while (std::getline(is, rest)) body += rest;
    SymbolStream s = parse_symbols(body);
    if (auto it = meta.find("kind"); it != meta.end()) {
        if (it->second == "rmd") s.kind = DriveKind::kRmd;
        else if (it->second == "thue_morse") s.kind = DriveKind::kThueMorse;
        else if (it->second == "floquet") s.kind = DriveKind::kFloquet;
    }
    if (auto it = meta.find("n_order"); it != meta.end())
        s.n_order = it->second == "inf" ? kInfiniteOrder : parse_int<int>(it->second);
    if (auto it = meta.find("seed"); it != meta.end() && it->second != "none")
        s.seed = parse_int<std::uint64_t>(it->second);
    if (auto it = meta.find("cycles"); it != meta.end() && parse_int<std::size_t>(it->second) != s.size())
        throw ParseError("stream length disagrees with its cycles header");
    return s;
}

// ---- spectra ----

inline void write_spectrum(std::ostream &os, const SpectrumResult &spec, const Metadata &meta = {}) {
    Metadata m = meta;
    m["kind"] = std::string(to_string(spec.kind));
    m["M"] = std::to_string(spec.size());
    write_metadata(os, "spectrum", m);
    os << "omega,amplitude\n";
    for (std::size_t k = 0; k < spec.size(); ++k) os << fmt(spec.omegas[k]) << "," << fmt(spec.amplitudes[k]) << "\n";
}

inline SpectrumResult read_spectrum(std::istream &is) {
    Metadata meta;
    const std::string header = read_metadata(is, meta);
    if (header != "omega,amplitude") throw ParseError("unexpected spectrum header: " + header);
    SpectrumResult out;
    if (auto it = meta.find("kind"); it != meta.end())
        out.kind = it->second == "micro" ? SpectrumKind::kMicro
                   : it->second == "strobo" ? SpectrumKind::kStrobo
                                            : SpectrumKind::kSymbol;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const auto cols = split(line, ',');
        if (cols.size() != 2) throw ParseError("spectrum rows need two columns");
        out.omegas.push_back(parse_double(cols[0]));
        out.amplitudes.push_back(parse_double(cols[1]));
    }
    return out;
}

// ---- graphs and couplings ----

inline void write_graph(std::ostream &os, const SpinGraph &g) {
    write_metadata(os, "graph",
                   {{"num_spins", std::to_string(g.size())},
                    {"edge_length", fmt(g.edge_length)},
                    {"r_min", fmt(g.r_min)},
                    {"r_max", fmt(g.r_max)},
                    {"seed", std::to_string(g.seed)}});
    os << "index,x,y,z\n";
    for (std::size_t k = 0; k < g.size(); ++k)
        os << k << "," << fmt(g.positions[k][0]) << "," << fmt(g.positions[k][1]) << "," << fmt(g.positions[k][2]) << "\n";
}

inline SpinGraph read_graph(std::istream &is) {
    Metadata meta;
    const std::string header = read_metadata(is, meta);
    if (header != "index,x,y,z") throw ParseError("unexpected graph header: " + header);
    SpinGraph g;
    g.edge_length = parse_double(field(meta, "edge_length"));
    g.r_min = parse_double(field(meta, "r_min"));
    g.r_max = parse_double(field(meta, "r_max"));
    g.seed = parse_int<std::uint64_t>(field(meta, "seed"));
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const auto cols = split(line, ',');
        if (cols.size() != 4) throw ParseError("graph rows need four columns");
        g.positions.push_back({parse_double(cols[1]), parse_double(cols[2]), parse_double(cols[3])});
    }
    return g;
}

inline void write_couplings(std::ostream &os, const CouplingSet &c) {
    write_metadata(os, "couplings",
                   {{"num_spins", std::to_string(c.num_spins)},
                    {"model", std::string(to_string(c.model))},
                    {"j_median", fmt(c.j_median)},
                    {"j_mean", fmt(c.j_mean)}});
    os << "k,l,B_kl\n";
    for (int k = 0; k < c.num_spins; ++k)
        for (int l = k + 1; l < c.num_spins; ++l) os << k << "," << l << "," << fmt(c.b(k, l)) << "\n";
}

// ---- traces ----

inline void write_trace(std::ostream &os, const SignalTrace &trace, const Metadata &extra = {}) {
    Metadata meta = spec_metadata(trace.spec);
    for (const auto &[k, v] : trace.metadata) meta[k] = v;
    for (const auto &[k, v] : extra) meta[k] = v;
    meta["initial_value"] = fmt(trace.initial_value);
    meta["samples"] = std::to_string(trace.size());
    write_metadata(os, "trace", meta);
    os << "time,cycle,pulse_index,signal\n";
    for (std::size_t i = 0; i < trace.size(); ++i)
        os << fmt(trace.times[i]) << "," << trace.cycles[i] << "," << trace.pulse_indices[i] << ","
           << fmt(trace.values[i]) << "\n";
}

inline SignalTrace read_trace(std::istream &is) {
    Metadata meta;
    const std::string header = read_metadata(is, meta);
    if (header != "time,cycle,pulse_index,signal") throw ParseError("unexpected trace header: " + header);
    SignalTrace trace;
    trace.spec = spec_from_metadata(meta);
    if (auto it = meta.find("initial_value"); it != meta.end()) trace.initial_value = parse_double(it->second);
    for (const auto &[k, v] : meta)
        if (k.rfind("spec.", 0) != 0 && k != "initial_value" && k != "samples") trace.metadata[k] = v;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const auto cols = split(line, ',');
        if (cols.size() != 4) throw ParseError("trace rows need four columns");
        trace.push(parse_double(cols[0]), parse_double(cols[3]), parse_int<std::int64_t>(cols[1]),
                   parse_int<int>(cols[2]));
    }
    for (std::size_t i = 1; i < trace.size(); ++i)
        if (!(trace.times[i] > trace.times[i - 1])) throw ParseError("trace times must be strictly increasing");
    return trace;
}

// ---- phase diagrams ----

/// Row-major matrix; the first header cell is "gamma\\omega", the remaining
/// header cells the frequency grid.
inline void write_phase_diagram(std::ostream &os, const PhaseDiagram &pd, const Metadata &meta = {}) {
    Metadata m = meta;
    m["n_order"] = pd.n_order == kInfiniteOrder ? "inf" : std::to_string(pd.n_order);
    m["normalization"] = pd.normalization == RowNormalization::kPerRow   ? "per_row"
                         : pd.normalization == RowNormalization::kGlobal ? "global"
                                                                         : "none";
    write_metadata(os, "phase_diagram", m);
    os << "gamma\\omega";
    for (double w : pd.nu_grid) os << "," << fmt(w);
    os << "\n";
    for (std::size_t r = 0; r < pd.gamma_grid.size(); ++r) {
        os << fmt(pd.gamma_grid[r]);
        for (double v : pd.intensity[r]) os << "," << fmt(v);
        os << "\n";
    }
}

inline nlohmann::json to_json(const SpectrumResult &s) {
    return {{"kind", to_string(s.kind)}, {"omega", s.omegas}, {"amplitude", s.amplitudes}};
}

inline nlohmann::json to_json(const HeatingFit &f) {
    nlohmann::json j{{"T_e", f.t_e}, {"Gamma_e", f.gamma_e}, {"reached", f.reached}};
    if (f.gamma_0) j["Gamma_0"] = *f.gamma_0;
    if (f.fit_exponent) j["fit_exponent"] = *f.fit_exponent;
    if (f.fit_stderr) j["fit_stderr"] = *f.fit_stderr;
    return j;
}

inline nlohmann::json to_json(const PowerLawFit &f) {
    return {{"exponent", f.exponent}, {"stderr", f.stderr_}, {"prefactor", f.prefactor}, {"points", f.points}};
}

inline nlohmann::json to_json(const PhaseDiagram &pd) {
    nlohmann::json contrast = nlohmann::json::array();
    for (const auto &row : pd.raw_intensity) contrast.push_back(period_doubling_contrast(row));
    return {{"n_order", pd.n_order == kInfiniteOrder ? nlohmann::json("inf") : nlohmann::json(pd.n_order)},
            {"gamma", pd.gamma_grid},
            {"omega", pd.nu_grid},
            {"intensity", pd.intensity},
            {"realizations", pd.realizations},
            {"period_doubling_contrast", contrast}};
}

}  // namespace rondeau::io
