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

// Experiment driver behind the command-line tool: strict configuration
// parsing, seeded sweeps with parallel disorder averaging, and result files
// with a manifest.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "rondeau/analysis.hpp"
#include "rondeau/codec.hpp"
#include "rondeau/dephasing.hpp"
#include "rondeau/error.hpp"
#include "rondeau/evolution.hpp"
#include "rondeau/io.hpp"
#include "rondeau/rng.hpp"
#include "rondeau/sequence.hpp"
#include "rondeau/spinsystem.hpp"
#include "rondeau/version.hpp"

namespace rondeau::cli {

using nlohmann::json;

enum class ExperimentKind { kTrace, kPhaseDiagram, kHeatingEps, kHeatingT, kHighFreq, kSpectrum, kEncode, kDecode };
enum class Engine { kFull, kDephasing };

/// Drive order tag for a periodic (single-block) drive.
inline constexpr int kFloquetOrder = -1;
/// Drive order tag for an explicit symbol string.
inline constexpr int kExplicitOrder = -2;

inline constexpr std::string_view to_string(ExperimentKind k) noexcept {
    switch (k) {
        case ExperimentKind::kTrace: return "trace";
        case ExperimentKind::kPhaseDiagram: return "phase_diagram";
        case ExperimentKind::kHeatingEps: return "heating_eps";
        case ExperimentKind::kHeatingT: return "heating_t";
        case ExperimentKind::kHighFreq: return "high_freq";
        case ExperimentKind::kSpectrum: return "spectrum";
        case ExperimentKind::kEncode: return "encode";
        case ExperimentKind::kDecode: return "decode";
    }
    return "?";
}

inline constexpr std::string_view to_string(Engine e) noexcept { return e == Engine::kFull ? "full" : "dephasing"; }

inline std::string order_label(int order) {
    if (order == kInfiniteOrder) return "tm";
    if (order == kFloquetOrder) return "floquet";
    if (order == kExplicitOrder) return "explicit";
    return "n" + std::to_string(order);
}

struct SystemConfig {
    int spins = 8;
    double j_median = 1.0;
    CouplingModel model = CouplingModel::kIsotropic;
    double r_min = 0.9;
    double r_max = 1.1;
    std::optional<double> edge_length;  // defaults to cbrt(spins)
    double t_d = 0.0;                   // dephasing time before the drive
    int max_spins = kDefaultMaxSpins;
    bool operator==(const SystemConfig &) const = default;
};

struct DriveConfig {
    MonopoleSpec spec;
    std::vector<int> orders{0};
    std::size_t cycles = 120;
    std::string symbols;  // used by the explicit order
    bool operator==(const DriveConfig &) const = default;
};

struct NoiseConfig {
    double readout = 0.0;
    double kick_disorder = 0.0;  // fractional full width
    bool operator==(const NoiseConfig &) const = default;
};

struct DephasingConfig {
    double gamma_0 = 0.0;
    double initial_value = 1.0;
    bool operator==(const DephasingConfig &) const = default;
};

struct BlockShape {
    int n = 0;
    int n_plus = 0;
    int n_minus = 0;
    bool operator==(const BlockShape &) const = default;
};

struct SweepConfig {
    std::vector<double> gamma_over_pi;  // PHASE_DIAGRAM
    std::vector<double> epsilon;        // HEATING_EPS, radians
    std::vector<double> tau;            // HEATING_T / HIGH_FREQ
    std::vector<BlockShape> blocks;     // HEATING_T / HIGH_FREQ, alternative to tau
    double b_slope = 0.0;               // eps = delta_eps + B T
    double delta_eps = 0.0;
    bool subtract_gamma_0 = false;
    std::size_t realizations = 1;
    RowNormalization normalization = RowNormalization::kPerRow;
    double contrast_threshold = 5.0;
    std::size_t slope_bins = 10;
    double adaptive_cycles = 8.0;  // cycles ~ factor / eps^2 when > 0
    bool operator==(const SweepConfig &) const = default;
};

struct MessageConfig {
    std::string text;
    std::string file;
    std::size_t offset = 0;
    double min_margin = 0.0;
    std::string trace;  // DECODE input
    bool operator==(const MessageConfig &) const = default;
};

struct RunConfig {
    ExperimentKind kind = ExperimentKind::kTrace;
    Engine engine = Engine::kFull;
    std::uint64_t seed = 0;
    std::string output_dir = "out";
    unsigned threads = 1;
    SystemConfig system;
    DriveConfig drive;
    NoiseConfig noise;
    DephasingConfig dephasing;
    SweepConfig sweep;
    MessageConfig message;
    bool operator==(const RunConfig &) const = default;
};

// ---- parsing ----

namespace detail {

/// Reads keys from one JSON object, remembering what was consumed so that
/// leftovers can be reported as unknown.
class Section {
   public:
    Section(const json &j, std::string path, std::vector<std::string> &errors)
        : j_(j), path_(std::move(path)), errors_(errors) {
        if (!j_.is_object()) errors_.push_back(where("") + "must be an object");
    }

    bool has(const std::string &key) const { return j_.is_object() && j_.contains(key); }

    const json *raw(const std::string &key) {
        if (!has(key)) return nullptr;
        seen_.insert(key);
        return &j_.at(key);
    }

    template <typename T>
    void get(const std::string &key, T &out) {
        const json *v = raw(key);
        if (!v) return;
        try {
            if constexpr (std::is_same_v<T, double>) {
                if (!v->is_number()) throw std::invalid_argument("expected a number");
            } else if constexpr (std::is_integral_v<T> && !std::is_same_v<T, bool>) {
                if (!v->is_number_integer() || (std::is_unsigned_v<T> && v->get<std::int64_t>() < 0))
                    throw std::invalid_argument(std::is_unsigned_v<T> ? "expected a non-negative integer"
                                                                      : "expected an integer");
            } else if constexpr (std::is_same_v<T, bool>) {
                if (!v->is_boolean()) throw std::invalid_argument("expected true or false");
            } else if constexpr (std::is_same_v<T, std::string>) {
                if (!v->is_string()) throw std::invalid_argument("expected a string");
            }
            out = v->get<T>();
        } catch (const std::exception &e) {
            errors_.push_back(where(key) + e.what());
        }
    }

    /// Grid given as a list or as {"start", "stop", "count"}.
    void grid(const std::string &key, std::vector<double> &out) {
        const json *v = raw(key);
        if (!v) return;
        if (v->is_array()) {
            out.clear();
            for (const auto &x : *v) {
                if (!x.is_number()) {
                    errors_.push_back(where(key) + "grid entries must be numbers");
                    return;
                }
                out.push_back(x.get<double>());
            }
        } else if (v->is_object()) {
            std::vector<std::string> sub;
            Section s(*v, path_ + key + ".", errors_);
            double start = 0, stop = 0;
            std::size_t count = 0;
            s.get("start", start);
            s.get("stop", stop);
            s.get("count", count);
            s.finish();
            if (count < 1) {
                errors_.push_back(where(key) + "count must be positive");
                return;
            }
            out.clear();
            for (std::size_t i = 0; i < count; ++i)
                out.push_back(count == 1 ? start
                                         : start + (stop - start) * static_cast<double>(i) /
                                                       static_cast<double>(count - 1));
        } else {
            errors_.push_back(where(key) + "expected a list or {start, stop, count}");
        }
    }

    void error(const std::string &key, const std::string &msg) { errors_.push_back(where(key) + msg); }

    void finish() {
        if (!j_.is_object()) return;
        for (const auto &[k, v] : j_.items())
            if (!seen_.count(k)) errors_.push_back(where(k) + "unknown key");
    }

    std::string where(const std::string &key) const { return path_ + key + ": "; }

   private:
    const json &j_;
    std::string path_;
    std::vector<std::string> &errors_;
    std::set<std::string> seen_;
};

inline std::optional<int> parse_order(const json &v) {
    if (v.is_number_integer()) {
        const auto n = v.get<std::int64_t>();
        if (n >= 0 && n < 31) return static_cast<int>(n);
        return std::nullopt;
    }
    if (v.is_string()) {
        const auto s = v.get<std::string>();
        if (s == "inf" || s == "thue_morse") return kInfiniteOrder;
        if (s == "floquet") return kFloquetOrder;
        if (s == "explicit") return kExplicitOrder;
    }
    return std::nullopt;
}

inline json order_to_json(int order) {
    if (order == kInfiniteOrder) return "inf";
    if (order == kFloquetOrder) return "floquet";
    if (order == kExplicitOrder) return "explicit";
    return order;
}

}  // namespace detail

inline ExperimentKind parse_kind(const std::string &s) {
    for (auto k : {ExperimentKind::kTrace, ExperimentKind::kPhaseDiagram, ExperimentKind::kHeatingEps,
                   ExperimentKind::kHeatingT, ExperimentKind::kHighFreq, ExperimentKind::kSpectrum,
                   ExperimentKind::kEncode, ExperimentKind::kDecode})
        if (s == to_string(k)) return k;
    throw ConfigurationError("unknown experiment kind '" + s + "'");
}

inline Engine parse_engine(const std::string &s) {
    if (s == "full") return Engine::kFull;
    if (s == "dephasing") return Engine::kDephasing;
    throw ConfigurationError("unknown engine '" + s + "' (expected full or dephasing)");
}

/// Validates cross-field constraints; returns the list of violations.
inline std::vector<std::string> validate(const RunConfig &c) {
    std::vector<std::string> errors;
    const auto &s = c.drive.spec;
    try {
        s.validate();
    } catch (const Error &e) {
        errors.push_back(std::string("drive: ") + e.what());
    }
    if (c.system.spins < 1) errors.push_back("system.spins: must be positive");
    if (c.engine == Engine::kFull && c.system.spins > c.system.max_spins)
        errors.push_back("system.spins: exceeds system.max_spins");
    if (!(c.system.j_median > 0.0)) errors.push_back("system.j_median: must be positive");
    if (!(c.system.r_min > 0.0 && c.system.r_min < c.system.r_max))
        errors.push_back("system: need 0 < r_min < r_max");
    if (c.threads < 1) errors.push_back("threads: must be at least 1");
    if (c.drive.orders.empty()) errors.push_back("drive.orders: grid must be nonempty");
    if (c.drive.cycles < 1) errors.push_back("drive.cycles: must be positive");
    for (int o : c.drive.orders)
        if (o == kExplicitOrder && c.drive.symbols.empty())
            errors.push_back("drive.symbols: required by the explicit order");
    if (c.sweep.realizations < 1) errors.push_back("sweep.realizations: must be at least 1");
    if (c.noise.readout < 0.0 || c.noise.kick_disorder < 0.0) errors.push_back("noise: widths must be non-negative");
    if (c.dephasing.gamma_0 < 0.0) errors.push_back("dephasing.gamma_0: must be non-negative");
    switch (c.kind) {
        case ExperimentKind::kPhaseDiagram:
            if (c.sweep.gamma_over_pi.empty()) errors.push_back("sweep.gamma_over_pi: grid must be nonempty");
            break;
        case ExperimentKind::kHeatingEps:
            if (c.sweep.epsilon.empty()) errors.push_back("sweep.epsilon: grid must be nonempty");
            break;
        case ExperimentKind::kHeatingT:
        case ExperimentKind::kHighFreq:
            if (c.sweep.tau.empty() == c.sweep.blocks.empty())
                errors.push_back("sweep: exactly one of tau and blocks must be a nonempty grid");
            break;
        case ExperimentKind::kEncode:
            if (c.message.text.empty() == c.message.file.empty())
                errors.push_back("message: exactly one of text and file is required");
            break;
        case ExperimentKind::kDecode:
            if (c.message.trace.empty()) errors.push_back("message.trace: input trace path is required");
            break;
        default: break;
    }
    return errors;
}

inline RunConfig parse_config(const json &j) {
    std::vector<std::string> errors;
    RunConfig c;
    detail::Section top(j, "", errors);
    if (const json *k = top.raw("experiment")) {
        try {
            c.kind = parse_kind(k->get<std::string>());
        } catch (const std::exception &e) {
            errors.push_back(std::string("experiment: ") + e.what());
        }
    } else {
        errors.push_back("experiment: required");
    }
    if (const json *e = top.raw("engine")) {
        try {
            c.engine = parse_engine(e->get<std::string>());
        } catch (const std::exception &ex) {
            errors.push_back(std::string("engine: ") + ex.what());
        }
    }
    top.get("seed", c.seed);
    top.get("output_dir", c.output_dir);
    top.get("threads", c.threads);

    if (const json *v = top.raw("system")) {
        detail::Section s(*v, "system.", errors);
        s.get("spins", c.system.spins);
        s.get("j_median", c.system.j_median);
        if (const json *m = s.raw("coupling_model")) {
            const auto name = m->is_string() ? m->get<std::string>() : "";
            if (name == "isotropic") c.system.model = CouplingModel::kIsotropic;
            else if (name == "angular") c.system.model = CouplingModel::kAngular;
            else s.error("coupling_model", "expected isotropic or angular");
        }
        s.get("r_min", c.system.r_min);
        s.get("r_max", c.system.r_max);
        if (s.has("edge_length")) {
            double e = 0;
            s.get("edge_length", e);
            c.system.edge_length = e;
        }
        s.get("t_d", c.system.t_d);
        s.get("max_spins", c.system.max_spins);
        s.finish();
    }
    if (const json *v = top.raw("drive")) {
        detail::Section s(*v, "drive.", errors);
        auto &spec = c.drive.spec;
        s.get("N", spec.pulses_per_block);
        s.get("N_plus", spec.kick_plus);
        s.get("N_minus", spec.kick_minus);
        s.get("tau", spec.tau);
        double theta = spec.theta_x / std::numbers::pi, gamma = spec.gamma_y / std::numbers::pi;
        s.get("theta_x_over_pi", theta);
        s.get("gamma_y_over_pi", gamma);
        spec.theta_x = theta * std::numbers::pi;
        spec.gamma_y = gamma * std::numbers::pi;
        if (const json *o = s.raw("orders")) {
            c.drive.orders.clear();
            const json list = o->is_array() ? *o : json::array({*o});
            for (const auto &x : list) {
                if (auto ord = detail::parse_order(x)) c.drive.orders.push_back(*ord);
                else s.error("orders", "entries must be integers 0..30, \"inf\", \"floquet\" or \"explicit\"");
            }
        }
        s.get("cycles", c.drive.cycles);
        s.get("symbols", c.drive.symbols);
        s.finish();
    }
    if (const json *v = top.raw("noise")) {
        detail::Section s(*v, "noise.", errors);
        s.get("readout", c.noise.readout);
        s.get("kick_disorder", c.noise.kick_disorder);
        s.finish();
    }
    if (const json *v = top.raw("dephasing")) {
        detail::Section s(*v, "dephasing.", errors);
        s.get("gamma_0", c.dephasing.gamma_0);
        s.get("initial_value", c.dephasing.initial_value);
        s.finish();
    }
    if (const json *v = top.raw("sweep")) {
        detail::Section s(*v, "sweep.", errors);
        s.grid("gamma_over_pi", c.sweep.gamma_over_pi);
        s.grid("epsilon", c.sweep.epsilon);
        s.grid("tau", c.sweep.tau);
        if (const json *b = s.raw("blocks")) {
            if (!b->is_array()) s.error("blocks", "expected a list of [N, N_plus, N_minus]");
            else
                for (const auto &x : *b) {
                    if (x.is_array() && x.size() == 3 && x[0].is_number_integer() && x[1].is_number_integer() &&
                        x[2].is_number_integer())
                        c.sweep.blocks.push_back({x[0].get<int>(), x[1].get<int>(), x[2].get<int>()});
                    else s.error("blocks", "entries must be [N, N_plus, N_minus]");
                }
        }
        s.get("b_slope", c.sweep.b_slope);
        s.get("delta_eps", c.sweep.delta_eps);
        s.get("subtract_gamma_0", c.sweep.subtract_gamma_0);
        s.get("realizations", c.sweep.realizations);
        if (const json *n = s.raw("normalization")) {
            const auto name = n->is_string() ? n->get<std::string>() : "";
            if (name == "per_row") c.sweep.normalization = RowNormalization::kPerRow;
            else if (name == "global") c.sweep.normalization = RowNormalization::kGlobal;
            else if (name == "none") c.sweep.normalization = RowNormalization::kNone;
            else s.error("normalization", "expected per_row, global or none");
        }
        s.get("contrast_threshold", c.sweep.contrast_threshold);
        s.get("slope_bins", c.sweep.slope_bins);
        s.get("adaptive_cycles", c.sweep.adaptive_cycles);
        s.finish();
    }
    if (const json *v = top.raw("message")) {
        detail::Section s(*v, "message.", errors);
        s.get("text", c.message.text);
        s.get("file", c.message.file);
        s.get("offset", c.message.offset);
        s.get("min_margin", c.message.min_margin);
        s.get("trace", c.message.trace);
        s.finish();
    }
    top.finish();
    if (errors.empty())
        for (auto &e : validate(c)) errors.push_back(std::move(e));
    if (!errors.empty()) {
        std::string msg = "invalid configuration (" + std::to_string(errors.size()) + " problem" +
                          (errors.size() == 1 ? "" : "s") + ")";
        for (const auto &e : errors) msg += "\n  " + e;
        throw ConfigurationError(msg);
    }
    return c;
}

inline RunConfig load_config(const std::filesystem::path &path) {
    std::ifstream in(path);
    if (!in) throw ConfigurationError("cannot open config " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error &e) {
        throw ParseError("config " + path.string() + ": " + e.what());
    }
    // A manifest carries its resolved config under "config".
    if (j.is_object() && j.contains("manifest_version") && j.contains("config")) j = j.at("config");
    return parse_config(j);
}

/// Canonical form: every field written, so parse_config(to_json(c)) == c.
inline json to_json(const RunConfig &c) {
    json orders = json::array();
    for (int o : c.drive.orders) orders.push_back(detail::order_to_json(o));
    json blocks = json::array();
    for (const auto &b : c.sweep.blocks) blocks.push_back({b.n, b.n_plus, b.n_minus});
    json system{{"spins", c.system.spins},     {"j_median", c.system.j_median},
                {"coupling_model", to_string(c.system.model)},
                {"r_min", c.system.r_min},     {"r_max", c.system.r_max},
                {"t_d", c.system.t_d},         {"max_spins", c.system.max_spins}};
    if (c.system.edge_length) system["edge_length"] = *c.system.edge_length;
    const auto &s = c.drive.spec;
    return {
        {"experiment", to_string(c.kind)},
        {"engine", to_string(c.engine)},
        {"seed", c.seed},
        {"output_dir", c.output_dir},
        {"threads", c.threads},
        {"system", system},
        {"drive",
         {{"N", s.pulses_per_block},
          {"N_plus", s.kick_plus},
          {"N_minus", s.kick_minus},
          {"tau", s.tau},
          {"theta_x_over_pi", s.theta_x / std::numbers::pi},
          {"gamma_y_over_pi", s.gamma_y / std::numbers::pi},
          {"orders", orders},
          {"cycles", c.drive.cycles},
          {"symbols", c.drive.symbols}}},
        {"noise", {{"readout", c.noise.readout}, {"kick_disorder", c.noise.kick_disorder}}},
        {"dephasing", {{"gamma_0", c.dephasing.gamma_0}, {"initial_value", c.dephasing.initial_value}}},
        {"sweep",
         {{"gamma_over_pi", c.sweep.gamma_over_pi},
          {"epsilon", c.sweep.epsilon},
          {"tau", c.sweep.tau},
          {"blocks", blocks},
          {"b_slope", c.sweep.b_slope},
          {"delta_eps", c.sweep.delta_eps},
          {"subtract_gamma_0", c.sweep.subtract_gamma_0},
          {"realizations", c.sweep.realizations},
          {"normalization", c.sweep.normalization == RowNormalization::kPerRow   ? "per_row"
                            : c.sweep.normalization == RowNormalization::kGlobal ? "global"
                                                                                 : "none"},
          {"contrast_threshold", c.sweep.contrast_threshold},
          {"slope_bins", c.sweep.slope_bins},
          {"adaptive_cycles", c.sweep.adaptive_cycles}}},
        {"message",
         {{"text", c.message.text},
          {"file", c.message.file},
          {"offset", c.message.offset},
          {"min_margin", c.message.min_margin},
          {"trace", c.message.trace}}},
    };
}

/// 64-bit FNV-1a, used for config and file fingerprints.
inline std::uint64_t fnv1a(std::string_view data) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : data) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    std::ostringstream os;
    os << std::hex;
    os.width(16);
    os.fill('0');
    os << v;
    return os.str();
}

inline std::string config_hash(const RunConfig &c) {
    json j = to_json(c);
    // Scheduling and destination do not change results.
    j.erase("threads");
    j.erase("output_dir");
    return hex64(fnv1a(j.dump()));
}

// ---- seeds ----

enum class SeedStream : std::uint64_t { kGraph = 1, kDrive = 2, kNoise = 3, kKickDisorder = 4 };

inline std::uint64_t stream_seed(std::uint64_t root, SeedStream stream, std::uint64_t a, std::uint64_t b = 0) {
    return derive_seed(derive_seed(derive_seed(root, static_cast<std::uint64_t>(stream)), a), b);
}

// ---- parallel map ----

/// Evaluates f(0..count-1) on `threads` workers pulling indices from a shared
/// counter. Results land in their own slot, so the output does not depend on
/// the schedule. The exception with the lowest index is rethrown.
template <typename F>
auto parallel_map(std::size_t count, unsigned threads, F &&f) -> std::vector<decltype(f(std::size_t{}))> {
    using R = decltype(f(std::size_t{}));
    std::vector<std::optional<R>> slots(count);
    std::vector<std::exception_ptr> failures(count);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < count; i = next++) {
            try {
                slots[i].emplace(f(i));
            } catch (...) {
                failures[i] = std::current_exception();
            }
        }
    };
    const unsigned extra = std::min<std::size_t>(threads, count) > 1
                               ? static_cast<unsigned>(std::min<std::size_t>(threads, count)) - 1
                               : 0;
    {
        std::vector<std::jthread> pool;
        pool.reserve(extra);
        for (unsigned t = 0; t < extra; ++t) pool.emplace_back(worker);
        worker();
    }
    for (auto &e : failures)
        if (e) std::rethrow_exception(e);
    std::vector<R> out;
    out.reserve(count);
    for (auto &s : slots) out.push_back(std::move(*s));
    return out;
}

// ---- simulation context ----

/// One disorder realization of the spin system.
struct Realization {
    std::size_t index = 0;
    std::uint64_t graph_seed = 0;
    std::optional<SpinGraph> graph;
    std::optional<CouplingSet> couplings;
    std::optional<Hamiltonian> hamiltonian;
};

inline Realization make_realization(const RunConfig &c, std::size_t r) {
    Realization out;
    out.index = r;
    out.graph_seed = stream_seed(c.seed, SeedStream::kGraph, r);
    if (c.engine != Engine::kFull) return out;
    const auto &sys = c.system;
    out.graph = generate_graph(sys.spins, sys.edge_length.value_or(default_edge_length(sys.spins)), sys.r_min,
                               sys.r_max, out.graph_seed);
    out.couplings = compute_couplings(*out.graph, sys.j_median, sys.model);
    out.hamiltonian = build_hamiltonian(*out.couplings, sys.max_spins);
    return out;
}

inline std::uint64_t drive_seed(const RunConfig &c, std::size_t r) { return stream_seed(c.seed, SeedStream::kDrive, r); }

inline SymbolStream make_stream(const RunConfig &c, int order, std::size_t cycles, std::size_t r) {
    if (order == kInfiniteOrder) return thue_morse_stream(cycles);
    if (order == kFloquetOrder) return floquet_stream(cycles);
    if (order == kExplicitOrder) return parse_symbols(c.drive.symbols);
    return sample_rmd(order, cycles, drive_seed(c, r));
}

/// Largest admissible cycle count not above `cycles` for the given order.
inline std::size_t round_cycles(int order, std::size_t cycles) {
    if (order < 0 || order == kInfiniteOrder) return cycles;
    const std::size_t chunk = std::size_t{1} << order;
    return std::max(chunk, cycles / chunk * chunk);
}

/// Simulates one stream. `point` identifies the sweep point for noise seeds.
inline SignalTrace simulate(const RunConfig &c, const Realization &real, const SymbolStream &stream,
                            const MonopoleSpec &spec, std::size_t point) {
    SignalTrace trace;
    if (c.engine == Engine::kFull) {
        EvolveOptions opts;
        opts.readout_noise = c.noise.readout;
        opts.noise_seed = stream_seed(c.seed, SeedStream::kNoise, point, real.index);
        opts.kick_disorder_width = c.noise.kick_disorder;
        opts.disorder_seed = stream_seed(c.seed, SeedStream::kKickDisorder, real.index);
        const Hamiltonian &h = *real.hamiltonian;
        trace = evolve(compile_program(stream, spec), h, initial_state(c.system.spins, h, c.system.t_d), opts);
        trace.metadata["engine"] = "full";
        trace.metadata["graph_seed"] = std::to_string(real.graph_seed);
    } else {
        DephasingParams p;
        p.spec = spec;
        p.epsilon = spec.epsilon();
        p.gamma_0 = c.dephasing.gamma_0;
        p.initial_value = c.dephasing.initial_value;
        trace = model_signal(stream, p);
        if (c.noise.readout > 0.0) {
            Rng rng(stream_seed(c.seed, SeedStream::kNoise, point, real.index));
            for (double &v : trace.values) v += c.noise.readout * rng.normal();
        }
    }
    trace.metadata["n_order"] = order_label(stream.kind == DriveKind::kThueMorse ? kInfiniteOrder
                                            : stream.kind == DriveKind::kFloquet ? kFloquetOrder
                                            : stream.kind == DriveKind::kExplicit ? kExplicitOrder
                                                                                  : stream.n_order);
    if (stream.seed) trace.metadata["drive_seed"] = std::to_string(*stream.seed);
    trace.metadata["realization"] = std::to_string(real.index);
    return trace;
}

// ---- results ----

struct RunResult {
    json summary;
    std::map<std::string, std::string> files;  // name -> contents
    std::vector<std::uint64_t> graph_seeds;
    std::vector<std::uint64_t> drive_seeds;
};

struct Stats {
    double mean = 0.0;
    double std = 0.0;  // sample standard deviation; 0 for a single value
};

/// Sum in index order, so the result does not depend on the schedule.
inline Stats mean_std(std::span<const double> v) {
    Stats s;
    if (v.empty()) return s;
    for (double x : v) s.mean += x;
    s.mean /= static_cast<double>(v.size());
    if (v.size() > 1) {
        double acc = 0.0;
        for (double x : v) acc += (x - s.mean) * (x - s.mean);
        s.std = std::sqrt(acc / static_cast<double>(v.size() - 1));
    }
    return s;
}

namespace detail {

inline std::string with_context(const std::string &ctx, const std::exception &e) { return ctx + ": " + e.what(); }

/// Runs `f`, prefixing any library error with the sweep point it came from.
template <typename F>
auto in_context(const std::string &ctx, F &&f) -> decltype(f()) {
    try {
        return f();
    } catch (const LowConfidenceError &e) {
        throw LowConfidenceError(with_context(ctx, e), e.cycles());
    } catch (const FitError &e) {
        throw FitError(with_context(ctx, e), e.residual());
    } catch (const Error &e) {
        throw Error(e.kind(), with_context(ctx, e));
    }
}

template <typename Write>
std::string render(Write &&w) {
    std::ostringstream os;
    w(os);
    return os.str();
}

inline std::size_t realization_count(const RunConfig &c, int order) {
    // Deterministic drives need a single realization unless the spin system
    // itself is disordered.
    const bool deterministic_drive = order == kInfiniteOrder || order == kFloquetOrder || order == kExplicitOrder;
    if (deterministic_drive && c.engine == Engine::kDephasing && c.noise.readout == 0.0) return 1;
    return c.sweep.realizations;
}

inline std::vector<Realization> realizations(const RunConfig &c, RunResult &res) {
    auto out = parallel_map(c.sweep.realizations, c.threads, [&](std::size_t r) {
        return in_context("realization " + std::to_string(r), [&] { return make_realization(c, r); });
    });
    for (const auto &r : out) {
        res.graph_seeds.push_back(r.graph_seed);
        res.drive_seeds.push_back(drive_seed(c, r.index));
    }
    return out;
}

inline std::size_t adaptive_cycles(const RunConfig &c, int order, double eps) {
    std::size_t cycles = c.drive.cycles;
    if (c.sweep.adaptive_cycles > 0.0 && eps != 0.0)
        cycles = std::min<std::size_t>(
            cycles, static_cast<std::size_t>(std::ceil(c.sweep.adaptive_cycles / (eps * eps))) + 16);
    return round_cycles(order, cycles);
}

}  // namespace detail

inline RunResult run_trace(const RunConfig &c) {
    RunResult res;
    const auto reals = detail::realizations(c, res);
    struct Task {
        int order;
        std::size_t r;
    };
    std::vector<Task> tasks;
    for (int o : c.drive.orders)
        for (std::size_t r = 0; r < detail::realization_count(c, o); ++r) tasks.push_back({o, r});
    auto traces = parallel_map(tasks.size(), c.threads, [&](std::size_t i) {
        const Task &t = tasks[i];
        const std::string ctx = order_label(t.order) + " realization " + std::to_string(t.r);
        return detail::in_context(ctx, [&] {
            const SymbolStream s = make_stream(c, t.order, round_cycles(t.order, c.drive.cycles), t.r);
            return std::pair{s, simulate(c, reals[t.r], s, c.drive.spec, 0)};
        });
    });
    res.summary["traces"] = json::array();
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        const auto &[stream, trace] = traces[i];
        const std::string stem = order_label(tasks[i].order) + "_r" + std::to_string(tasks[i].r);
        res.files["trace_" + stem + ".csv"] = detail::render([&](std::ostream &os) { io::write_trace(os, trace); });
        res.files["stream_" + stem + ".txt"] = detail::render([&](std::ostream &os) { io::write_stream(os, stream); });
        json entry{{"order", detail::order_to_json(tasks[i].order)}, {"realization", tasks[i].r}, {"file", "trace_" + stem + ".csv"}};
        if (trace.full_cycles() >= 1 && trace.initial_value != 0.0) entry["lifetime"] = io::to_json(lifetime(trace));
        res.summary["traces"].push_back(entry);
    }
    if (c.engine == Engine::kFull)
        for (const auto &r : reals) {
            const std::string stem = "_r" + std::to_string(r.index);
            res.files["graph" + stem + ".csv"] = detail::render([&](std::ostream &os) { io::write_graph(os, *r.graph); });
            res.files["couplings" + stem + ".csv"] =
                detail::render([&](std::ostream &os) { io::write_couplings(os, *r.couplings); });
        }
    return res;
}

inline RunResult run_spectrum(const RunConfig &c) {
    RunResult res;
    const auto reals = detail::realizations(c, res);
    res.summary["spectra"] = json::array();
    for (int o : c.drive.orders) {
        const std::size_t count = detail::realization_count(c, o);
        const std::size_t cycles = round_cycles(o, c.drive.cycles);
        struct Spectra {
            SpectrumResult symbol, micro;
            std::optional<SpectrumResult> strobo;
        };
        auto spectra = parallel_map(count, c.threads, [&](std::size_t r) {
            return detail::in_context(order_label(o) + " realization " + std::to_string(r), [&] {
                const SymbolStream s = make_stream(c, o, cycles, r);
                const SignalTrace tr = simulate(c, reals[r], s, c.drive.spec, 0);
                Spectra out{symbol_dft(s), dft_micromotion(tr), std::nullopt};
                if (tr.initial_value != 0.0) out.strobo = dft_stroboscopic(tr);
                return out;
            });
        });
        const std::size_t m = spectra.front().symbol.size();
        std::vector<double> sym_mean(m), micro_mean(m);
        std::ostringstream csv;
        io::write_metadata(csv, "spectrum_table",
                           {{"order", order_label(o)}, {"realizations", std::to_string(count)}, {"M", std::to_string(m)}});
        csv << "omega,symbol_mean,symbol_std,micro_mean,micro_std,strobo_mean,strobo_std\n";
        for (std::size_t k = 0; k < m; ++k) {
            std::vector<double> a, b, d;
            for (const auto &s : spectra) {
                a.push_back(s.symbol.amplitudes[k]);
                b.push_back(s.micro.amplitudes[k]);
                if (s.strobo) d.push_back(s.strobo->amplitudes[k]);
            }
            const Stats sa = mean_std(a), sb = mean_std(b), sd = mean_std(d);
            sym_mean[k] = sa.mean;
            micro_mean[k] = sb.mean;
            csv << io::fmt(spectra.front().symbol.omegas[k]) << "," << io::fmt(sa.mean) << "," << io::fmt(sa.std)
                << "," << io::fmt(sb.mean) << "," << io::fmt(sb.std) << "," << io::fmt(sd.mean) << ","
                << io::fmt(sd.std) << "\n";
        }
        res.files["spectrum_" + order_label(o) + ".csv"] = csv.str();
        json entry{{"order", detail::order_to_json(o)}, {"realizations", count}, {"M", m}};
        try {
            entry["symbol_slope"] = io::to_json(low_frequency_slope(sym_mean, false, c.sweep.slope_bins));
            entry["micro_slope_pi_shifted"] = io::to_json(low_frequency_slope(micro_mean, true, c.sweep.slope_bins));
        } catch (const Error &e) {
            entry["slope_error"] = e.what();
        }
        res.summary["spectra"].push_back(entry);
    }
    return res;
}

inline RunResult run_phase_diagram(const RunConfig &c) {
    RunResult res;
    const auto reals = detail::realizations(c, res);
    res.summary["phase_diagrams"] = json::array();
    for (int o : c.drive.orders) {
        const std::size_t count = detail::realization_count(c, o);
        const std::size_t cycles = round_cycles(o, c.drive.cycles);
        const std::size_t points = c.sweep.gamma_over_pi.size();
        auto traces = parallel_map(points * count, c.threads, [&](std::size_t i) {
            const std::size_t g = i / count, r = i % count;
            const double gamma = c.sweep.gamma_over_pi[g] * std::numbers::pi;
            return detail::in_context(order_label(o) + " gamma " + io::fmt(gamma) + " realization " + std::to_string(r),
                                      [&] {
                                          MonopoleSpec spec = c.drive.spec;
                                          spec.gamma_y = gamma;
                                          return std::pair{gamma, simulate(c, reals[r], make_stream(c, o, cycles, r), spec, g)};
                                      });
        });
        const PhaseDiagram pd = phase_diagram(traces, c.sweep.normalization, o);
        res.files["phase_diagram_" + order_label(o) + ".csv"] =
            detail::render([&](std::ostream &os) { io::write_phase_diagram(os, pd); });
        json entry = io::to_json(pd);
        entry.erase("intensity");
        json window = json::array();
        for (std::size_t g = 0; g < pd.gamma_grid.size(); ++g)
            if (period_doubling_contrast(pd.raw_intensity[g]) >= c.sweep.contrast_threshold)
                window.push_back(pd.gamma_grid[g]);
        entry["stable_gammas"] = window;
        res.summary["phase_diagrams"].push_back(entry);
    }
    return res;
}

/// One heating-rate point: aggregated Gamma_e over realizations.
struct RatePoint {
    int order = 0;
    double x = 0.0;  // epsilon or T
    double epsilon = 0.0;
    MonopoleSpec spec;
    Stats gamma_e;
    std::optional<Stats> gamma_0;
    std::size_t reached = 0;
    std::size_t realizations = 0;
    std::size_t cycles = 0;
};

namespace detail {

struct RateTask {
    int order;
    std::size_t point;
    std::size_t r;
    MonopoleSpec spec;
};

inline std::vector<HeatingFit> rate_tasks(const RunConfig &c, const std::vector<Realization> &reals,
                                          const std::vector<RateTask> &tasks) {
    return parallel_map(tasks.size(), c.threads, [&](std::size_t i) {
        const RateTask &t = tasks[i];
        const double eps = t.spec.epsilon();
        const std::string ctx = order_label(t.order) + " point " + std::to_string(t.point) + " (eps " + io::fmt(eps) +
                                ", T " + io::fmt(t.spec.block_duration()) + ") realization " + std::to_string(t.r);
        return in_context(ctx, [&] {
            const std::size_t cycles = adaptive_cycles(c, t.order, eps);
            return lifetime(simulate(c, reals[t.r], make_stream(c, t.order, cycles, t.r), t.spec, t.point));
        });
    });
}

inline json rate_json(const RatePoint &p) {
    json j{{"order", order_to_json(p.order)},
           {"x", p.x},
           {"epsilon", p.epsilon},
           {"T", p.spec.block_duration()},
           {"Gamma_e_mean", p.gamma_e.mean},
           {"Gamma_e_std", p.gamma_e.std},
           {"reached", p.reached},
           {"realizations", p.realizations},
           {"cycles", p.cycles}};
    if (p.gamma_0) {
        j["Gamma_0_mean"] = p.gamma_0->mean;
        j["Gamma_0_std"] = p.gamma_0->std;
    }
    return j;
}

inline std::string rate_csv(const std::vector<RatePoint> &pts, const std::string &x_name) {
    std::ostringstream os;
    io::write_metadata(os, "heating", {});
    os << "order," << x_name << ",epsilon,T,gamma_e_mean,gamma_e_std,gamma_0_mean,gamma_0_std,excess,reached,realizations\n";
    for (const auto &p : pts) {
        const double g0 = p.gamma_0 ? p.gamma_0->mean : 0.0;
        os << order_label(p.order) << "," << io::fmt(p.x) << "," << io::fmt(p.epsilon) << ","
           << io::fmt(p.spec.block_duration()) << "," << io::fmt(p.gamma_e.mean) << "," << io::fmt(p.gamma_e.std) << ","
           << (p.gamma_0 ? io::fmt(g0) : "") << "," << (p.gamma_0 ? io::fmt(p.gamma_0->std) : "") << ","
           << io::fmt(p.gamma_e.mean - g0) << "," << p.reached << "," << p.realizations << "\n";
    }
    return os.str();
}

/// Power-law fit of (x, y) over points with y > 0; records the outcome.
inline json fit_entry(const std::vector<double> &xs, const std::vector<double> &ys) {
    std::vector<double> fx, fy;
    for (std::size_t i = 0; i < xs.size(); ++i)
        if (ys[i] > 0.0) {
            fx.push_back(xs[i]);
            fy.push_back(ys[i]);
        }
    try {
        return io::to_json(fit_power_law(fx, fy));
    } catch (const Error &e) {
        return {{"error", e.what()}};
    }
}

}  // namespace detail

/// Gamma_e versus kick deviation, with Gamma_0 from an eps = 0 run.
inline std::vector<RatePoint> heating_eps_points(const RunConfig &c, const std::vector<Realization> &reals) {
    std::vector<double> eps{0.0};
    eps.insert(eps.end(), c.sweep.epsilon.begin(), c.sweep.epsilon.end());
    std::vector<detail::RateTask> tasks;
    for (int o : c.drive.orders)
        for (std::size_t p = 0; p < eps.size(); ++p)
            for (std::size_t r = 0; r < detail::realization_count(c, o); ++r) {
                MonopoleSpec spec = c.drive.spec;
                spec.gamma_y = std::numbers::pi + eps[p];
                tasks.push_back({o, p, r, spec});
            }
    const auto fits = detail::rate_tasks(c, reals, tasks);
    std::vector<RatePoint> out;
    std::size_t i = 0;
    for (int o : c.drive.orders) {
        std::optional<Stats> g0;
        for (std::size_t p = 0; p < eps.size(); ++p) {
            RatePoint pt;
            pt.order = o;
            pt.x = pt.epsilon = eps[p];
            pt.spec = tasks[i].spec;
            pt.cycles = detail::adaptive_cycles(c, o, eps[p]);
            std::vector<double> rates;
            for (std::size_t r = 0; r < detail::realization_count(c, o); ++r, ++i) {
                rates.push_back(fits[i].gamma_e);
                pt.reached += fits[i].reached ? 1 : 0;
            }
            pt.realizations = rates.size();
            pt.gamma_e = mean_std(rates);
            if (p == 0) g0 = pt.gamma_e;
            pt.gamma_0 = g0;
            out.push_back(pt);
        }
    }
    return out;
}

/// Gamma_e versus period with eps = delta_eps + B T.
inline std::vector<RatePoint> heating_period_points(const RunConfig &c, const std::vector<Realization> &reals) {
    std::vector<MonopoleSpec> specs;
    if (!c.sweep.tau.empty())
        for (double tau : c.sweep.tau) {
            MonopoleSpec s = c.drive.spec;
            s.tau = tau;
            specs.push_back(s);
        }
    for (const auto &b : c.sweep.blocks) {
        MonopoleSpec s = c.drive.spec;
        s.pulses_per_block = b.n;
        s.kick_plus = b.n_plus;
        s.kick_minus = b.n_minus;
        specs.push_back(s);
    }
    for (auto &s : specs) {
        s.validate();
        s.gamma_y = std::numbers::pi + c.sweep.delta_eps + c.sweep.b_slope * s.block_duration();
    }
    const int variants = c.sweep.subtract_gamma_0 ? 2 : 1;
    std::vector<detail::RateTask> tasks;
    for (int o : c.drive.orders)
        for (std::size_t p = 0; p < specs.size(); ++p)
            for (int v = 0; v < variants; ++v)
                for (std::size_t r = 0; r < detail::realization_count(c, o); ++r) {
                    MonopoleSpec spec = specs[p];
                    if (v == 1) spec.gamma_y = std::numbers::pi;
                    tasks.push_back({o, p, r, spec});
                }
    const auto fits = detail::rate_tasks(c, reals, tasks);
    std::vector<RatePoint> out;
    std::size_t i = 0;
    for (int o : c.drive.orders)
        for (std::size_t p = 0; p < specs.size(); ++p) {
            RatePoint pt;
            pt.order = o;
            pt.spec = specs[p];
            pt.x = specs[p].block_duration();
            pt.epsilon = specs[p].epsilon();
            pt.cycles = detail::adaptive_cycles(c, o, pt.epsilon);
            for (int v = 0; v < variants; ++v) {
                std::vector<double> rates;
                for (std::size_t r = 0; r < detail::realization_count(c, o); ++r, ++i) {
                    rates.push_back(fits[i].gamma_e);
                    if (v == 0) pt.reached += fits[i].reached ? 1 : 0;
                }
                if (v == 0) {
                    pt.gamma_e = mean_std(rates);
                    pt.realizations = rates.size();
                } else {
                    pt.gamma_0 = mean_std(rates);
                }
            }
            out.push_back(pt);
        }
    return out;
}

inline RunResult run_heating(const RunConfig &c) {
    RunResult res;
    const auto reals = detail::realizations(c, res);
    const bool eps_sweep = c.kind == ExperimentKind::kHeatingEps;
    const auto pts = eps_sweep ? heating_eps_points(c, reals) : heating_period_points(c, reals);
    res.files[eps_sweep ? "heating_eps.csv" : "heating_t.csv"] = detail::rate_csv(pts, eps_sweep ? "epsilon" : "T");
    res.summary["points"] = json::array();
    for (const auto &p : pts) res.summary["points"].push_back(detail::rate_json(p));
    res.summary["fits"] = json::array();
    for (int o : c.drive.orders) {
        std::vector<double> xs, ys;
        for (const auto &p : pts) {
            if (p.order != o || (eps_sweep && p.epsilon == 0.0)) continue;
            xs.push_back(p.x);
            const bool subtract = eps_sweep || c.sweep.subtract_gamma_0;
            ys.push_back(p.gamma_e.mean - (subtract && p.gamma_0 ? p.gamma_0->mean : 0.0));
        }
        json fit = detail::fit_entry(xs, ys);
        fit["order"] = detail::order_to_json(o);
        fit["quantity"] = eps_sweep || c.sweep.subtract_gamma_0 ? "Gamma_e - Gamma_0" : "Gamma_e";
        res.summary["fits"].push_back(fit);
    }
    return res;
}

inline std::string read_message_text(const MessageConfig &m) {
    if (!m.text.empty()) return m.text;
    std::ifstream in(m.file);
    if (!in) throw ConfigurationError("cannot open message file " + m.file);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    while (!text.empty() && (text.back() == '\n' || text.back() == '\r')) text.pop_back();
    return text;
}

inline RunResult run_encode(const RunConfig &c) {
    RunResult res;
    const std::string text = read_message_text(c.message);
    const Message msg = make_message(text);
    const SymbolStream stream = encode(msg, c.message.offset);
    res.files["stream.txt"] = detail::render([&](std::ostream &os) { io::write_stream(os, stream); });
    const Realization real = detail::in_context("realization 0", [&] { return make_realization(c, 0); });
    res.graph_seeds.push_back(real.graph_seed);
    const SignalTrace trace = detail::in_context("encode", [&] { return simulate(c, real, stream, c.drive.spec, 0); });
    res.files["trace.csv"] = detail::render([&](std::ostream &os) {
        io::write_trace(os, trace, {{"message_offset", std::to_string(c.message.offset)}});
    });
    res.summary = {{"text", text},
                   {"characters", text.size()},
                   {"bits", msg.bits.size()},
                   {"cycles", stream.size()},
                   {"symbols", stream.to_string()}};
    return res;
}

inline RunResult run_decode(const RunConfig &c) {
    RunResult res;
    std::ifstream in(c.message.trace);
    if (!in) throw ConfigurationError("cannot open trace " + c.message.trace);
    const SignalTrace trace = io::read_trace(in);
    const DecodeResult out = decode(trace, trace.spec, c.message.min_margin, c.message.offset);
    res.summary = {{"text", out.message.text}, {"bits", out.message.bits.size()}, {"margins", out.margins}};
    return res;
}

inline RunResult run(const RunConfig &c) {
    switch (c.kind) {
        case ExperimentKind::kTrace: return run_trace(c);
        case ExperimentKind::kSpectrum: return run_spectrum(c);
        case ExperimentKind::kPhaseDiagram: return run_phase_diagram(c);
        case ExperimentKind::kHeatingEps:
        case ExperimentKind::kHeatingT:
        case ExperimentKind::kHighFreq: return run_heating(c);
        case ExperimentKind::kEncode: return run_encode(c);
        case ExperimentKind::kDecode: return run_decode(c);
    }
    throw ConfigurationError("unsupported experiment kind");
}

inline json manifest(const RunConfig &c, const RunResult &res) {
    json files = json::array();
    for (const auto &[name, body] : res.files) files.push_back({{"name", name}, {"fnv1a64", hex64(fnv1a(body))}, {"bytes", body.size()}});
    files.push_back({{"name", "summary.json"}});
    return {{"manifest_version", 1},
            {"code_version", kVersion},
            {"rng", kRngName},
            {"config_hash", config_hash(c)},
            {"config", to_json(c)},
            {"seeds", {{"root", c.seed}, {"graph", res.graph_seeds}, {"drive", res.drive_seeds}}},
            {"files", files}};
}

/// Writes result files, summary.json and manifest.json into `dir`.
inline void write_outputs(const RunConfig &c, const RunResult &res, const std::filesystem::path &dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw ConfigurationError("cannot create output directory " + dir.string() + ": " + ec.message());
    auto put = [&](const std::string &name, const std::string &body) {
        std::ofstream out(dir / name, std::ios::binary);
        if (!out) throw ConfigurationError("cannot write " + (dir / name).string());
        out << body;
    };
    for (const auto &[name, body] : res.files) put(name, body);
    put("summary.json", res.summary.dump(2) + "\n");
    put("manifest.json", manifest(c, res).dump(2) + "\n");
}

}  // namespace rondeau::cli
