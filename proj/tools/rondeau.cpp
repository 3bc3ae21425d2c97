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

// Command-line driver. Every subcommand builds a JSON run configuration
// (optionally starting from --config) and hands it to rondeau::cli::run.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "rondeau/experiments.hpp"

using nlohmann::json;
namespace rc = rondeau::cli;

namespace {

struct Common {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> engine;
    std::optional<std::string> out;
    std::optional<unsigned> threads;
};

void add_common(CLI::App *app, Common &c) {
    app->add_option("--config", c.config, "JSON run configuration (or a manifest) to start from");
    app->add_option("--seed", c.seed, "root seed");
    app->add_option("--engine", c.engine, "full | dephasing");
    app->add_option("--out", c.out, "output directory");
    app->add_option("--threads", c.threads, "worker threads");
}

json load_json(const std::string &path) {
    if (path.empty()) return json::object();
    std::ifstream in(path);
    if (!in) throw rondeau::ConfigurationError("cannot open config " + path);
    json j = json::parse(in);
    if (j.contains("manifest_version") && j.contains("config")) j = j.at("config");
    return j;
}

json base_config(const Common &c, std::string_view kind) {
    json j = load_json(c.config);
    j["experiment"] = kind;
    if (c.seed) j["seed"] = *c.seed;
    if (c.engine) j["engine"] = *c.engine;
    if (c.out) j["output_dir"] = *c.out;
    if (c.threads) j["threads"] = *c.threads;
    return j;
}

template <typename T>
void set_if(json &j, const char *section, const char *key, const std::optional<T> &v) {
    if (v) j[section][key] = *v;
}

json order_list(const std::vector<std::string> &orders) {
    json out = json::array();
    for (const auto &o : orders) {
        if (o == "inf" || o == "tm" || o == "thue_morse") out.push_back("inf");
        else if (o == "floquet" || o == "explicit") out.push_back(o);
        else out.push_back(std::stoi(o));
    }
    return out;
}

struct DriveFlags {
    std::optional<int> spins, n, n_plus, n_minus;
    std::optional<double> tau, gamma_over_pi;
    std::optional<std::size_t> cycles, realizations;
    std::vector<std::string> orders;
};

void add_drive(CLI::App *app, DriveFlags &d) {
    app->add_option("--spins", d.spins, "number of spins");
    app->add_option("--N", d.n, "spin-lock pulses per block");
    app->add_option("--N-plus", d.n_plus, "kick position of the + block");
    app->add_option("--N-minus", d.n_minus, "kick position of the - block");
    app->add_option("--tau", d.tau, "spin-lock cycle length in units of 1/J");
    app->add_option("--gamma-over-pi", d.gamma_over_pi, "kick angle in units of pi");
    app->add_option("--cycles", d.cycles, "number of blocks M");
    app->add_option("--realizations", d.realizations, "drive / disorder realizations");
    app->add_option("--order", d.orders, "multipole order(s): integer, inf, floquet");
}

void apply_drive(json &j, const DriveFlags &d) {
    set_if(j, "system", "spins", d.spins);
    set_if(j, "drive", "N", d.n);
    set_if(j, "drive", "N_plus", d.n_plus);
    set_if(j, "drive", "N_minus", d.n_minus);
    set_if(j, "drive", "tau", d.tau);
    set_if(j, "drive", "gamma_y_over_pi", d.gamma_over_pi);
    set_if(j, "drive", "cycles", d.cycles);
    set_if(j, "sweep", "realizations", d.realizations);
    if (!d.orders.empty()) j["drive"]["orders"] = order_list(d.orders);
}

json grid_json(const std::vector<double> &v) { return v; }

int execute(const json &config_json, bool print_text) {
    const rc::RunConfig cfg = rc::parse_config(config_json);
    const rc::RunResult res = rc::run(cfg);
    rc::write_outputs(cfg, res, cfg.output_dir);
    if (print_text) std::cout << res.summary.at("text").get<std::string>() << "\n";
    else std::cout << json{{"output_dir", cfg.output_dir}, {"config_hash", rc::config_hash(cfg)}}.dump() << "\n";
    return 0;
}

json error_json(const std::string &kind, const std::string &message) {
    return {{"error", {{"kind", kind}, {"message", message}}}};
}

}  // namespace

int main(int argc, char **argv) {
    CLI::App app{"rondeau: random multipolar driving of dipolar spin ensembles"};
    app.require_subcommand(1);

    Common c_run;
    std::string run_path;
    auto *run = app.add_subcommand("run", "execute a JSON configuration or re-run a manifest");
    run->add_option("config", run_path, "configuration or manifest")->required();
    run->add_option("--out", c_run.out, "output directory");
    run->add_option("--threads", c_run.threads, "worker threads");

    Common c_trace;
    DriveFlags d_trace;
    auto *trace = app.add_subcommand("trace", "simulate signal traces");
    add_common(trace, c_trace);
    add_drive(trace, d_trace);

    Common c_pd;
    DriveFlags d_pd;
    double g_start = 0.5, g_stop = 1.15;
    std::size_t g_count = 14;
    auto *pd = app.add_subcommand("phase-diagram", "stroboscopic DFT intensity over a kick-angle grid");
    add_common(pd, c_pd);
    add_drive(pd, d_pd);
    pd->add_option("--gamma-start", g_start, "first kick angle / pi");
    pd->add_option("--gamma-stop", g_stop, "last kick angle / pi");
    pd->add_option("--gamma-count", g_count, "grid points");

    Common c_heat;
    DriveFlags d_heat;
    std::string mode = "eps";
    std::vector<double> h_eps, h_tau;
    std::optional<double> b_slope, delta_eps;
    bool subtract = false;
    auto *heat = app.add_subcommand("heating", "heating-rate sweeps");
    add_common(heat, c_heat);
    add_drive(heat, d_heat);
    heat->add_option("--mode", mode, "eps | period | high-freq")->check(CLI::IsMember({"eps", "period", "high-freq"}));
    heat->add_option("--eps", h_eps, "kick deviations (rad)");
    heat->add_option("--taus", h_tau, "spin-lock cycle lengths for the period sweep");
    heat->add_option("--b-slope", b_slope, "B in eps = delta_eps + B T");
    heat->add_option("--delta-eps", delta_eps, "calibration offset of eps");
    heat->add_flag("--subtract-gamma0", subtract, "also measure and subtract Gamma_0 per period");

    Common c_spec;
    DriveFlags d_spec;
    auto *spectrum = app.add_subcommand("spectrum", "symbol and micromotion spectra averaged over realizations");
    add_common(spectrum, c_spec);
    add_drive(spectrum, d_spec);

    Common c_enc;
    DriveFlags d_enc;
    std::string text, file;
    std::size_t offset = 0;
    auto *enc = app.add_subcommand("encode", "encode text into a drive and simulate it");
    add_common(enc, c_enc);
    add_drive(enc, d_enc);
    enc->add_option("--text", text, "message text");
    enc->add_option("--file", file, "message file");
    enc->add_option("--offset", offset, "preamble cycles");

    Common c_dec;
    std::string dec_trace;
    double min_margin = 0.0;
    std::size_t dec_offset = 0;
    auto *dec = app.add_subcommand("decode", "decode a trace CSV");
    add_common(dec, c_dec);
    dec->add_option("--trace", dec_trace, "trace CSV")->required();
    dec->add_option("--min-margin", min_margin, "significance threshold on |S|");
    dec->add_option("--offset", dec_offset, "preamble cycles");

    double t_hit_s = 36.2, tau_us = 86.8;
    int cap_n = 300, bits = rondeau::kBitsPerChar;
    bool kick_slot = false;
    auto *cap = app.add_subcommand("capacity", "characters that fit before the signal hits the noise floor");
    cap->add_option("--t-hit", t_hit_s, "noise-floor time in seconds");
    cap->add_option("--tau-us", tau_us, "spin-lock cycle in microseconds");
    cap->add_option("--N", cap_n, "spin-lock pulses per block");
    cap->add_option("--bits", bits, "bits per character");
    cap->add_flag("--include-kick-slot", kick_slot, "count the kick slot in the block duration");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp &e) {
        return app.exit(e);
    } catch (const CLI::ParseError &e) {
        std::cerr << error_json("usage", e.what()).dump() << "\n";
        return 2;
    }

    try {
        if (*run) {
            json j = load_json(run_path);
            if (c_run.out) j["output_dir"] = *c_run.out;
            if (c_run.threads) j["threads"] = *c_run.threads;
            return execute(j, false);
        }
        if (*trace) {
            json j = base_config(c_trace, "trace");
            apply_drive(j, d_trace);
            return execute(j, false);
        }
        if (*pd) {
            json j = base_config(c_pd, "phase_diagram");
            apply_drive(j, d_pd);
            if (!j["sweep"].contains("gamma_over_pi") || pd->count("--gamma-start") || pd->count("--gamma-stop") ||
                pd->count("--gamma-count"))
                j["sweep"]["gamma_over_pi"] = {{"start", g_start}, {"stop", g_stop}, {"count", g_count}};
            return execute(j, false);
        }
        if (*heat) {
            json j = base_config(c_heat, mode == "eps" ? "heating_eps" : mode == "period" ? "heating_t" : "high_freq");
            apply_drive(j, d_heat);
            if (!h_eps.empty()) j["sweep"]["epsilon"] = grid_json(h_eps);
            if (!h_tau.empty()) j["sweep"]["tau"] = grid_json(h_tau);
            set_if(j, "sweep", "b_slope", b_slope);
            set_if(j, "sweep", "delta_eps", delta_eps);
            if (subtract) j["sweep"]["subtract_gamma_0"] = true;
            return execute(j, false);
        }
        if (*spectrum) {
            json j = base_config(c_spec, "spectrum");
            apply_drive(j, d_spec);
            return execute(j, false);
        }
        if (*enc) {
            json j = base_config(c_enc, "encode");
            apply_drive(j, d_enc);
            if (!text.empty()) j["message"]["text"] = text;
            if (!file.empty()) j["message"]["file"] = file;
            if (enc->count("--offset")) j["message"]["offset"] = offset;
            return execute(j, false);
        }
        if (*dec) {
            json j = base_config(c_dec, "decode");
            j["message"]["trace"] = dec_trace;
            j["message"]["min_margin"] = min_margin;
            j["message"]["offset"] = dec_offset;
            return execute(j, true);
        }
        if (*cap) {
            rondeau::MonopoleSpec spec;
            spec.pulses_per_block = cap_n;
            spec.tau = tau_us * 1e-6;
            const std::size_t chars = rondeau::capacity(t_hit_s, spec, bits, kick_slot);
            std::cout << json{{"capacity", chars}, {"t_hit_s", t_hit_s}, {"tau_us", tau_us}, {"N", cap_n}, {"bits", bits}}.dump()
                      << "\n";
            return 0;
        }
    } catch (const rondeau::LowConfidenceError &e) {
        json err = error_json(e.kind(), e.what());
        err["error"]["cycles"] = e.cycles();
        std::cerr << err.dump() << "\n";
        return 1;
    } catch (const rondeau::Error &e) {
        std::cerr << error_json(e.kind(), e.what()).dump() << "\n";
        return 1;
    } catch (const json::exception &e) {
        std::cerr << error_json("parse", e.what()).dump() << "\n";
        return 1;
    } catch (const std::exception &e) {
        std::cerr << error_json("internal", e.what()).dump() << "\n";
        return 1;
    }
    return 1;
}
