// Command-line front end. Every subcommand resolves a scenario (defaults <-
// file <- --set overrides), writes a manifest carrying the fully resolved
// document, runs one experiment, and emits CSV plus a summary. Feeding the
// manifest back through --scenario reproduces the run byte for byte.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <iostream>
#include <numbers>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "igesim/apps.hpp"
#include "igesim/csv.hpp"
#include "igesim/errors.hpp"
#include "igesim/estimator.hpp"
#include "igesim/linkmodel.hpp"
#include "igesim/phy.hpp"
#include "igesim/powerctrl.hpp"
#include "igesim/protocol.hpp"
#include "igesim/rng.hpp"
#include "igesim/scenario.hpp"
#include "igesim/units.hpp"

namespace fs = std::filesystem;
using namespace igesim;

namespace {

double median_of(std::vector<double> v) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    out << text;
    if (!out) throw IoError("write failed: " + path.string());
}

struct World {
    Topology topo;
    InterferenceGraph truth{0};
};

World make_world(const Scenario& sc) {
    auto [topo, truth] = generate_topology(sc.topo_params, sc.topology_seed);
    return World{std::move(topo), std::move(truth)};
}

ProtocolContext make_context(const Scenario& sc, const World& w) {
    ProtocolContext ctx;
    ctx.topo = &w.topo;
    ctx.truth = &w.truth;
    ctx.round = RoundConfig::for_topology(w.topo, sc.n_tx, sc.update_interval_rounds,
                                          sc.ige_passes);
    ctx.phy = sc.phy;
    ctx.capture = sc.capture;
    ctx.noise = sc.noise;
    ctx.power_set_mw = sc.power_set_mw;
    ctx.min_adjust_mw = sc.min_adjust_mw;
    return ctx;
}

// The application studies take the interference graph a deployment would
// actually have on hand: a noisy one-transmitter-per-slot survey, or the
// ground truth when the scenario asks for it.
InterferenceGraph working_estimate(const Scenario& sc, const World& w, bool from_bootstrap,
                                   double ref_power_mw, std::uint64_t seed) {
    if (!from_bootstrap) return w.truth;
    Rng rng(seed);
    const DeviceNoise dev = make_device_noise(w.topo.n(), sc.noise, rng);
    return bootstrap_point_to_point(w.truth, w.topo, sc.phy, sc.noise, dev, ref_power_mw,
                                    dbm_to_mw(sc.capture.noise_floor_dbm), rng);
}

// ---------------------------------------------------------------- linearity

void run_linearity(const Scenario& sc, const fs::path& out, json& summary) {
    const auto& ln = sc.linearity;
    const double gain = db_to_gain(ln.gain_db);
    const double tx_mw = dbm_to_mw(ln.tx_power_dbm);
    Rng rng(sc.seeds[0]);
    const OvershootModel no_overshoot; // transient study has its own knobs

    auto one_ratio = [&](const std::vector<SenderState>& senders) {
        const RssiTrace joint = sample_trace(senders, sc.phy, no_overshoot, rng.next_u64());
        std::vector<double> individuals;
        for (const SenderState& s : senders) {
            const RssiTrace solo = sample_trace({s}, sc.phy, no_overshoot, rng.next_u64());
            individuals.push_back(mean_power(solo).mw());
        }
        return power_ratio(mean_power(joint).mw(), individuals);
    };

    CsvFile by_count((out / "linearity_senders.csv").string(),
                     {"senders", "trial", "power_ratio"});
    json mean_by_count = json::object();
    for (int k = 2; k <= ln.max_senders; ++k) {
        double acc = 0.0;
        for (long t = 0; t < ln.trials; ++t) {
            std::vector<SenderState> senders(static_cast<std::size_t>(k));
            for (SenderState& s : senders) {
                s.gain = gain;
                s.tx_power_mw = tx_mw;
                s.cfo_hz = rng.uniform(ln.cfo_min_hz, ln.cfo_max_hz);
                s.initial_phase_rad = rng.uniform(0.0, 2.0 * std::numbers::pi);
            }
            const double r = one_ratio(senders);
            acc += r;
            by_count.row({csv_num(k), csv_num(t), csv_num(r)});
        }
        mean_by_count[std::to_string(k)] = acc / static_cast<double>(ln.trials);
    }
    by_count.close();

    // Two senders whose beat period divides the sampling window: the cross
    // term integrates out whole cycles, so the ratio pins to one.
    CsvFile beat((out / "linearity_beat.csv").string(),
                 {"beat_period_us", "trial", "power_ratio"});
    json mean_by_period = json::object();
    for (double period_us : ln.beat_cycles_us) {
        const double cfo = 1e6 / period_us;
        double acc = 0.0;
        for (long t = 0; t < ln.trials; ++t) {
            std::vector<SenderState> senders(2);
            for (SenderState& s : senders) {
                s.gain = gain;
                s.tx_power_mw = tx_mw;
                s.initial_phase_rad = rng.uniform(0.0, 2.0 * std::numbers::pi);
            }
            senders[1].cfo_hz = cfo;
            const double r = one_ratio(senders);
            acc += r;
            beat.row({csv_num(period_us), csv_num(t), csv_num(r)});
        }
        mean_by_period[csv_num(period_us)] = acc / static_cast<double>(ln.trials);
    }
    beat.close();

    // Receiver-side compression: drive two equal senders up the front end and
    // watch the measured sum fall behind the linear sum.
    CsvFile sat((out / "linearity_saturation.csv").string(),
                {"per_sender_dbm", "trial", "power_ratio"});
    json sat_mean = json::object();
    for (double level_dbm : ln.saturation_sweep_dbm) {
        const double level_tx_mw = dbm_to_mw(level_dbm - ln.gain_db);
        double acc = 0.0;
        for (long t = 0; t < ln.trials; ++t) {
            std::vector<SenderState> senders(2);
            for (SenderState& s : senders) {
                s.gain = gain;
                s.tx_power_mw = level_tx_mw;
                s.cfo_hz = rng.uniform(ln.cfo_min_hz, ln.cfo_max_hz);
                s.initial_phase_rad = rng.uniform(0.0, 2.0 * std::numbers::pi);
            }
            const double r = one_ratio(senders);
            acc += r;
            sat.row({csv_num(level_dbm), csv_num(t), csv_num(r)});
        }
        sat_mean[csv_num(level_dbm)] = acc / static_cast<double>(ln.trials);
    }
    sat.close();

    summary["mean_ratio_by_senders"] = mean_by_count;
    summary["mean_ratio_by_beat_period_us"] = mean_by_period;
    summary["mean_ratio_by_saturation_dbm"] = sat_mean;
}

// ----------------------------------------------------------------- estimate

void run_estimate(const Scenario& sc, const fs::path& out, json& summary) {
    const auto& es = sc.estimate;
    Rng rng(sc.seeds[0]);
    CsvFile csv((out / "estimate_systems.csv").string(),
                {"instance", "kappa", "median_error_db", "residual_mw", "censored_links"});

    const int n = es.n;
    std::vector<double> kappas, errors;
    for (long i = 0; i < es.count; ++i) {
        std::vector<double> truth(static_cast<std::size_t>(n));
        for (double& h : truth) h = db_to_gain(rng.uniform(es.h_db_min, es.h_db_max));

        // One magnitude scale per instance (log-uniform across the range) with
        // a little per-node spread: the instance's conditioning is then set by
        // the scale, so the study covers the whole kappa axis evenly.
        const std::vector<double> base(static_cast<std::size_t>(n), es.base_mw);
        const double scale =
            es.delta_rel_min * std::pow(es.delta_rel_max / es.delta_rel_min, rng.uniform());
        std::vector<double> deltas(static_cast<std::size_t>(n));
        for (double& d : deltas) {
            const double rel = std::min(scale * std::pow(10.0, rng.uniform(-0.3, 0.3)), 0.95);
            d = (rng.bernoulli(0.5) ? 1.0 : -1.0) * rel * es.base_mw;
        }

        const TxPowerMatrix p = adjustment_matrix(base, deltas);
        std::vector<double> p_rx(static_cast<std::size_t>(n), 0.0);
        for (int r = 0; r < n; ++r) {
            double sum = 0.0;
            for (int c = 0; c < n; ++c)
                sum += p.at(r, c) * truth[static_cast<std::size_t>(c)];
            p_rx[static_cast<std::size_t>(r)] =
                sum * db_to_gain(rng.normal(0.0, es.noise_sigma_db));
        }

        const GainEstimate est = estimate_gains(p, p_rx, 1e-9, 1.0);
        // Censored links (estimate pinned at the lower bound) still enter the
        // pool with their clamped distance: that is the error the deployment
        // would actually live with.
        const std::vector<LinkError> link_errors = gain_error_db(est, truth);
        std::vector<double> abs_err;
        int censored = 0;
        for (const LinkError& le : link_errors) {
            if (le.censored) ++censored;
            abs_err.push_back(std::abs(le.error_db));
        }
        const double med = median_of(abs_err);
        csv.row({csv_num(i), csv_num(est.condition_number), csv_num(med),
                 csv_num(est.residual_norm), csv_num(censored)});
        if (!abs_err.empty()) {
            kappas.push_back(est.condition_number);
            errors.push_back(med);
        }
    }
    csv.close();

    // Decile medians of error over kappa for a quick monotonicity read.
    std::vector<std::size_t> order(kappas.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return kappas[a] < kappas[b]; });
    CsvFile dec((out / "estimate_deciles.csv").string(),
                {"decile", "kappa_median", "error_db_median"});
    json deciles = json::array();
    for (int d = 0; d < 10; ++d) {
        const std::size_t lo = order.size() * static_cast<std::size_t>(d) / 10;
        const std::size_t hi = order.size() * static_cast<std::size_t>(d + 1) / 10;
        if (lo >= hi) continue;
        std::vector<double> ks, errs;
        for (std::size_t idx = lo; idx < hi; ++idx) {
            ks.push_back(kappas[order[idx]]);
            errs.push_back(errors[order[idx]]);
        }
        const double km = median_of(ks), em = median_of(errs);
        dec.row({csv_num(d), csv_num(km), csv_num(em)});
        deciles.push_back({{"decile", d}, {"kappa_median", km}, {"error_db_median", em}});
    }
    dec.close();
    summary["instances"] = es.count;
    summary["deciles"] = deciles;
}

// -------------------------------------------------------------------- flood

void run_flood(const Scenario& sc, const fs::path& out, json& summary) {
    const World w = make_world(sc);
    const ProtocolContext ctx = make_context(sc, w);
    CampaignOptions opts;
    opts.fixed_power_mw = sc.flood.fixed_power_mw;
    opts.bootstrap_power_mw = sc.flood.bootstrap_power_mw;

    CsvFile sum_csv((out / "flood_summary.csv").string(),
                    {"scheme", "seed", "rounds", "e2e_per", "per_slot_per",
                     "mean_latency_slots", "ige_success_rate", "ige_processes",
                     "ige_successes", "receive_failures", "receive_opportunities"});
    CsvFile cov_csv((out / "flood_coverage.csv").string(),
                    {"scheme", "seed", "slot", "coverage_fraction"});
    CsvFile lat_csv((out / "flood_latency.csv").string(),
                    {"scheme", "seed", "latency_slots", "rounds_count"});

    json schemes = json::array();
    for (Scheme scheme : sc.flood.schemes) {
        const std::string name = scenario_detail::scheme_name(scheme);
        for (std::uint64_t seed : sc.seeds) {
            const CampaignMetrics m = run_campaign(ctx, scheme, sc.flood.rounds, seed, opts);
            sum_csv.row({name, csv_num(seed), csv_num(m.rounds_measured), csv_num(m.e2e_per),
                         csv_num(m.per_slot_per), csv_num(m.mean_latency_slots),
                         csv_num(m.ige_success_rate), csv_num(m.ige_processes),
                         csv_num(m.ige_successes), csv_num(m.receive_failures),
                         csv_num(m.receive_opportunities)});
            for (std::size_t s = 0; s < m.coverage_by_slot.size(); ++s)
                cov_csv.row({name, csv_num(seed), csv_num(static_cast<long>(s)),
                             csv_num(m.coverage_by_slot[s])});
            for (std::size_t l = 0; l < m.latency_histogram.size(); ++l)
                if (m.latency_histogram[l] > 0)
                    lat_csv.row({name, csv_num(seed), csv_num(static_cast<long>(l)),
                                 csv_num(m.latency_histogram[l])});
            schemes.push_back({{"scheme", name},
                               {"seed", seed},
                               {"e2e_per", m.e2e_per},
                               {"mean_latency_slots", m.mean_latency_slots},
                               {"ige_success_rate", m.ige_success_rate}});
        }
    }
    sum_csv.close();
    cov_csv.close();
    lat_csv.close();
    summary["campaigns"] = schemes;
}

// ----------------------------------------------------------------- sweep-dp

void run_sweep_dp(const Scenario& sc, const fs::path& out, json& summary) {
    const World w = make_world(sc);
    const int n = w.topo.n();
    ProtocolContext ctx = make_context(sc, w);
    if (sc.sweep_dp.perfect_capture) ctx.capture = reliable_capture(sc.capture);

    std::vector<double> base_plan(static_cast<std::size_t>(n));
    for (int v = 0; v < n; ++v)
        base_plan[static_cast<std::size_t>(v)] =
            sc.sweep_dp.base_cycle_mw[static_cast<std::size_t>(v) %
                                      sc.sweep_dp.base_cycle_mw.size()];

    CsvFile per_proc((out / "sweep_dp.csv").string(),
                     {"dp_mw", "process", "success", "links", "median_error_db"});
    CsvFile per_dp((out / "sweep_dp_summary.csv").string(),
                   {"dp_mw", "processes", "success_rate", "median_error_db"});
    json points = json::array();

    Rng master(sc.seeds[0]);
    const InterferenceGraph empty_prev(n);
    for (double dp : sc.sweep_dp.values_mw) {
        ProtocolContext ctx_dp = ctx;
        ctx_dp.min_adjust_mw = dp;
        long successes = 0;
        std::vector<double> pooled;
        for (long proc = 0; proc < sc.sweep_dp.processes; ++proc) {
            // Same stream per process index across dp values: paired design.
            Rng rng = master.fork(static_cast<std::uint64_t>(proc));
            const DeviceNoise dev = make_device_noise(n, sc.noise, rng);
            const IgeOutcome outcome = run_ige_process(ctx_dp, dev, base_plan, empty_prev, rng);
            std::vector<double> errs;
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j)
                    if (outcome.graph.has(i, j) && w.truth.has(i, j)) {
                        const double e = std::abs(gain_to_db(outcome.graph.gain(i, j)) -
                                                  gain_to_db(w.truth.gain(i, j)));
                        errs.push_back(e);
                        pooled.push_back(e);
                    }
            successes += outcome.success ? 1 : 0;
            per_proc.row({csv_num(dp), csv_num(proc), csv_num(outcome.success ? 1 : 0),
                          csv_num(static_cast<long>(errs.size())), csv_num(median_of(errs))});
        }
        const double rate = static_cast<double>(successes) /
                            static_cast<double>(sc.sweep_dp.processes);
        const double pooled_med = median_of(pooled);
        per_dp.row({csv_num(dp), csv_num(sc.sweep_dp.processes), csv_num(rate),
                    csv_num(pooled_med)});
        points.push_back(
            {{"dp_mw", dp}, {"success_rate", rate}, {"median_error_db", pooled_med}});
    }
    per_proc.close();
    per_dp.close();
    summary["points"] = points;
}

// -------------------------------------------------------------- convergecast

void run_convergecast(const Scenario& sc, const fs::path& out, json& summary) {
    const World w = make_world(sc);
    const auto& cv = sc.convergecast;
    const InterferenceGraph est = working_estimate(sc, w, cv.estimate_from_bootstrap,
                                                   cv.tx_power_mw, sc.seeds[0]);
    ConvergecastOptions opts;
    opts.tx_power_mw = cv.tx_power_mw;
    opts.sinr_floor_db = cv.sinr_floor_db;
    opts.noise_floor_mw = dbm_to_mw(sc.capture.noise_floor_dbm);
    opts.capture = sc.capture;

    CsvFile trials_csv((out / "convergecast_trials.csv").string(),
                       {"scheme", "trial", "collected_fraction", "success"});
    CsvFile sum_csv((out / "convergecast_summary.csv").string(),
                    {"scheme", "trials", "success_prob", "mean_collected", "failed_trials",
                     "mean_collected_failed"});
    json schemes = json::array();
    for (ConvergecastScheme scheme :
         {ConvergecastScheme::Baseline, ConvergecastScheme::IgeBased}) {
        const std::string name = scheme == ConvergecastScheme::Baseline ? "baseline" : "ige";
        const ConvergecastResult r = simulate_convergecast(
            w.topo, w.truth, est, scheme, cv.channels, cv.trials, sc.seeds[0], opts);
        double collected_sum = 0.0, failed_sum = 0.0;
        long failed = 0;
        for (std::size_t t = 0; t < r.collected.size(); ++t) {
            const bool ok = r.collected[t] >= 1.0;
            trials_csv.row({name, csv_num(static_cast<long>(t)), csv_num(r.collected[t]),
                            csv_num(ok ? 1 : 0)});
            collected_sum += r.collected[t];
            if (!ok) {
                ++failed;
                failed_sum += r.collected[t];
            }
        }
        const double mean_failed = failed > 0 ? failed_sum / static_cast<double>(failed) : 1.0;
        sum_csv.row({name, csv_num(cv.trials), csv_num(r.success_prob),
                     csv_num(collected_sum / static_cast<double>(r.collected.size())),
                     csv_num(failed), csv_num(mean_failed)});
        json entry = {{"scheme", name},
                      {"success_prob", r.success_prob},
                      {"failed_trials", failed},
                      {"mean_collected_failed", mean_failed}};
        if (scheme == ConvergecastScheme::IgeBased) {
            json gs = json::array();
            for (std::size_t g = 0; g < r.groups.size(); ++g) {
                json members = json::array();
                for (const Link& l : r.groups[g].members)
                    members.push_back({{"sender", l.sender}, {"receiver", l.receiver}});
                gs.push_back({{"members", members},
                              {"channels", r.channel_sets[g]}});
            }
            entry["groups"] = gs;
        }
        schemes.push_back(entry);
    }
    trials_csv.close();
    sum_csv.close();
    summary["schemes"] = schemes;
}

// ---------------------------------------------------------------------- p2p

void run_p2p(const Scenario& sc, const fs::path& out, json& summary) {
    const World w = make_world(sc);
    const auto& pp = sc.p2p;
    const InterferenceGraph est = working_estimate(sc, w, pp.estimate_from_bootstrap,
                                                   pp.tx_power_mw, sc.seeds[0]);
    AfhOptions opts;
    opts.tx_power_mw = pp.tx_power_mw;
    opts.sinr_floor_db = pp.sinr_floor_db;
    opts.noise_floor_mw = dbm_to_mw(sc.capture.noise_floor_dbm);
    opts.capture = sc.capture;

    CsvFile pdr_csv((out / "p2p_pdr.csv").string(), {"scheme", "pair", "tx", "rx", "pdr"});
    CsvFile resets_csv((out / "p2p_resets.csv").string(), {"scheme", "pair", "round"});
    CsvFile trace_csv((out / "p2p_loss_trace.csv").string(),
                      {"scheme", "pair", "round", "cumulative_losses"});
    json schemes = json::array();
    for (AfhScheme scheme : {AfhScheme::Traditional, AfhScheme::IgeAssisted}) {
        const std::string name = scheme == AfhScheme::Traditional ? "traditional" : "ige";
        const P2pResult r = simulate_p2p_afh(w.truth, est, pp.pairs, scheme,
                                             pp.initial_map_size, pp.rounds, pp.thresholds,
                                             sc.seeds[0], opts);
        double worst = 1.0;
        for (std::size_t i = 0; i < r.pdr.size(); ++i) {
            pdr_csv.row({name, csv_num(static_cast<long>(i)), csv_num(pp.pairs[i].first),
                         csv_num(pp.pairs[i].second), csv_num(r.pdr[i])});
            worst = std::min(worst, r.pdr[i]);
        }
        for (const auto& [pair, round] : r.resets)
            resets_csv.row({name, csv_num(pair), csv_num(round)});
        for (std::size_t i = 0; i < r.loss_trace.size(); ++i)
            for (std::size_t round = 0; round < r.loss_trace[i].size(); ++round)
                trace_csv.row({name, csv_num(static_cast<long>(i)),
                               csv_num(static_cast<long>(round)),
                               csv_num(r.loss_trace[i][round])});
        schemes.push_back({{"scheme", name},
                           {"worst_pdr", worst},
                           {"resets", static_cast<long>(r.resets.size())}});
    }
    pdr_csv.close();
    resets_csv.close();
    trace_csv.close();
    summary["schemes"] = schemes;
}

// ------------------------------------------------------------------ overhead

void run_overhead(const Scenario& sc, const fs::path& out, json& summary) {
    const auto& ov = sc.overhead;
    const OverheadReport r = reporting_overhead(ov.n_s, ov.n_r, ov.b, ov.hop_sizes);
    std::printf("O_our=%ld, O_other=%ld, T_our=%ld, T_other=%ld\n", r.o_our_bits,
                r.o_other_bits, r.t_our_slots, r.t_other_slots);
    CsvFile csv((out / "overhead.csv").string(),
                {"n_s", "n_r", "b", "o_our_bits", "o_other_bits", "t_our_slots",
                 "t_other_slots"});
    csv.row({csv_num(ov.n_s), csv_num(ov.n_r), csv_num(ov.b), csv_num(r.o_our_bits),
             csv_num(r.o_other_bits), csv_num(r.t_our_slots), csv_num(r.t_other_slots)});
    csv.close();
    summary["o_our_bits"] = r.o_our_bits;
    summary["o_other_bits"] = r.o_other_bits;
    summary["t_our_slots"] = r.t_our_slots;
    summary["t_other_slots"] = r.t_other_slots;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"simulator and solver suite for power-domain interference-graph "
                 "estimation in concurrent-flooding networks"};
    app.require_subcommand(1);

    std::string scenario_path;
    std::string out_dir = "out";
    std::vector<std::string> overrides;
    long long seed_flag = -1;
    long long trials_flag = -1;

    const std::vector<std::string> names = {"linearity", "estimate",     "flood",   "sweep-dp",
                                            "convergecast", "p2p", "overhead"};
    for (const std::string& name : names) {
        CLI::App* sub = app.add_subcommand(name);
        sub->add_option("--scenario", scenario_path, "scenario or manifest JSON file");
        sub->add_option("--out", out_dir, "output directory")->capture_default_str();
        sub->add_option("--set", overrides, "override, dotted.path=value (repeatable)");
        sub->add_option("--seed", seed_flag, "replace the scenario seed list");
        sub->add_option("--trials", trials_flag, "replace the trial/round count");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n";
        return 2;
    }
    const std::string sub = app.get_subcommands().front()->get_name();

    try {
        json file_json = json::object();
        if (!scenario_path.empty()) file_json = load_json_file(scenario_path);
        json resolved = resolve_scenario(file_json, overrides);
        if (seed_flag >= 0)
            resolved["seeds"] = json::array({static_cast<std::uint64_t>(seed_flag)});
        if (trials_flag >= 0) {
            if (sub == "linearity") resolved["linearity"]["trials"] = trials_flag;
            if (sub == "estimate") resolved["estimate"]["count"] = trials_flag;
            if (sub == "flood") resolved["flood"]["rounds"] = trials_flag;
            if (sub == "sweep-dp") resolved["sweep_dp"]["processes"] = trials_flag;
            if (sub == "convergecast") resolved["convergecast"]["trials"] = trials_flag;
            if (sub == "p2p") resolved["p2p"]["rounds"] = trials_flag;
        }
        const Scenario sc = parse_scenario(resolved);

        const fs::path out(out_dir);
        std::error_code ec;
        fs::create_directories(out, ec);
        if (ec) throw IoError("cannot create output directory: " + out.string());
        write_text(out / "manifest.json", make_manifest(sub, resolved).dump(2) + "\n");

        json summary;
        summary["subcommand"] = sub;
        summary["scenario_name"] = sc.name;
        if (sub == "linearity") run_linearity(sc, out, summary);
        else if (sub == "estimate") run_estimate(sc, out, summary);
        else if (sub == "flood") run_flood(sc, out, summary);
        else if (sub == "sweep-dp") run_sweep_dp(sc, out, summary);
        else if (sub == "convergecast") run_convergecast(sc, out, summary);
        else if (sub == "p2p") run_p2p(sc, out, summary);
        else if (sub == "overhead") run_overhead(sc, out, summary);
        write_text(out / "summary.json", summary.dump(2) + "\n");
    } catch (const IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return 4;
    } catch (const json::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 3;
    } catch (const InvalidInput& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
