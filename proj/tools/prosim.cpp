// prosim: simulate pronoun/name selection in speaker communities, fit the
// model to event logs, and run the capability scenarios.
//
// Exit codes: 0 success, 2 validation error, 3 I/O error.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "prosim/community.hpp"
#include "prosim/error.hpp"
#include "prosim/inference.hpp"
#include "prosim/scenarios.hpp"
#include "prosim/snapshot.hpp"

namespace {

using namespace prosim;

CommunityConfig default_simulate_config() {
    CommunityConfig cfg;
    for (int i = 0; i < 3; ++i)
        cfg.members.push_back({"m" + std::to_string(i), SpeakerProfile::flexible()});
    for (int i = 3; i < 6; ++i)
        cfg.members.push_back({"m" + std::to_string(i), SpeakerProfile::rigid()});
    return cfg;
}

std::vector<Intervention> parse_interventions(const std::vector<std::string>& specs) {
    // "step:member:form=weight[,form=weight...]"
    std::vector<Intervention> out;
    for (const auto& s : specs) {
        const auto c1 = s.find(':');
        const auto c2 = s.find(':', c1 == std::string::npos ? c1 : c1 + 1);
        if (c1 == std::string::npos || c2 == std::string::npos)
            throw ValidationError("bad --declare-at \"" + s + "\" (want step:member:form=w,...)");
        Intervention iv;
        iv.step = std::stoull(s.substr(0, c1));
        iv.declarer = static_cast<MemberId>(std::stoul(s.substr(c1 + 1, c2 - c1 - 1)));
        std::string rest = s.substr(c2 + 1);
        std::size_t start = 0;
        while (start <= rest.size()) {
            auto comma = rest.find(',', start);
            const std::string item =
                rest.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
            const auto eq = item.find('=');
            if (item.empty())
                throw ValidationError("bad --declare-at item in \"" + s + "\"");
            if (eq == std::string::npos)
                iv.declared.emplace_back(parse_form_spec(item), 1.0);
            else
                iv.declared.emplace_back(parse_form_spec(item.substr(0, eq)),
                                         std::stod(item.substr(eq + 1)));
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        out.push_back(std::move(iv));
    }
    return out;
}

int run_simulate(const std::optional<std::string>& config, std::optional<std::uint64_t> seed,
                 std::uint64_t steps, const std::optional<std::string>& resume,
                 const std::optional<std::string>& out_log,
                 const std::optional<std::string>& out_snapshot,
                 const std::vector<std::string>& declare_specs) {
    CommunityState c = [&] {
        if (resume) {
            if (config) throw ValidationError("--resume and --config are mutually exclusive");
            if (seed) throw ValidationError("--resume and --seed are mutually exclusive");
            return snapshot_load(*resume);
        }
        CommunityConfig cfg = config ? community_config_from_file(*config)
                                     : default_simulate_config();
        if (seed) cfg.seed = *seed;
        return new_community(std::move(cfg));
    }();

    const std::size_t log_start = c.log.size();
    community_run(c, steps, parse_interventions(declare_specs));
    community_audit(c);

    if (out_log) {
        std::vector<LogEntry> fresh(c.log.begin() + static_cast<std::ptrdiff_t>(log_start),
                                    c.log.end());
        event_log_save(fresh, *out_log);
    }
    if (out_snapshot) snapshot_save(c, *out_snapshot);
    std::printf("simulated %llu steps: %zu log entries, clock %llu\n",
                static_cast<unsigned long long>(steps), c.log.size() - log_start,
                static_cast<unsigned long long>(c.clock));
    return 0;
}

int run_fit(const std::string& log_path, const std::optional<std::string>& config,
            std::optional<std::uint64_t> seed, std::optional<std::uint32_t> sweeps,
            std::optional<std::uint32_t> burn_in, std::optional<std::uint32_t> thin,
            bool single_speaker, const std::optional<std::string>& out) {
    FitConfig cfg = config ? fit_config_from_file(*config) : FitConfig{};
    if (seed) cfg.seed = *seed;
    if (sweeps) cfg.sweeps = *sweeps;
    if (burn_in) cfg.burn_in = *burn_in;
    if (thin) cfg.thin = *thin;
    if (single_speaker) cfg.community_mode = false;
    const auto log = event_log_load(log_path);
    FitResult fit = fit_gibbs(log, cfg);
    const std::string doc = fit_result_to_string(fit);
    if (out)
        write_text_file(*out, doc);
    else
        std::fputs(doc.c_str(), stdout);
    std::fprintf(stderr, "fit: %u samples over %u sweeps, %zu pairs\n", fit.samples, cfg.sweeps,
                 fit.pairs.size());
    return 0;
}

int run_predict(const std::string& fit_path, MemberId speaker, MemberId referent,
                const std::optional<std::string>& out) {
    const FitResult fit = fit_result_load(fit_path);
    const Predictive pred = predict_next(fit, speaker, referent);
    nlohmann::ordered_json j;
    j["speaker"] = speaker;
    j["referent"] = referent;
    nlohmann::ordered_json table = nlohmann::ordered_json::array();
    for (const auto& [f, p] : pred.explicit_mass) table.push_back({f.spec(), p});
    j["table"] = std::move(table);
    j["residual"] = pred.residual;
    const std::string doc = j.dump(2) + "\n";
    if (out)
        write_text_file(*out, doc);
    else
        std::fputs(doc.c_str(), stdout);
    return 0;
}

int run_eval(const std::string& fit_path, const std::string& heldout_path,
             const std::optional<std::string>& out) {
    const FitResult fit = fit_result_load(fit_path);
    const auto heldout = event_log_load(heldout_path);
    const double loss = heldout_log_loss(fit, heldout);
    const std::string line = "heldout_log_loss " + format_double(loss) + "\n";
    if (out)
        write_text_file(*out, line);
    else
        std::fputs(line.c_str(), stdout);
    return 0;
}

int run_scenario_cmd(const std::string& name, const std::optional<std::string>& config,
                     std::optional<std::uint64_t> seed, std::optional<std::uint32_t> replicates,
                     const std::optional<std::string>& out) {
    Scenario sc = load_scenario(name, config ? std::optional<std::filesystem::path>(*config)
                                             : std::nullopt);
    if (seed) sc.base_seed = *seed;
    if (replicates) sc.replicates = *replicates;
    const MetricsTable table = run_scenario(sc);
    const std::string csv = metrics_to_csv(table);
    if (out)
        write_text_file(*out, csv);
    else
        std::fputs(csv.c_str(), stdout);
    std::fprintf(stderr, "scenario %s: %zu metric rows\n", name.c_str(), table.rows.size());
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Bayesian nonparametric simulation of pronoun and name selection"};
    app.require_subcommand(1);

    // simulate
    auto* sim = app.add_subcommand("simulate", "run a community and write its log/snapshot");
    std::optional<std::string> sim_config, sim_resume, sim_log, sim_snapshot;
    std::optional<std::uint64_t> sim_seed;
    std::uint64_t sim_steps = 100;
    std::vector<std::string> sim_declares;
    sim->add_option("--config", sim_config, "community config (JSON)");
    sim->add_option("--seed", sim_seed, "override the config seed");
    sim->add_option("--steps", sim_steps, "steps to simulate")->required();
    sim->add_option("--resume", sim_resume, "resume from a snapshot instead of a config");
    sim->add_option("--out-log", sim_log, "write the event log produced by this invocation");
    sim->add_option("--out-snapshot", sim_snapshot, "write the final state snapshot");
    sim->add_option("--declare-at", sim_declares,
                    "inject a declaration: step:member:form=w[,form=w...] (repeatable)");

    // fit
    auto* fit = app.add_subcommand("fit", "fit the hierarchy to an event log (collapsed Gibbs)");
    std::string fit_log;
    std::optional<std::string> fit_config, fit_out;
    std::optional<std::uint64_t> fit_seed;
    std::optional<std::uint32_t> fit_sweeps, fit_burn, fit_thin;
    bool fit_single = false;
    fit->add_option("--log", fit_log, "event log to fit")->required();
    fit->add_option("--config", fit_config, "fit config (JSON)");
    fit->add_option("--seed", fit_seed, "chain seed");
    fit->add_option("--sweeps", fit_sweeps, "Gibbs sweeps");
    fit->add_option("--burn-in", fit_burn, "burn-in sweeps");
    fit->add_option("--thin", fit_thin, "thinning interval");
    fit->add_flag("--single-speaker", fit_single, "no community level in the fitted hierarchy");
    fit->add_option("--out", fit_out, "fit document destination (stdout otherwise)");

    // predict
    auto* pred = app.add_subcommand("predict", "read out an averaged predictive");
    std::string pred_fit;
    MemberId pred_speaker = 0, pred_referent = 0;
    std::optional<std::string> pred_out;
    pred->add_option("--fit", pred_fit, "fit document")->required();
    pred->add_option("--speaker", pred_speaker, "speaker id")->required();
    pred->add_option("--referent", pred_referent, "referent id")->required();
    pred->add_option("--out", pred_out, "destination (stdout otherwise)");

    // eval
    auto* ev = app.add_subcommand("eval", "held-out log loss of a fit");
    std::string ev_fit, ev_heldout;
    std::optional<std::string> ev_out;
    ev->add_option("--fit", ev_fit, "fit document")->required();
    ev->add_option("--heldout", ev_heldout, "held-out event log")->required();
    ev->add_option("--out", ev_out, "destination (stdout otherwise)");

    // scenario
    auto* sce = app.add_subcommand("scenario", "run a capability scenario, emit metrics CSV");
    std::string sce_name;
    std::optional<std::string> sce_config, sce_out;
    std::optional<std::uint64_t> sce_seed;
    std::optional<std::uint32_t> sce_replicates;
    sce->add_option("--name", sce_name,
                    "E1-novel-form | E2-mixture | E3-revision | E4-community-contrast")
        ->required();
    sce->add_option("--config", sce_config, "scenario config (JSON), overrides the preset");
    sce->add_option("--seed", sce_seed, "base seed");
    sce->add_option("--replicates", sce_replicates, "replicate count");
    sce->add_option("--out", sce_out, "CSV destination (stdout otherwise)");

    try {
        app.parse(argc, argv);
        if (sim->parsed())
            return run_simulate(sim_config, sim_seed, sim_steps, sim_resume, sim_log,
                                sim_snapshot, sim_declares);
        if (fit->parsed())
            return run_fit(fit_log, fit_config, fit_seed, fit_sweeps, fit_burn, fit_thin,
                           fit_single, fit_out);
        if (pred->parsed()) return run_predict(pred_fit, pred_speaker, pred_referent, pred_out);
        if (ev->parsed()) return run_eval(ev_fit, ev_heldout, ev_out);
        if (sce->parsed())
            return run_scenario_cmd(sce_name, sce_config, sce_seed, sce_replicates, sce_out);
        return 0;
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    } catch (const IoError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    } catch (const ValidationError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const Error& e) {
        std::fprintf(stderr, "internal error: %s\n", e.what());
        return 1;
    }
}
