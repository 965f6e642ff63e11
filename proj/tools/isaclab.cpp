// isaclab: batch experiments for the squint-aware ISAC precoding lab.

#include <filesystem>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "isac/experiment.hpp"

namespace fs = std::filesystem;
using namespace isac;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitInfeasible = 3;

std::vector<double> parse_range(const std::string& s)
{
    // lo:hi:step, or a single value
    std::vector<double> parts;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ':')) {
        try {
            std::size_t used = 0;
            parts.push_back(std::stod(tok, &used));
            if (used != tok.size()) {
                throw std::invalid_argument(tok);
            }
        } catch (const std::exception&) {
            throw ConfigError("bad number '" + tok + "' in range '" + s + "'");
        }
    }
    if (parts.size() == 1) {
        return parts;
    }
    if (parts.size() != 3 || !(parts[2] > 0.0) || parts[1] < parts[0]) {
        throw ConfigError("range must be lo:hi:step with step > 0 and hi >= lo");
    }
    std::vector<double> out;
    const long n = std::lround(std::floor((parts[1] - parts[0]) / parts[2] + 1e-9));
    for (long i = 0; i <= n; ++i) {
        out.push_back(parts[0] + static_cast<double>(i) * parts[2]);
    }
    return out;
}

std::vector<double> parse_list(const std::string& s)
{
    std::vector<double> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(tok, &used));
            if (used != tok.size()) {
                throw std::invalid_argument(tok);
            }
        } catch (const std::exception&) {
            throw ConfigError("bad number '" + tok + "' in list '" + s + "'");
        }
    }
    if (out.empty()) {
        throw ConfigError("empty list");
    }
    return out;
}

std::vector<std::string> parse_names(const std::string& s)
{
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (!tok.empty()) {
            out.push_back(tok);
        }
    }
    return out;
}

struct Common {
    std::string config;
    std::string profile;
    int seeds = -1;
    long long base_seed = -1;
    std::string out;
    std::string schemes;
    std::string snr;
    std::string msia;
    int threads = -1;
    double eta = -1.0;
    double gamma = -1.0;
};

void add_common(CLI::App* app, Common& c)
{
    app->add_option("--config", c.config, "JSON experiment config");
    app->add_option("--profile", c.profile, "desk or full system profile");
    app->add_option("--seeds", c.seeds, "trials per grid cell");
    app->add_option("--base-seed", c.base_seed, "base seed");
    app->add_option("--out", c.out, "output directory");
    app->add_option("--schemes", c.schemes, "comma-separated scheme names");
    app->add_option("--snr-db", c.snr, "SNR grid lo:hi:step (dB)");
    app->add_option("--msia", c.msia, "comma-separated MSIA values (rad)");
    app->add_option("--threads", c.threads, "worker threads");
    app->add_option("--eta", c.eta, "sensing weight in the phase update");
    app->add_option("--gamma", c.gamma, "per-subcarrier SNR threshold (linear)");
}

ExperimentSpec build_spec(const Common& c, ExperimentSpec base)
{
    ExperimentSpec s = std::move(base);
    if (!c.config.empty()) {
        try {
            s = spec_from_json(read_json_file(c.config), s);
        } catch (const FormatError& e) {
            throw ConfigError(e.what());
        }
    }
    if (c.profile == "desk") {
        s.cfg = SystemConfig::desk_profile();
    } else if (c.profile == "full") {
        s.cfg = SystemConfig::full_profile();
    } else if (!c.profile.empty()) {
        throw ConfigError("--profile must be desk or full");
    }
    if (c.seeds >= 0) s.n_seeds = c.seeds;
    if (c.base_seed >= 0) s.base_seed = static_cast<std::uint64_t>(c.base_seed);
    if (!c.out.empty()) s.out_dir = c.out;
    if (!c.schemes.empty()) s.schemes = parse_names(c.schemes);
    if (!c.snr.empty()) s.snr_db = parse_range(c.snr);
    if (!c.msia.empty()) s.msia = parse_list(c.msia);
    if (c.threads >= 0) s.threads = c.threads;
    if (c.eta >= 0.0) s.opt.eta = c.eta;
    if (c.gamma >= 0.0) s.opt.gamma = c.gamma;
    s.validate();
    return s;
}

std::string out_path(const ExperimentSpec& s, const std::string& name)
{
    fs::create_directories(s.out_dir);
    return (fs::path(s.out_dir) / name).string();
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Squint-aware ISAC hybrid precoding lab"};
    app.require_subcommand(1);

    Common sweep_c, pareto_c, verify_c, export_c;
    auto* sweep = app.add_subcommand("sweep", "rate/CRB/correlation over SNR x MSIA x seeds");
    add_common(sweep, sweep_c);
    auto* pareto = app.add_subcommand("pareto", "trace (eta, Gamma) boundaries and rho");
    add_common(pareto, pareto_c);
    auto* verify = app.add_subcommand("verify", "closed-form Proposition 1 check");
    add_common(verify, verify_c);
    std::string offsets;
    double theory_gamma = -1.0;
    verify->add_option("--offsets", offsets, "comma-separated angular offsets (rad)");
    verify->add_option("--theory-gamma", theory_gamma, "trade-off weight in Lambda");
    auto* exp = app.add_subcommand("export", "write a dataset with loss normalizers");
    add_common(exp, export_c);
    auto* eval = app.add_subcommand("eval-state", "score serialized precoder states");
    std::string dataset_path, states_path, eval_out;
    eval->add_option("--dataset", dataset_path, "dataset JSON")->required();
    eval->add_option("--states", states_path, "state JSON (one state or {\"states\": [...]})")
        ->required();
    eval->add_option("--out", eval_out, "CSV output file (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitConfig;
    }

    try {
        if (*sweep) {
            const ExperimentSpec s = build_spec(sweep_c, {});
            write_text_file(out_path(s, "sweep.csv"), sweep_csv(run_sweep(s)));
        } else if (*pareto) {
            ExperimentSpec base;
            base.schemes = {"sa-opt", "cbs", "no-ttd"};
            const ExperimentSpec s = build_spec(pareto_c, base);
            const auto regions = run_pareto(s);
            write_text_file(out_path(s, "boundary.csv"), boundary_csv(regions));
            write_text_file(out_path(s, "regions.json"), region_json(regions).dump(2) + "\n");
        } else if (*verify) {
            ExperimentSpec base;
            base.cfg.num_targets = 1;
            base.n_seeds = 50;
            ExperimentSpec s = build_spec(verify_c, base);
            if (!offsets.empty()) s.offsets = parse_list(offsets);
            if (theory_gamma >= 0.0) s.theory_gamma = theory_gamma;
            s.validate();
            const Prop1Report rep = run_verify(s);
            write_text_file(out_path(s, "verify.json"), report_json(rep).dump(2) + "\n");
            std::cout << (rep.pass ? "PASS" : "FAIL") << " spearman cor/rate "
                      << rep.spearman_cor_rate << " cor/inv-crb " << rep.spearman_cor_inv_crb
                      << "\n";
        } else if (*exp) {
            const ExperimentSpec s = build_spec(export_c, {});
            export_dataset(run_export(s), out_path(s, "dataset.json"));
        } else if (*eval) {
            const Dataset d = import_dataset(dataset_path);
            const std::string csv = scores_csv(eval_states(d, read_json_file(states_path)));
            if (eval_out.empty()) {
                std::cout << csv;
            } else {
                write_text_file(eval_out, csv);
            }
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const FormatError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const Infeasible& e) {
        std::cerr << "infeasible: " << e.what() << "\n";
        return kExitInfeasible;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
