#include <cstdio>
#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include <pinrenew/experiments.hpp>

namespace {

using pinrenew::Config;

std::string render(double v) { return pinrenew::format_g17(v); }
std::string render(std::size_t v) { return std::to_string(v); }
std::string render(const std::string& v) { return v; }

template <typename T>
std::string render(const std::vector<T>& v) {
    if (v.size() == 1) return render(v[0]);
    std::string out = "[";
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ", ";
        out += render(v[i]);
    }
    return out + "]";
}

// Each given flag folds into the config after any law file, so flags win and
// the report echoes one flat record of the whole invocation.
struct SubSpec {
    CLI::App* sub = nullptr;
    std::string law_file;
    std::vector<std::function<void(Config&)>> folds;
    std::function<std::string()> experiment;
};

template <typename T>
void opt(SubSpec& ss, const std::string& flag, const std::string& key,
         const std::string& help) {
    auto val = std::make_shared<T>();
    CLI::Option* o = ss.sub->add_option(flag, *val, help);
    if constexpr (std::is_same_v<T, std::vector<double>> ||
                  std::is_same_v<T, std::vector<std::size_t>>)
        o->delimiter(',');
    ss.folds.push_back([o, val, key](Config& c) {
        if (o->count()) c.set(key, render(*val));
    });
}

void flg(SubSpec& ss, const std::string& flag, const std::string& key,
         const std::string& help) {
    auto val = std::make_shared<bool>(false);
    CLI::Option* o = ss.sub->add_flag(flag, *val, help);
    ss.folds.push_back([o, val, key](Config& c) {
        if (o->count()) c.set(key, *val ? "true" : "false");
    });
}

void add_law_opts(SubSpec& ss) {
    ss.sub->add_option("--law", ss.law_file, "law config file (key = value lines)");
    opt<double>(ss, "--alpha", "alpha", "power-law tail exponent");
    opt<std::string>(ss, "--L-kind", "L.kind", "slow variation kind (constant, log-power)");
    opt<double>(ss, "--L-gamma", "L.gamma", "log-power exponent");
    opt<double>(ss, "--L-c", "L.c", "slow variation constant");
    opt<std::size_t>(ss, "--n-max", "n_max", "power-law cache horizon");
    opt<double>(ss, "--tail-tol", "tail_tol", "certified tail tolerance of the norm");
    opt<std::vector<double>>(ss, "--table", "table", "table law weights");
    opt<double>(ss, "--geo-ratio", "geo_ratio", "geometric tail ratio of a table law");
    opt<double>(ss, "--b", "b", "exponential tilt");
}

int run(const Config& cfg, const std::string& out_dir, bool json_stdout) {
    pinrenew::ExperimentReport rep = pinrenew::run_experiment(cfg);
    std::filesystem::create_directories(out_dir);
    for (const auto& t : rep.csv)
        pinrenew::write_text_file(out_dir + "/" + t.name, t.text());
    std::string jtext = rep.to_json().dump(2) + "\n";
    pinrenew::write_text_file(out_dir + "/" + rep.experiment + ".json", jtext);

    if (json_stdout) {
        std::fputs(jtext.c_str(), stdout);
    } else {
        std::printf("experiment %s: %.2fs, outputs in %s\n", rep.experiment.c_str(),
                    rep.wall_seconds, out_dir.c_str());
        for (const auto& r : rep.results) {
            if (r.tag == "monte-carlo")
                std::printf("  %s = %.17g +/- %.17g [%s]\n", r.name.c_str(), r.value, r.se,
                            r.tag.c_str());
            else
                std::printf("  %s = %.17g [%s]\n", r.name.c_str(), r.value, r.tag.c_str());
        }
        for (const auto& [name, ok] : rep.asserted)
            std::printf("  %s %s\n", ok ? "PASS" : "FAIL", name.c_str());
    }
    return rep.asserted_ok() ? 0 : 3;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"renewal pinning models: laws, free energies, intersections, replicas,"
                 " quenched Monte Carlo"};
    // '--h' is a model parameter, so help lives on the long flag only.
    app.set_help_flag("--help", "print help and exit");
    app.require_subcommand(1);

    std::string out_dir = ".";
    std::uint64_t seed = 1;
    std::size_t threads = 1;
    bool json_stdout = false;
    app.add_option("--out", out_dir, "output directory for CSV and JSON files");
    CLI::Option* o_seed = app.add_option("--seed", seed, "base seed of the disorder stream");
    CLI::Option* o_threads = app.add_option("--threads", threads, "worker thread count");
    app.add_flag("--json", json_stdout, "print the full JSON report to stdout");

    std::vector<std::unique_ptr<SubSpec>> specs;
    auto make = [&](const std::string& name, const std::string& help) -> SubSpec& {
        auto ss = std::make_unique<SubSpec>();
        ss->sub = app.add_subcommand(name, help);
        ss->sub->set_help_flag("--help", "print help and exit");
        ss->sub->fallthrough();
        std::string fixed = name;
        ss->experiment = [fixed] { return fixed; };
        specs.push_back(std::move(ss));
        return *specs.back();
    };

    SubSpec& sc_law = make("law", "tabulate the inter-arrival law and its mass");
    add_law_opts(sc_law);
    opt<std::size_t>(sc_law, "--n", "n", "number of weights to emit");

    SubSpec& sc_renewal = make("renewal", "renewal table with defining-equation residuals");
    add_law_opts(sc_renewal);
    opt<std::size_t>(sc_renewal, "--n", "n", "horizon");
    flg(sc_renewal, "--accel", "accel", "transform-accelerated evaluation");

    SubSpec& sc_fe = make("fe", "free energy across pinning strengths");
    add_law_opts(sc_fe);
    opt<std::vector<double>>(sc_fe, "--h", "h", "pinning strengths");
    opt<double>(sc_fe, "--tol", "tol", "solver tolerance");

    SubSpec& sc_intersect = make("intersect", "intersection law build and its checks");
    add_law_opts(sc_intersect);
    opt<std::size_t>(sc_intersect, "--n", "n", "deconvolution horizon");
    opt<std::size_t>(sc_intersect, "--precision-start", "precision_start",
                     "starting mantissa bits");
    opt<double>(sc_intersect, "--target-rel-err", "target_rel_err",
                "target relative error of the deconvolution");
    auto check_name = std::make_shared<std::string>();
    sc_intersect.sub
        ->add_option("--check", *check_name,
                     "run a named check instead of the plain build")
        ->check(CLI::IsMember({"prop57", "prop58", "plancherel"}));
    sc_intersect.experiment = [check_name] {
        return check_name->empty() ? std::string("intersect") : *check_name;
    };

    SubSpec& sc_replica = make("replica", "two-replica free energy along a lambda list");
    add_law_opts(sc_replica);
    opt<std::vector<double>>(sc_replica, "--lambda", "lambda", "replica couplings");
    opt<double>(sc_replica, "--tol", "tol", "solver tolerance");
    flg(sc_replica, "--constants", "constants", "evaluate the sandwich bounds");
    opt<double>(sc_replica, "--c", "c", "tilt ceiling for the constants");
    opt<double>(sc_replica, "--eps", "eps", "sandwich margin");

    SubSpec& sc_quench = make("quench", "quenched Monte Carlo estimates and experiments");
    add_law_opts(sc_quench);
    opt<double>(sc_quench, "--beta", "beta", "disorder strength");
    opt<double>(sc_quench, "--h", "h", "pinning strength");
    opt<std::vector<std::size_t>>(sc_quench, "--n", "n", "horizon, or horizon list");
    opt<std::size_t>(sc_quench, "--samples", "samples", "disorder samples");
    opt<std::vector<double>>(sc_quench, "--Delta", "Delta",
                             "distances from the annealed critical point");
    opt<std::vector<double>>(sc_quench, "--M", "M", "interpolation parameters");
    opt<double>(sc_quench, "--eps", "eps", "gap concentration band half-width");
    opt<double>(sc_quench, "--eps-explicit", "eps_explicit",
                "margin of the explicit lower bound");
    opt<double>(sc_quench, "--ceiling", "ceiling", "contact moment ratio ceiling");
    auto quench_exp = std::make_shared<std::string>("quench");
    sc_quench.sub
        ->add_option("--experiment", *quench_exp, "named experiment on top of the estimator")
        ->check(CLI::IsMember({"quench", "theorem23", "prop26", "prop27", "gaps", "interp"}));
    sc_quench.experiment = [quench_exp] { return *quench_exp; };

    SubSpec& sc_file = make("experiment", "run an experiment described by a config file");
    std::string cfg_path;
    sc_file.sub->add_option("config", cfg_path, "config file with an 'experiment' key")
        ->required();

    try {
        app.parse(argc, argv);

        SubSpec* active = nullptr;
        for (auto& ss : specs)
            if (app.got_subcommand(ss->sub)) active = ss.get();

        Config cfg;
        if (active == &sc_file) {
            cfg = pinrenew::parse_config_file(cfg_path);
        } else {
            if (!active->law_file.empty())
                cfg = pinrenew::parse_config_file(active->law_file);
            else
                cfg.source = "<flags>";
            for (const auto& fold : active->folds) fold(cfg);
            cfg.set("experiment", active->experiment());
        }
        if (o_seed->count()) cfg.set("seed", std::to_string(seed));
        if (o_threads->count()) cfg.set("threads", std::to_string(threads));

        return run(cfg, out_dir, json_stdout);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    } catch (const pinrenew::error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return pinrenew::exit_status_for(e.code());
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
