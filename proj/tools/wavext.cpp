#include <cstdlib>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "wavext/cli.hpp"

using namespace wavext;
using cli::RunConfig;

int main(int argc, char** argv)
{
    CLI::App app{"Wavelet extension frame approximation on subdomains of the unit box"};
    app.require_subcommand(1);

    RunConfig c;
    std::string config_path;
    bool json_out = false, csv_out = false;

    const char* commands[] = {"approximate", "convergence", "timing", "indexsets", "duals", "filters", "cascade", "dwt-norms"};
    for (const char* name : commands) {
        CLI::App* sub = app.add_subcommand(name);
        sub->add_option("--config", config_path, "JSON run configuration; command-line flags override it");
        sub->add_option("--family", c.family, "dbP, cdfPQ, cdf(P,Q), haar, or db/cdf with --p/--pdual");
        sub->add_option("--p", c.p);
        sub->add_option("--pdual", c.p_dual);
        sub->add_option("--N", c.N, "coefficients per dimension (one value or one per dimension)");
        sub->add_option("--q", c.q, "oversampling factor per dimension");
        sub->add_option("--domain", c.domain, "interval:a,b | disk:cx,cy,r | ball:c...,r | box:lo...,hi... | full:d | expr:d:<predicate>");
        sub->add_option("--function", c.function, "exp1d | exp2d | exp3d | expression in x, y, z");
        sub->add_option("--solver", c.solver)->check(CLI::IsMember(cli::solver_names()));
        sub->add_option("--variant", c.variant, "pipeline used by smoothed/adaptive")->check(CLI::IsMember({"az", "reduced", "sparse"}));
        sub->add_option("--tol", c.tol);
        sub->add_option("--seed", c.seed, "RNG seed (default from WAVEXT_SEED, else 0)");
        sub->add_option("--sweep", c.sweep, "N values for sweeps");
        sub->add_option("--repetitions", c.repetitions);
        sub->add_option("--weight-factor", c.weight_factor);
        sub->add_option("--levels", c.levels);
        sub->add_option("--J", c.J);
        sub->add_option("--output,-o", c.output);
        sub->add_option("--samples", c.samples, "CSV file for approximant samples on the full grid");
        sub->add_option("--coefficients", c.coefficients, "CSV file for the coefficient vector");
        sub->add_flag("--json", json_out);
        sub->add_flag("--csv", csv_out);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        CLI::App* sub = app.get_subcommands().front();
        if (!config_path.empty()) {
            std::ifstream f(config_path);
            if (!f) throw ConfigError("cannot read config '" + config_path + "'");
            cli::json j;
            try {
                f >> j;
            } catch (const cli::json::exception& e) {
                throw ConfigError(std::string("config is not valid JSON: ") + e.what());
            }
            // flags given on the command line win over the file
            RunConfig file = RunConfig::from_json(j);
            auto merge = [&](auto RunConfig::*field, const char* flag) {
                if (sub->count(flag) == 0) c.*field = file.*field;
            };
            merge(&RunConfig::family, "--family");
            merge(&RunConfig::p, "--p");
            merge(&RunConfig::p_dual, "--pdual");
            merge(&RunConfig::N, "--N");
            merge(&RunConfig::q, "--q");
            merge(&RunConfig::domain, "--domain");
            merge(&RunConfig::function, "--function");
            merge(&RunConfig::solver, "--solver");
            merge(&RunConfig::variant, "--variant");
            merge(&RunConfig::tol, "--tol");
            merge(&RunConfig::seed, "--seed");
            merge(&RunConfig::sweep, "--sweep");
            merge(&RunConfig::repetitions, "--repetitions");
            merge(&RunConfig::weight_factor, "--weight-factor");
            merge(&RunConfig::levels, "--levels");
            merge(&RunConfig::J, "--J");
            merge(&RunConfig::output, "--output");
            merge(&RunConfig::samples, "--samples");
            merge(&RunConfig::coefficients, "--coefficients");
            c.format = file.format;
        }
        c.command = sub->get_name();
        if (json_out && csv_out) throw ConfigError("--json and --csv are exclusive");
        if (json_out) c.format = "json";
        if (csv_out) c.format = "csv";
        if (sub->count("--seed") == 0) {
            if (const char* env = std::getenv("WAVEXT_SEED")) {
                try {
                    c.seed = std::stoull(env);
                } catch (const std::exception&) {
                    throw ConfigError(std::string("WAVEXT_SEED is not an unsigned integer: ") + env);
                }
            }
        }

        if (c.output.empty()) {
            cli::run_command(c, std::cout);
        } else {
            std::ofstream out(c.output);
            if (!out) throw Error("cannot open '" + c.output + "' for writing");
            cli::run_command(c, out);
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
