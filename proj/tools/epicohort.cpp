#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "epicohort/cli.hpp"

using namespace epicohort;

namespace {

void add_common(CLI::App& cmd, RunConfig& config, std::string& schema, std::string& encoding) {
    cmd.add_option("--schema", schema, "Schema profile YAML (default: built-in DGE 2020 profile)");
    cmd.add_option("--encoding", encoding, "Input encoding: auto, utf8 or latin1")
        ->check(CLI::IsMember({"auto", "utf8", "latin1"}));
    cmd.add_option("--error-cap", config.error_cap, "Number of row errors listed in reports");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Cohort tables and case-fatality rates from line-list surveillance data"};
    app.set_config("--config", "", "Run configuration file (TOML/INI); command-line flags win");
    app.require_subcommand(1);

    RunConfig config;
    std::string schema, encoding, out, kinds = "all", formats = "csv,json", states, window, basis = "reporting";
    std::string boundaries, spec, fixture;
    std::uint64_t seed = 0, rows = 0;

    auto* validate = app.add_subcommand("validate", "Check a dataset against the schema and count rejected rows");
    validate->add_option("--input", config.input, "Dataset CSV")->required();
    validate->add_option("--out", out, "Directory for validation.json (default: JSON to stdout)");
    add_common(*validate, config, schema, encoding);

    auto* report = app.add_subcommand("report", "Build cohort tables and fatality rates");
    report->add_option("--input", config.input, "Dataset CSV")->required();
    report->add_option("--out", out, "Output directory")->required();
    report->add_option("--kinds", kinds, "Comma-separated table kinds, or 'all'");
    report->add_option("--formats", formats, "Comma-separated output formats (csv, json)");
    report->add_flag("--indigenous-only", config.filter.indigenous_only, "Restrict to indigenous-language speakers");
    report->add_option("--states", states, "Comma-separated state codes to keep");
    report->add_option("--window", window, "Symptom-onset window START:END (YYYY-MM-DD)");
    report->add_option("--region-basis", basis, "State attribution: reporting or residence")
        ->check(CLI::IsMember({"reporting", "residence"}));
    report->add_option("--boundaries", boundaries, "State boundaries GeoJSON for the choropleth join");
    report->add_option("--join-key", config.join_key, "Boundary property holding the state code");
    report->add_flag("--municipal-rates", config.municipal_rates, "Also write fatality_by_municipality.csv");
    report->add_option("--workers", config.workers, "Worker threads")->check(CLI::Range(1u, 256u));
    report->add_flag("--quiet", config.quiet, "No progress output");
    add_common(*report, config, schema, encoding);

    auto* synth = app.add_subcommand("synth", "Generate a deterministic synthetic dataset");
    synth->add_option("--out", out, "Output CSV file ('-' for stdout)");
    auto* seed_opt = synth->add_option("--seed", seed, "Random seed");
    auto* rows_opt = synth->add_option("--rows", rows, "Row count");
    synth->add_option("--spec", spec, "Generator spec YAML (planted marginals, faults)");
    synth->add_option("--fixture", fixture, "Built-in fixture")->check(CLI::IsMember({"reference-cohort"}));
    synth->add_flag("--quiet", config.quiet, "No progress output");
    add_common(*synth, config, schema, encoding);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitFailure;
    }

    try {
        if (!schema.empty()) config.schema = schema;
        if (!encoding.empty()) config.encoding = parse_encoding(encoding);
        config.out = out;
        if (*report) {
            config.kinds = parse_kind_list(kinds);
            config.write_csv = formats.find("csv") != std::string::npos;
            config.write_json = formats.find("json") != std::string::npos;
            if (!states.empty()) config.filter.states = parse_state_list(states);
            if (!window.empty()) config.filter.date_window = parse_window(window);
            config.basis = *parse_region_basis(basis);
            if (!boundaries.empty()) config.boundaries = boundaries;
        }
        if (*synth) {
            if (*seed_opt) config.seed = seed;
            if (*rows_opt) config.rows = rows;
            if (!spec.empty()) config.spec = spec;
            if (!fixture.empty()) config.fixture = fixture;
        }
    } catch (const std::exception& e) {
        std::cerr << "epicohort: " << e.what() << '\n';
        return kExitFailure;
    }

    if (*validate) return cmd_validate(config, std::cout, std::cerr);
    if (*report) return cmd_report(config, std::cout, std::cerr);
    return cmd_synth(config, std::cout, std::cerr);
}
