#include "epicohort/cli.hpp"

#include <charconv>
#include <fstream>
#include <iostream>
#include <sstream>

#include "epicohort/classifier.hpp"
#include "epicohort/ingest.hpp"
#include "epicohort/pipeline.hpp"
#include "epicohort/report.hpp"
#include "epicohort/synth.hpp"

namespace epicohort {

namespace fs = std::filesystem;

namespace {

std::vector<std::string_view> split(std::string_view text, char sep) {
    std::vector<std::string_view> out;
    while (true) {
        auto p = text.find(sep);
        out.push_back(trim(text.substr(0, p)));
        if (p == std::string_view::npos) break;
        text.remove_prefix(p + 1);
    }
    return out;
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct Profile {
    SchemaConfig schema;
    SuspectRuleSet rules;
};

Profile load_profile(const RunConfig& config) {
    if (!config.schema) return {SchemaConfig::default_profile(), SuspectRuleSet::default_rules()};
    auto text = read_file(*config.schema);
    return {SchemaConfig::from_yaml(text), SuspectRuleSet::from_yaml(text)};
}

void ensure_output_dir(const fs::path& dir) {
    if (dir.empty()) throw IoError("an output directory is required (--out)");
    fs::create_directories(dir);
    auto probe = dir / ".epicohort-write-probe";
    {
        std::ofstream p(probe, std::ios::binary | std::ios::trunc);
        if (!p) throw IoError("output directory is not writable: " + dir.string());
    }
    fs::remove(probe);
}

// Files written so far; removed unless committed.
class OutputSet {
public:
    explicit OutputSet(fs::path dir) : dir_(std::move(dir)) {}
    OutputSet(const OutputSet&) = delete;
    OutputSet& operator=(const OutputSet&) = delete;
    ~OutputSet() {
        if (committed_) return;
        std::error_code ec;
        for (const auto& p : written_) fs::remove(p, ec);
    }

    fs::path write(const std::string& name, std::string_view content) {
        auto path = dir_ / name;
        write_file_atomic(path, content);
        written_.push_back(path);
        return path;
    }
    void commit() { committed_ = true; }
    const std::vector<fs::path>& written() const { return written_; }

private:
    fs::path dir_;
    std::vector<fs::path> written_;
    bool committed_ = false;
};

std::string municipal_csv(const std::vector<FatalityRateRow>& rows) {
    ReportTable t;
    t.kind = ReportKind::FatalityByState;
    t.row_header = "Region";
    t.column_labels = {"State", "Municipality", "Deaths", "Positives", "Case fatality rate"};
    for (const auto& r : rows) {
        if (r.region) {
            t.row_labels.push_back(std::to_string(join_code(*r.region)));
            t.cells.push_back({std::int64_t{r.region->state_code},
                               r.region->municipality_code ? Cell{std::int64_t{*r.region->municipality_code}}
                                                           : Cell{Percent::undefined()},
                               static_cast<std::int64_t>(r.deaths), static_cast<std::int64_t>(r.positives),
                               r.rate_percent});
        } else {
            t.row_labels.push_back("Total");
            t.cells.push_back({Percent::undefined(), Percent::undefined(), static_cast<std::int64_t>(r.deaths),
                               static_cast<std::int64_t>(r.positives), r.rate_percent});
        }
    }
    return emit_csv(t);
}

void print_validation(const ValidationReport& v, std::ostream& out) {
    out << "rows read       " << v.rows_total << '\n'
        << "rows accepted   " << v.rows_accepted << '\n'
        << "rows rejected   " << v.rows_rejected << '\n';
    for (std::size_t i = 0; i < kRowErrorKindCount; ++i)
        if (v.errors_by_kind[i])
            out << "  " << to_string(static_cast<RowErrorKind>(i)) << ": " << v.errors_by_kind[i] << '\n';
}

}  // namespace

std::vector<ReportKind> parse_kind_list(std::string_view text) {
    std::vector<ReportKind> kinds;
    if (trim(text) == "all" || trim(text).empty()) return {kAllReportKinds, kAllReportKinds + kReportKindCount};
    for (auto name : split(text, ',')) {
        auto k = parse_kind(name);
        if (std::find(kinds.begin(), kinds.end(), k) == kinds.end()) kinds.push_back(k);
    }
    return kinds;
}

std::set<int> parse_state_list(std::string_view text) {
    std::set<int> states;
    for (auto item : split(text, ',')) {
        int code = 0;
        auto [p, ec] = std::from_chars(item.data(), item.data() + item.size(), code);
        if (ec != std::errc() || p != item.data() + item.size() || code < 1 || code > kStateCount)
            throw std::invalid_argument("invalid state code: '" + std::string(item) + "'");
        states.insert(code);
    }
    return states;
}

DateWindow parse_window(std::string_view text) {
    auto parts = split(text, ':');
    if (parts.size() != 2) throw std::invalid_argument("window must be START:END");
    auto start = parse_date(parts[0], "YYYY-MM-DD");
    auto end = parse_date(parts[1], "YYYY-MM-DD");
    if (!start || !end) throw std::invalid_argument("window dates must be YYYY-MM-DD");
    if (*end < *start) throw std::invalid_argument("window ends before it starts");
    return {*start, *end};
}

int cmd_validate(const RunConfig& config, std::ostream& out, std::ostream& err) {
    try {
        auto profile = load_profile(config);
        if (!config.out.empty()) ensure_output_dir(config.out);
        ValidationOptions options;
        options.error_cap = config.error_cap;
        options.encoding_override = config.encoding;
        auto report = validate_dataset(config.input, profile.schema, options);
        auto json = report.to_json().dump(2) + "\n";
        if (!config.out.empty()) {
            OutputSet outputs(config.out);
            outputs.write("validation.json", json);
            outputs.commit();
            print_validation(report, out);
        } else {
            out << json;
        }
        return report.rows_rejected == 0 ? kExitOk : kExitDataFindings;
    } catch (const std::exception& e) {
        err << "epicohort validate: " << e.what() << '\n';
        return kExitFailure;
    }
}

int cmd_report(const RunConfig& config, std::ostream& out, std::ostream& err) {
    try {
        if (config.workers == 0) throw std::invalid_argument("worker count must be at least 1");
        if (!config.write_csv && !config.write_json) throw std::invalid_argument("no output format selected");
        auto profile = load_profile(config);
        ensure_output_dir(config.out);
        std::optional<std::string> boundaries;
        if (config.boundaries) boundaries = read_file(*config.boundaries);

        PipelineOptions options;
        options.filter = config.filter;
        options.basis = config.basis;
        options.workers = config.workers;
        options.encoding_override = config.encoding;
        options.error_cap = config.error_cap;
        if (!config.quiet) options.progress = [&err](std::uint64_t n) { err << "\rrows read: " << n << std::flush; };
        auto result = run_pipeline(config.input, profile.schema, profile.rules, options);
        if (!config.quiet) err << '\n';

        OutputSet outputs(config.out);
        auto kinds = config.kinds.empty() ? parse_kind_list("all") : config.kinds;
        for (auto kind : kinds) {
            auto table = build_table(result.accumulator, kind);
            auto name = std::string(kind_name(kind));
            if (config.write_csv) outputs.write(name + ".csv", emit_csv(table));
            if (config.write_json) outputs.write(name + ".json", emit_json(table));
        }
        auto state_rates = fatality_by_state(result.accumulator);
        if (boundaries) {
            auto joined = emit_choropleth(state_rates, *boundaries, config.join_key);
            outputs.write("fatality_by_state.geojson", joined.geojson);
            for (auto code : joined.join_misses) err << "warning: state " << code << " has no boundary feature\n";
        }
        if (config.municipal_rates)
            outputs.write("fatality_by_municipality.csv", municipal_csv(fatality_by_municipality(result.accumulator)));
        outputs.commit();

        const auto& acc = result.accumulator;
        auto positives = acc.sum([](const CellKey& k) { return k.test == TestStatus::Positive; });
        auto deaths = acc.sum(
            [](const CellKey& k) { return k.test == TestStatus::Positive && k.vital == VitalStatus::Deceased; });
        print_validation(result.validation, out);
        out << "cohort records  " << acc.total() << '\n'
            << "positives       " << positives << '\n'
            << "deaths          " << deaths << '\n'
            << "fatality rate   " << state_rates.back().rate_percent.to_string() << '\n';
        if (acc.intubated_outside_icu())
            out << "intubation reported outside ICU: " << acc.intubated_outside_icu() << " records\n";
        for (const auto& p : outputs.written()) out << "wrote " << p.string() << '\n';
        return result.validation.rows_rejected == 0 ? kExitOk : kExitDataFindings;
    } catch (const std::exception& e) {
        if (!config.quiet) err << '\n';
        err << "epicohort report: " << e.what() << '\n';
        return kExitFailure;
    }
}

int cmd_synth(const RunConfig& config, std::ostream& out, std::ostream& err) {
    try {
        auto profile = load_profile(config);
        GeneratorSpec spec;
        if (config.fixture) {
            if (*config.fixture != "reference-cohort")
                throw std::invalid_argument("unknown fixture: " + *config.fixture);
            spec = reference_cohort_spec(config.seed.value_or(1));
        } else if (config.spec) {
            spec = GeneratorSpec::load_file(config.spec->string());
            if (config.seed) spec.seed = *config.seed;
            if (config.rows) spec.rows = *config.rows;
        } else {
            if (!config.rows) throw std::invalid_argument("synth needs --rows, --spec or --fixture");
            spec.seed = config.seed.value_or(1);
            spec.rows = *config.rows;
        }
        if (config.out.empty() || config.out == "-") {
            generate_records(spec, profile.schema, out);
            return kExitOk;
        }
        if (config.out.has_parent_path()) fs::create_directories(config.out.parent_path());
        auto tmp = config.out;
        tmp += ".partial";
        try {
            std::ofstream file(tmp, std::ios::binary | std::ios::trunc);
            if (!file) throw IoError("cannot write " + tmp.string());
            generate_records(spec, profile.schema, file);
            file.close();
            if (!file) throw IoError("write failed for " + tmp.string());
            fs::rename(tmp, config.out);
        } catch (...) {
            std::error_code ec;
            fs::remove(tmp, ec);
            throw;
        }
        if (!config.quiet) err << "wrote " << spec.rows << " rows to " << config.out.string() << '\n';
        return kExitOk;
    } catch (const std::exception& e) {
        err << "epicohort synth: " << e.what() << '\n';
        return kExitFailure;
    }
}

}  // namespace epicohort
