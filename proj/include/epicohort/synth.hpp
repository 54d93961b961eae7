#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "epicohort/ingest.hpp"
#include "epicohort/schema_config.hpp"

namespace epicohort {

class InconsistentSpec : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Row attributes that can be planted exactly.
enum class PlantDim : std::uint8_t {
    IndigenousSpeaker,
    TestStatus,
    Sex,
    CareStatus,
    IcuStatus,
    IntubationStatus,
    VitalStatus,
    State,  // reporting state, 1..32
};
inline constexpr std::size_t kPlantDimCount = 8;

std::string_view dim_name(PlantDim d);
std::optional<PlantDim> parse_dim(std::string_view name);
/// Label -> stored value (enum ordinal, or the state code). Throws InconsistentSpec.
int parse_dim_value(PlantDim d, std::string_view label);

using Assignment = std::array<std::optional<int>, kPlantDimCount>;

/// A group of rows sharing planted attributes; unplanted attributes are drawn
/// from the field distributions.
struct Stratum {
    Assignment values{};
    std::uint64_t count = 0;

    std::optional<int> get(PlantDim d) const { return values[static_cast<std::size_t>(d)]; }
    void set(PlantDim d, int v) { values[static_cast<std::size_t>(d)] = v; }
};

struct MarginalCell {
    std::vector<int> values;  // aligned with Marginal::dims
    std::uint64_t count = 0;
};

/// Exact cell counts over `dims`. Dims already planted by earlier steps act as
/// group keys; the remaining dims are introduced by this step.
struct Marginal {
    std::vector<PlantDim> dims;
    std::vector<MarginalCell> cells;
};

/// One refinement. `joint` optionally constrains the same new dimension
/// against different group keys (binary new dimension only).
struct PlantStep {
    Marginal primary;
    std::optional<Marginal> joint;
};

struct GeneratorSpec {
    std::uint64_t seed = 1;
    std::uint64_t rows = 0;
    /// Per-field categorical code weights; unlisted fields use built-in defaults.
    std::map<Field, std::vector<std::pair<std::string, std::uint64_t>>> distributions;
    /// Death probability (per mille) for rows whose vital status is not planted.
    std::uint32_t deceased_per_mille = 80;
    std::vector<PlantStep> planted;
    /// Explicit strata; alternative to `planted` (both may not be given).
    std::vector<Stratum> strata;
    /// Exact number of corrupted rows per error kind.
    std::array<std::uint64_t, kRowErrorKindCount> faults{};

    std::uint64_t total_faults() const;

    /// Reads the generator YAML format (seed, rows, distributions, planted, faults)
    /// and checks that it is realizable. Throws InconsistentSpec.
    static GeneratorSpec from_yaml(const std::string& text);
    static GeneratorSpec load_file(const std::string& path);
};

/// Resolves planted steps (or validates explicit strata) into row strata that
/// sum to spec.rows. Throws InconsistentSpec.
std::vector<Stratum> solve_strata(const GeneratorSpec& spec);

/// Splits the strata selected by `in_group` over `dim` so that exactly
/// demands[v] rows get value v (north-west corner order). Throws InconsistentSpec
/// if the selected supply differs from the total demand.
void split_northwest(std::vector<Stratum>& strata, const std::function<bool(const Stratum&)>& in_group, PlantDim dim,
                     const std::vector<std::pair<int, std::uint64_t>>& demands);

/// Streams a CSV (schema column layout) realizing the spec. Deterministic for
/// (spec, schema).
void generate_records(const GeneratorSpec& spec, const SchemaConfig& schema, std::ostream& out);
std::string generate_records(const GeneratorSpec& spec, const SchemaConfig& schema);

/// Indigenous-speaker reference cohort: explicit strata that realize the
/// cohort counts of the federal 2020-08-01 snapshot, padded with
/// `distractor_rows` rows whose speaker flag is not Yes.
GeneratorSpec reference_cohort_spec(std::uint64_t seed, std::uint64_t distractor_rows = 1062);

}  // namespace epicohort
