#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <istream>
#include <optional>

#include "epicohort/aggregator.hpp"
#include "epicohort/classifier.hpp"
#include "epicohort/ingest.hpp"
#include "epicohort/schema_config.hpp"

namespace epicohort {

struct PipelineOptions {
    CohortFilter filter;
    RegionBasis basis = RegionBasis::ReportingState;
    unsigned workers = 1;
    std::size_t chunk_rows = 1024;
    std::size_t error_cap = 20;
    std::optional<InputEncoding> encoding_override;
    /// Called from the reader thread with the running row count.
    std::function<void(std::uint64_t)> progress;
    std::uint64_t progress_every = 100000;
};

struct PipelineResult {
    CohortAccumulator accumulator;
    ValidationReport validation;
};

/// Streams the dataset through ingest, classification and accumulation. Rows
/// are read by one thread and processed in chunks by `workers` threads with
/// private accumulators, merged at the end; the result does not depend on the
/// worker count.
PipelineResult run_pipeline(const std::filesystem::path& input, const SchemaConfig& schema, const SuspectRuleSet& rules,
                            const PipelineOptions& options);
PipelineResult run_pipeline(std::istream& input, const SchemaConfig& schema, const SuspectRuleSet& rules,
                            const PipelineOptions& options);

}  // namespace epicohort
