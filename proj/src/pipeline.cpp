#include "epicohort/pipeline.hpp"

#include <condition_variable>
#include <deque>
#include <exception>
#include <mutex>
#include <thread>

namespace epicohort {

namespace {

struct Chunk {
    std::vector<RawRow> rows;  // slots are reused; only the first `used` are live
    std::size_t used = 0;
};

class ChunkQueue {
public:
    explicit ChunkQueue(std::size_t capacity) : capacity_(capacity) {}

    void push(Chunk chunk) {
        std::unique_lock lock(mu_);
        not_full_.wait(lock, [&] { return queue_.size() < capacity_ || aborted_; });
        if (aborted_) return;
        queue_.push_back(std::move(chunk));
        not_empty_.notify_one();
    }

    bool pop(Chunk& chunk) {
        std::unique_lock lock(mu_);
        not_empty_.wait(lock, [&] { return !queue_.empty() || closed_ || aborted_; });
        if (aborted_ || queue_.empty()) return false;
        chunk = std::move(queue_.front());
        queue_.pop_front();
        not_full_.notify_one();
        return true;
    }

    /// Returns a processed chunk so its row buffers can be refilled.
    void recycle(Chunk chunk) {
        std::lock_guard lock(mu_);
        chunk.used = 0;
        spare_.push_back(std::move(chunk));
    }

    Chunk take_spare() {
        std::lock_guard lock(mu_);
        if (spare_.empty()) return {};
        auto c = std::move(spare_.back());
        spare_.pop_back();
        return c;
    }

    void close() {
        std::lock_guard lock(mu_);
        closed_ = true;
        not_empty_.notify_all();
    }

    void abort() {
        std::lock_guard lock(mu_);
        aborted_ = true;
        not_empty_.notify_all();
        not_full_.notify_all();
    }

    bool aborted() {
        std::lock_guard lock(mu_);
        return aborted_;
    }

private:
    std::mutex mu_;
    std::condition_variable not_full_, not_empty_;
    std::deque<Chunk> queue_;
    std::vector<Chunk> spare_;
    std::size_t capacity_;
    bool closed_ = false;
    bool aborted_ = false;
};

PipelineResult run(RecordStream& stream, const SuspectRuleSet& rules, const PipelineOptions& options) {
    const unsigned workers = options.workers == 0 ? 1 : options.workers;
    const std::size_t chunk_rows = options.chunk_rows == 0 ? 1 : options.chunk_rows;
    const auto& schema = stream.schema();
    ChunkQueue queue(workers);

    std::vector<CohortAccumulator> accs(workers, CohortAccumulator(options.basis));
    std::vector<ValidationReport> reports(workers);
    std::vector<std::exception_ptr> errors(workers + 1);
    for (auto& r : reports) r.error_cap = options.error_cap;

    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                Chunk chunk;
                while (queue.pop(chunk)) {
                    for (std::size_t i = 0; i < chunk.used; ++i) {
                        auto result = parse_row(chunk.rows[i], stream.columns(), stream.header_width(), schema);
                        reports[w].note(result, schema.age_cap);
                        if (const auto* rec = std::get_if<PatientRecord>(&result))
                            accs[w].accumulate(*rec, classify_patient(*rec, schema, rules), options.filter);
                    }
                    queue.recycle(std::move(chunk));
                    chunk = {};
                }
            } catch (...) {
                errors[w] = std::current_exception();
                queue.abort();
            }
        });
    }

    try {
        auto chunk = queue.take_spare();
        std::uint64_t seen = 0;
        while (true) {
            if (chunk.rows.size() <= chunk.used) chunk.rows.resize(chunk.used + 1);
            if (!stream.next_raw(chunk.rows[chunk.used])) break;
            ++chunk.used;
            if (++seen % options.progress_every == 0 && options.progress) options.progress(seen);
            if (chunk.used >= chunk_rows) {
                queue.push(std::move(chunk));
                if (queue.aborted()) break;
                chunk = queue.take_spare();
            }
        }
        if (chunk.used) queue.push(std::move(chunk));
        if (options.progress) options.progress(seen);
    } catch (...) {
        errors[workers] = std::current_exception();
        queue.abort();
    }
    queue.close();
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);

    PipelineResult result{CohortAccumulator(options.basis), ValidationReport{}};
    result.validation.error_cap = options.error_cap;
    for (unsigned w = 0; w < workers; ++w) {
        result.accumulator.merge(accs[w]);
        result.validation.merge(reports[w]);
    }
    result.accumulator.note_rejected_rows(result.validation.rows_rejected);
    result.validation.encoding = stream.encoding() == InputEncoding::Latin1 ? "latin1" : "utf8";
    return result;
}

}  // namespace

PipelineResult run_pipeline(const std::filesystem::path& input, const SchemaConfig& schema, const SuspectRuleSet& rules,
                            const PipelineOptions& options) {
    auto stream = open_dataset(input, schema, options.encoding_override);
    return run(*stream, rules, options);
}

PipelineResult run_pipeline(std::istream& input, const SchemaConfig& schema, const SuspectRuleSet& rules,
                            const PipelineOptions& options) {
    RecordStream stream(input, schema, options.encoding_override);
    return run(stream, rules, options);
}

}  // namespace epicohort
