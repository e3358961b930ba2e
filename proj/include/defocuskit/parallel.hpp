#pragma once

#include <functional>

namespace dk {

// Worker count: hardware concurrency capped by DEFOCUSKIT_THREADS (read once).
int max_threads();

// Runs fn(i) for i in [0, n). Work executed on a shared persistent pool; calls
// issued from inside a pool worker run inline (no nested parallelism).
void parallel_for(int n, const std::function<void(int)>& fn);

// Number of contiguous chunks parallel_chunks will use for n items, from the
// caller's current context. Deterministic, so callers can preallocate
// per-chunk merge buffers.
int parallel_chunk_count(int n);

// Runs fn(begin, end, chunk_index) over contiguous ranges covering [0, n).
void parallel_chunks(int n, const std::function<void(int, int, int)>& fn);

// While alive, parallel regions issued from this thread run inline. Used
// where single-threaded execution matters (timing baselines).
class SerialSection {
public:
    SerialSection();
    ~SerialSection();
    SerialSection(const SerialSection&) = delete;
    SerialSection& operator=(const SerialSection&) = delete;

private:
    bool previous_;
};

}  // namespace dk
