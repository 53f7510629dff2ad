#pragma once

#include <cstdint>
#include <limits>

namespace avb {

/// Scan break-point policy: a scan may process at most
/// base_threshold + size_factor * declared_size bytes before it is aborted.
/// Counting bytes instead of wall time keeps runs reproducible.
struct BudgetPolicy {
    std::uint64_t base_threshold = 65536;
    std::uint64_t size_factor = 4;
};

inline std::uint64_t threshold_bytes(const BudgetPolicy& policy, std::uint64_t declared_size) {
    const std::uint64_t max = std::numeric_limits<std::uint64_t>::max();
    if (policy.size_factor != 0 && declared_size > max / policy.size_factor) return max;
    const std::uint64_t scaled = policy.size_factor * declared_size;
    if (policy.base_threshold > max - scaled) return max;
    return policy.base_threshold + scaled;
}

enum class MeterResult { Continue, Break };

/// Accumulates bytes of processing for one scan. Trips strictly above the
/// threshold and stays tripped.
class Meter {
public:
    Meter(const BudgetPolicy& policy, std::uint64_t declared_size)
        : threshold_(threshold_bytes(policy, declared_size)) {}

    static Meter unlimited() {
        Meter m;
        m.threshold_ = std::numeric_limits<std::uint64_t>::max();
        return m;
    }

    MeterResult consume(std::uint64_t n) {
        consumed_ = (n > std::numeric_limits<std::uint64_t>::max() - consumed_)
                        ? std::numeric_limits<std::uint64_t>::max()
                        : consumed_ + n;
        if (consumed_ > threshold_) tripped_ = true;
        return tripped_ ? MeterResult::Break : MeterResult::Continue;
    }

    std::uint64_t consumed() const { return consumed_; }
    std::uint64_t threshold() const { return threshold_; }
    bool tripped() const { return tripped_; }

private:
    Meter() = default;

    std::uint64_t consumed_ = 0;
    std::uint64_t threshold_ = 0;
    bool tripped_ = false;
};

}  // namespace avb
