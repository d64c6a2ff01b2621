#pragma once

#include <cstdint>
#include <vector>

#include "divq/errors.hpp"
#include "divq/rng.hpp"

namespace divq {

struct Transition {
    std::vector<double> s;
    int a = 0;
    double r = 0.0;
    std::vector<double> s_next;
    bool done = false;
};

// Fixed-capacity ring with FIFO eviction and uniform sampling with
// replacement from an owned RNG stream.
class ReplayBuffer {
public:
    ReplayBuffer(std::size_t capacity, std::uint64_t seed) : capacity_(capacity), rng_(seed) {
        if (capacity_ == 0) throw domain_error("replay buffer capacity must be positive");
        storage_.reserve(capacity_);
    }

    void push(Transition t) {
        if (storage_.size() < capacity_) {
            storage_.push_back(std::move(t));
        } else {
            storage_[next_] = std::move(t);
        }
        next_ = (next_ + 1) % capacity_;
    }

    std::size_t size() const { return storage_.size(); }
    std::size_t capacity() const { return capacity_; }

    const Transition& at(std::size_t i) const { return storage_[i]; }

    std::vector<Transition> sample(std::size_t batch_size) {
        if (storage_.size() < batch_size)
            throw not_ready_error("replay sample: buffer holds " +
                                  std::to_string(storage_.size()) + " < batch " +
                                  std::to_string(batch_size));
        std::vector<Transition> batch;
        batch.reserve(batch_size);
        for (std::size_t i = 0; i < batch_size; ++i)
            batch.push_back(storage_[rng_.uniform_index(storage_.size())]);
        return batch;
    }

    // States only, drawn with an external stream; probe batches for the
    // similarity analysis must not disturb the training stream.
    std::vector<std::vector<double>> sample_states(std::size_t n, Rng& rng) const {
        if (storage_.empty()) throw not_ready_error("replay sample_states: buffer empty");
        std::vector<std::vector<double>> out;
        out.reserve(n);
        for (std::size_t i = 0; i < n; ++i)
            out.push_back(storage_[rng.uniform_index(storage_.size())].s);
        return out;
    }

private:
    std::size_t capacity_;
    std::vector<Transition> storage_;
    std::size_t next_ = 0;
    Rng rng_;
};

}  // namespace divq
