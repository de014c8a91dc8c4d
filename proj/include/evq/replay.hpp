#pragma once

#include <algorithm>
#include <cmath>
#include <deque>
#include <vector>

#include "evq/common.hpp"
#include "evq/rng.hpp"

namespace evq {

/// Stored experience. For multi-step transitions `reward` is the
/// discounted k-step return and `discount` is gamma^k; `next_state` is the
/// state k steps later.
struct Transition {
    std::vector<double> state;
    Action action = Action::idle;
    double reward = 0.0;
    std::vector<double> next_state;
    bool done = false;
    double discount = 1.0;
};

/// Fixed-capacity FIFO experience store.
class ReplayBuffer {
public:
    explicit ReplayBuffer(std::size_t capacity = 50'000) : capacity_(capacity) {
        if (capacity_ == 0) throw ConfigError("replay capacity must be positive");
        ring_.reserve(std::min<std::size_t>(capacity_, 1 << 16));
    }

    void push(Transition t) {
        if (ring_.size() < capacity_) {
            ring_.push_back(std::move(t));
        } else {
            ring_[head_] = std::move(t);
            head_ = (head_ + 1) % capacity_;
        }
    }

    std::size_t size() const noexcept { return ring_.size(); }
    std::size_t capacity() const noexcept { return capacity_; }

    /// i-th oldest stored transition.
    const Transition& at(std::size_t i) const { return ring_.at((head_ + i) % ring_.size()); }

    /// Indices of `n` distinct transitions drawn uniformly.
    std::vector<std::size_t> sample_indices(std::size_t n, Rng& rng) const {
        if (n > ring_.size()) throw ConfigError("cannot sample more transitions than stored");
        std::vector<std::size_t> picked;
        picked.reserve(n);
        while (picked.size() < n) {
            const std::size_t i = rng.index(ring_.size());
            if (std::find(picked.begin(), picked.end(), i) == picked.end()) picked.push_back(i);
        }
        return picked;
    }

    const Transition& raw(std::size_t i) const { return ring_[i]; }

private:
    std::size_t capacity_;
    std::size_t head_ = 0; // oldest element once full
    std::vector<Transition> ring_;
};

/// Turns a stream of one-step experience into n-step transitions. Emits one
/// transition per step once n steps are pending, and flushes the remaining
/// truncated returns at episode end.
class NStepAccumulator {
public:
    NStepAccumulator(std::size_t n, double gamma) : n_(n), gamma_(gamma) {
        if (n_ < 1) throw ConfigError("n_step must be at least 1");
    }

    std::vector<Transition> push(std::vector<double> state, Action action, double reward,
                                 const std::vector<double>& next_state, bool done) {
        pending_.push_back({std::move(state), action, reward});
        std::vector<Transition> out;
        if (done) {
            while (!pending_.empty()) {
                out.push_back(make(pending_.size(), next_state, true));
                pending_.pop_front();
            }
        } else if (pending_.size() == n_) {
            out.push_back(make(n_, next_state, false));
            pending_.pop_front();
        }
        return out;
    }

    void clear() { pending_.clear(); }

private:
    struct Step {
        std::vector<double> state;
        Action action;
        double reward;
    };

    Transition make(std::size_t k, const std::vector<double>& next_state, bool done) const {
        Transition t;
        t.state = pending_.front().state;
        t.action = pending_.front().action;
        double g = 0.0, w = 1.0;
        for (std::size_t j = 0; j < k; ++j) {
            g += w * pending_[j].reward;
            w *= gamma_;
        }
        t.reward = g;
        t.discount = w;
        t.next_state = next_state;
        t.done = done;
        return t;
    }

    std::size_t n_;
    double gamma_;
    std::deque<Step> pending_;
};

} // namespace evq
