#pragma once

// Acquisition front end: the DAQ channel budget and pull-based sample streams.

#include <condition_variable>
#include <cstddef>
#include <deque>
#include <istream>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include <fmt/format.h>

#include "error.hpp"
#include "trace.hpp"
#include "trace_csv.hpp"

namespace shuntlab {

struct Scenario;

struct ReplaySource {
    std::string path;
};

struct SimulatorSource {
    std::shared_ptr<const Scenario> scenario;
};

// CSV trace on a byte pipe; standard input unless another stream is given.
struct StreamSource {
    std::istream* in = nullptr;
};

using SourceSpec = std::variant<std::monostate, ReplaySource, SimulatorSource, StreamSource>;

struct AcquisitionConfig {
    double aggregate_rate_hz = 40000.0;
    int channels = 1; // 1: relay design, 2: trigger design
    SourceSpec source;
};

// The device's sampling budget is split evenly over the enabled channels.
inline double channel_rate(const AcquisitionConfig& config) {
    if (config.channels != 1 && config.channels != 2)
        throw argument_error(fmt::format("acquisition: channels must be 1 or 2, got {}", config.channels));
    if (!(config.aggregate_rate_hz > 0.0))
        throw argument_error("acquisition: aggregate rate must be positive");
    return config.aggregate_rate_hz / config.channels;
}

// Backend delivering samples in index order.
class SampleSource {
public:
    virtual ~SampleSource() = default;
    virtual double rate_hz() const = 0;
    virtual ShuntConfig shunt() const = 0;
    virtual bool has_trigger() const = 0;
    // Appends up to n samples to out; returns the count appended (0 at end).
    virtual std::size_t pull(std::size_t n, std::vector<PowerSample>& out) = 0;
};

// Serves an in-memory trace.
class TraceSource final : public SampleSource {
public:
    explicit TraceSource(PowerTrace trace) : trace_(std::move(trace)) {}

    double rate_hz() const override { return trace_.rate_hz(); }
    ShuntConfig shunt() const override { return trace_.shunt(); }
    bool has_trigger() const override { return trace_.has_trigger(); }

    std::size_t pull(std::size_t n, std::vector<PowerSample>& out) override {
        const std::size_t k = std::min(n, trace_.size() - next_);
        for (std::size_t i = 0; i < k; ++i) out.push_back(trace_.sample(next_ + i));
        next_ += k;
        return k;
    }

private:
    PowerTrace trace_;
    std::size_t next_ = 0;
};

// Parses CSV lazily from an istream; optionally owns the stream.
class CsvSource final : public SampleSource {
public:
    explicit CsvSource(std::unique_ptr<std::istream> owned)
        : owned_(std::move(owned)), reader_(*owned_) {}
    explicit CsvSource(std::istream& in) : reader_(in) {}

    double rate_hz() const override { return reader_.header().rate_hz; }
    ShuntConfig shunt() const override { return reader_.header().shunt; }
    bool has_trigger() const override { return reader_.header().has_trigger; }

    std::size_t pull(std::size_t n, std::vector<PowerSample>& out) override {
        std::size_t k = 0;
        try {
            while (k < n) {
                auto s = reader_.next();
                if (!s) break;
                out.push_back(*s);
                ++k;
            }
        } catch (const data_error& e) {
            throw stream_error(e.what(), reader_.position());
        }
        return k;
    }

private:
    std::unique_ptr<std::istream> owned_;
    TraceCsvReader reader_;
};

// Single-consumer stream over a source with a bounded look-ahead buffer.
class SampleStream {
public:
    static constexpr std::size_t kLookahead = 4096;

    SampleStream(AcquisitionConfig config, std::unique_ptr<SampleSource> source)
        : config_(std::move(config)), source_(std::move(source)) {}

    const AcquisitionConfig& config() const noexcept { return config_; }
    double rate_hz() const { return source_->rate_hz(); }
    ShuntConfig shunt() const { return source_->shunt(); }
    bool has_trigger() const { return source_->has_trigger(); }
    std::size_t position() const noexcept { return position_; }
    bool exhausted() const noexcept { return exhausted_; }

    // Returns min(n, remaining) samples; empty only once the source is drained.
    std::vector<PowerSample> read_block(std::size_t n) {
        if (n == 0) throw argument_error("read_block: n must be at least 1");
        std::vector<PowerSample> out;
        out.reserve(std::min(n, kLookahead * 4));
        while (out.size() < n) {
            if (head_ == buffer_.size()) {
                if (!refill()) break;
            }
            const std::size_t k = std::min(n - out.size(), buffer_.size() - head_);
            out.insert(out.end(), buffer_.begin() + static_cast<std::ptrdiff_t>(head_),
                       buffer_.begin() + static_cast<std::ptrdiff_t>(head_ + k));
            head_ += k;
        }
        position_ += out.size();
        if (out.empty()) exhausted_ = true;
        return out;
    }

private:
    bool refill() {
        if (source_done_) return false;
        buffer_.clear();
        head_ = 0;
        try {
            if (source_->pull(kLookahead, buffer_) == 0) source_done_ = true;
        } catch (const stream_error&) {
            throw;
        } catch (const std::exception& e) {
            throw stream_error(e.what(), position_);
        }
        return !buffer_.empty();
    }

    AcquisitionConfig config_;
    std::unique_ptr<SampleSource> source_;
    std::vector<PowerSample> buffer_;
    std::size_t head_ = 0;
    std::size_t position_ = 0;
    bool exhausted_ = false;
    bool source_done_ = false;
};

// Drains a stream into a trace.
inline PowerTrace collect(SampleStream& stream, std::size_t block = SampleStream::kLookahead) {
    PowerTrace trace(stream.rate_hz(), stream.shunt(), stream.has_trigger());
    for (;;) {
        auto b = stream.read_block(block);
        if (b.empty()) break;
        for (const auto& s : b) trace.push_back(s);
    }
    return trace;
}

// Blocking bounded FIFO connecting one producer and one consumer.
template <typename T>
class BoundedQueue {
public:
    explicit BoundedQueue(std::size_t capacity) : capacity_(capacity ? capacity : 1) {}

    // False when the queue was closed before space became available.
    bool push(T value) {
        std::unique_lock lock(mu_);
        not_full_.wait(lock, [&] { return items_.size() < capacity_ || closed_; });
        if (closed_) return false;
        items_.push_back(std::move(value));
        not_empty_.notify_one();
        return true;
    }

    // Empty optional once closed and drained.
    std::optional<T> pop() {
        std::unique_lock lock(mu_);
        not_empty_.wait(lock, [&] { return !items_.empty() || closed_; });
        if (items_.empty()) return std::nullopt;
        T v = std::move(items_.front());
        items_.pop_front();
        not_full_.notify_one();
        return v;
    }

    void close() {
        std::lock_guard lock(mu_);
        closed_ = true;
        not_empty_.notify_all();
        not_full_.notify_all();
    }

private:
    std::size_t capacity_;
    std::mutex mu_;
    std::condition_variable not_full_, not_empty_;
    std::deque<T> items_;
    bool closed_ = false;
};

// Runs `stream` on a producer thread, handing blocks to `consume` on the
// calling thread through a bounded queue. Producer errors are rethrown here.
template <typename Consumer>
void pump(SampleStream& stream, std::size_t block, std::size_t queue_depth, Consumer&& consume) {
    BoundedQueue<std::vector<PowerSample>> queue(queue_depth);
    std::exception_ptr failure;
    std::thread producer([&] {
        try {
            for (;;) {
                auto b = stream.read_block(block);
                if (b.empty() || !queue.push(std::move(b))) break;
            }
        } catch (...) {
            failure = std::current_exception();
        }
        queue.close();
    });
    try {
        while (auto b = queue.pop()) consume(*b);
    } catch (...) {
        queue.close();
        producer.join();
        throw;
    }
    producer.join();
    if (failure) std::rethrow_exception(failure);
}

} // namespace shuntlab
