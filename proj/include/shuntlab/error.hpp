#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace shuntlab {

// Bad call arguments (decimation factor, window bounds, config values).
class argument_error : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Input data that does not satisfy a format or schema. `line` is 1-based,
// 0 when not applicable.
class data_error : public std::runtime_error {
public:
    explicit data_error(const std::string& what, std::size_t line = 0)
        : std::runtime_error(line ? what + " (line " + std::to_string(line) + ")" : what),
          line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

// Operation applied to a trace with the wrong channel layout.
class mode_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Window too short to integrate.
class degenerate_window_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class insufficient_samples_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Source failure while streaming; carries the sample position reached.
class stream_error : public std::runtime_error {
public:
    stream_error(const std::string& what, std::size_t position)
        : std::runtime_error(what + " (at sample " + std::to_string(position) + ")"),
          position_(position) {}

    std::size_t position() const noexcept { return position_; }

private:
    std::size_t position_;
};

// GPIO port ownership and toggle protocol violations.
class protocol_error : public std::logic_error {
public:
    enum class kind { unknown_port, ownership, stale_token, alternation, dangling_window };

    protocol_error(kind k, const std::string& what) : std::logic_error(what), kind_(k) {}

    kind code() const noexcept { return kind_; }

private:
    kind kind_;
};

} // namespace shuntlab
