#pragma once

#include <stdexcept>
#include <string>

namespace robo_mv {

enum class ErrorKind { Config, Numerical, IO };

/// Library failure carrying a stable code name (e.g. "NonStochasticRow").
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, std::string code, const std::string& detail);

    ErrorKind kind() const noexcept { return kind_; }
    const std::string& code() const noexcept { return code_; }

private:
    ErrorKind kind_;
    std::string code_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& code, const std::string& detail);

}  // namespace robo_mv
