#include "robo_mv/error.hpp"

namespace robo_mv {

Error::Error(ErrorKind kind, std::string code, const std::string& detail)
    : std::runtime_error(code + ": " + detail), kind_(kind), code_(std::move(code)) {}

void fail(ErrorKind kind, const std::string& code, const std::string& detail) {
    throw Error(kind, code, detail);
}

}  // namespace robo_mv
