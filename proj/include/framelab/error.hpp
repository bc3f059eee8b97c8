#ifndef FRAMELAB_ERROR_HPP
#define FRAMELAB_ERROR_HPP

#include <stdexcept>
#include <string>

namespace framelab {

/// Failure categories. The C API maps these one-to-one onto fl_status codes.
enum class ErrorKind {
    invalid_argument,
    domain,
    mechanism,
    io,
    parse,
    schema,
    version,
    diverged,
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
    throw Error(kind, what);
}

} // namespace framelab

#endif // FRAMELAB_ERROR_HPP
