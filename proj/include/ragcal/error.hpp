#pragma once

#include <stdexcept>
#include <string>

namespace ragcal {

// Process exit codes surfaced by the CLI: 0 success, 1 usage, 2 data, 3 endpoint.
enum class ErrorKind { Usage = 1, Data = 2, Endpoint = 3 };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, std::string message)
        : std::runtime_error(std::move(message)), kind_(kind) {}

    ErrorKind kind() const { return kind_; }
    int exit_code() const { return static_cast<int>(kind_); }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void throw_usage(const std::string& msg) { throw Error(ErrorKind::Usage, msg); }
[[noreturn]] inline void throw_data(const std::string& msg) { throw Error(ErrorKind::Data, msg); }
[[noreturn]] inline void throw_endpoint(const std::string& msg) { throw Error(ErrorKind::Endpoint, msg); }

// Endpoint failure that is worth retrying (timeouts, 429/5xx). Non-transient
// endpoint problems (bad auth, malformed reply) throw plain Error.
class TransientEndpointError : public Error {
public:
    explicit TransientEndpointError(std::string message, int status = 0)
        : Error(ErrorKind::Endpoint, std::move(message)), status_(status) {}

    int status() const { return status_; }

private:
    int status_;
};

}  // namespace ragcal
