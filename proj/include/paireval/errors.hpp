#pragma once

#include <stdexcept>
#include <string>

namespace paireval {

// Base class for everything this library throws on purpose.
class Error : public std::runtime_error {
  public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Malformed or inconsistent input data (schema violations, bad templates,
// misaligned ids, undefined statistics). CLI exit code 1.
class DataError : public Error {
  public:
    explicit DataError(const std::string& what) : Error(what) {}
};

// Judge backend failures: transport errors after retries, protocol
// violations, degenerate label distributions. CLI exit code 2.
class BackendError : public Error {
  public:
    explicit BackendError(const std::string& what, std::string payload = {})
        : Error(what), payload_(std::move(payload)) {}

    // Raw response body for degenerate-distribution / protocol errors.
    const std::string& payload() const { return payload_; }

  private:
    std::string payload_;
};

} // namespace paireval
