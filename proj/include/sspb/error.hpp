#pragma once

#include <stdexcept>
#include <string>

namespace sspb {

// Base error carrying a short machine-readable kind tag. The CLI maps these
// to a structured error line on stderr and a nonzero exit code.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& msg)
      : std::runtime_error(msg), kind_(std::move(kind)) {}
  const std::string& kind() const { return kind_; }

 private:
  std::string kind_;
};

struct ShapeError : Error {
  explicit ShapeError(const std::string& m) : Error("shape", m) {}
};
struct ParamError : Error {
  explicit ParamError(const std::string& m) : Error("parameter", m) {}
};
struct UsageError : Error {
  explicit UsageError(const std::string& m) : Error("usage", m) {}
};
struct NumericError : Error {
  explicit NumericError(const std::string& m) : Error("numeric", m) {}
};
struct ConfigError : Error {
  explicit ConfigError(const std::string& m) : Error("config", m) {}
};
struct IngestError : Error {
  explicit IngestError(const std::string& m) : Error("ingest", m) {}
};
struct TransferError : Error {
  explicit TransferError(const std::string& m) : Error("transfer", m) {}
};
struct DomainError : Error {
  explicit DomainError(const std::string& m) : Error("domain", m) {}
};

}  // namespace sspb
