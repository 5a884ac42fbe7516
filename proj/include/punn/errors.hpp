#pragma once

#include <stdexcept>
#include <string>

namespace punn {

// Dataset/schema ingestion problems (bad file, malformed row, unknown label).
class IngestError : public std::runtime_error {
 public:
  explicit IngestError(const std::string& what) : std::runtime_error(what) {}
};

// Wire-protocol violations (framing, version mismatch, unexpected message).
class ProtocolError : public std::runtime_error {
 public:
  explicit ProtocolError(const std::string& what) : std::runtime_error(what) {}
};

// Precondition violations map to std::invalid_argument / std::domain_error.

}  // namespace punn
