#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

namespace neggen {

struct GenerationRequest {
    std::string prompt;
    int max_tokens = 512;
    double temperature = 0.7;
    uint64_t seed = 0;
};

struct GenerationResponse {
    std::string text;
    std::string backend_id;
    double latency_ms = 0;  // informational only; never persisted
};

// Text-generation backend. One interface serves every generation role in the
// pipeline; operators decide which model answers. Implementations must
// tolerate concurrent generate() calls.
class TextBackend {
  public:
    virtual ~TextBackend() = default;
    virtual GenerationResponse generate(const GenerationRequest& request) = 0;
    virtual std::string id() const = 0;
};

}  // namespace neggen
