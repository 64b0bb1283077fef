#pragma once

#include <stdexcept>
#include <string>

namespace covqa {

// Shape/extent disagreement between tensors or between a tensor and a config.
struct ShapeError : std::runtime_error {
    explicit ShapeError(const std::string& msg) : std::runtime_error(msg) {}
};

// A mask with no valid position used where at least one is required.
struct MaskError : std::runtime_error {
    explicit MaskError(const std::string& msg) : std::runtime_error(msg) {}
};

// A sequence cannot fit within a configured capacity.
struct CapacityError : std::runtime_error {
    explicit CapacityError(const std::string& msg) : std::runtime_error(msg) {}
};

// An index outside its valid range (token id, class index, frame index).
struct IndexError : std::runtime_error {
    explicit IndexError(const std::string& msg) : std::runtime_error(msg) {}
};

// An API contract violated by the caller (e.g. backward on a non-scalar).
struct ContractError : std::runtime_error {
    explicit ContractError(const std::string& msg) : std::runtime_error(msg) {}
};

// Repeated evaluation of a supposedly deterministic function disagreed.
struct DeterminismError : std::runtime_error {
    explicit DeterminismError(const std::string& msg) : std::runtime_error(msg) {}
};

// Dataset content violates the manifest schema; messages carry the qid.
struct SchemaError : std::runtime_error {
    explicit SchemaError(const std::string& msg) : std::runtime_error(msg) {}
};

// A binary or text container is malformed (magic, version, payload).
struct FormatError : std::runtime_error {
    explicit FormatError(const std::string& msg) : std::runtime_error(msg) {}
};

// An invalid generator or training configuration.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// A key (qid, checkpoint name) that does not exist.
struct LookupError : std::runtime_error {
    explicit LookupError(const std::string& msg) : std::runtime_error(msg) {}
};

// Evaluation cannot produce well-defined metrics (empty set or level).
struct EvalError : std::runtime_error {
    explicit EvalError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace covqa
