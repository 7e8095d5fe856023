#pragma once

#include <stdexcept>
#include <string>

namespace orchestrion {

/// Precondition broken by the caller (bad arguments, mismatched resource kinds).
class ContractViolation : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

class NotFoundError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A caller tried to modify a registry entry it does not own.
class OwnershipError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Stored bytes no longer match their content address.
class TamperError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Action published on a topic that does not carry it, or malformed wire data.
class ProtocolError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid scenario or policy configuration.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace orchestrion
