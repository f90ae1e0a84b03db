#pragma once

#include <stdexcept>
#include <string>

namespace rbt {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// bt-core
struct MalformedTree : Error { using Error::Error; };
struct UnresolvedHandler : Error { using Error::Error; };
struct UnknownNode : Error { using Error::Error; };
struct InvalidThreshold : Error { using Error::Error; };

// blackboard
struct DuplicateKey : Error { using Error::Error; };
struct TypeMismatch : Error { using Error::Error; };

// ltm
struct SyntaxError : Error { using Error::Error; };
struct SchemaError : Error { using Error::Error; };
struct UnknownTask : Error { using Error::Error; };

// instantiator
struct UnboundPlaceholder : Error { using Error::Error; };
struct NotReplaceable : Error { using Error::Error; };
struct NothingAttached : Error { using Error::Error; };

// emphasizer
struct InvalidParams : Error { using Error::Error; };

// runtime
struct EngineHalted : Error { using Error::Error; };

// sim
struct UnknownCase : Error { using Error::Error; };
struct OutOfReach : Error { using Error::Error; };
struct GripperOccupied : Error { using Error::Error; };
struct NotHeld : Error { using Error::Error; };

}  // namespace rbt
