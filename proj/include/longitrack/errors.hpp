#pragma once

#include <stdexcept>
#include <string>

namespace longitrack {

/// Base class for all errors raised by this library.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// volume / file IO
struct FormatError : Error { using Error::Error; };
struct IoError : Error { using Error::Error; };

// prompt encoding
struct PromptOutOfPatch : Error { using Error::Error; };
struct MissingChannel : Error { using Error::Error; };
struct ShapeMismatch : Error { using Error::Error; };

// sampling / segmentation
struct UnknownLesion : Error { using Error::Error; };
struct SeedInPadding : Error { using Error::Error; };
struct EmptyEnsemble : Error { using Error::Error; };

// fusion
struct DuplicateLesion : Error { using Error::Error; };
struct ReservedLabel : Error { using Error::Error; };

// evaluation
struct NoLesions : Error { using Error::Error; };
struct NoPatients : Error { using Error::Error; };
struct DuplicateId : Error { using Error::Error; };

// phantom generation
struct PlacementFailed : Error { using Error::Error; };

// run configuration
struct ConfigError : Error { using Error::Error; };

}  // namespace longitrack
