#pragma once

#include <stdexcept>
#include <string>

namespace lczgrid {

// Base for everything thrown by this library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Problems the user can fix: bad paths, malformed files, misaligned grids,
// out-of-domain config values. The CLI maps these to exit code 2.
struct UserError : Error {
    using Error::Error;
};

struct IoError : UserError {
    using UserError::UserError;
};

// Grid alignment failures: CRS mismatch, non-integer cell ratio, origin
// misalignment, shape mismatch. Message names the failing precondition.
struct AlignmentError : UserError {
    using UserError::UserError;
};

}  // namespace lczgrid
