#pragma once

#include <stdexcept>
#include <string>

namespace mitoscan {

// Base for all library errors. The CLI maps these to exit code 2.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// --- stack ingestion ---------------------------------------------------

struct MissingImageError : Error {
    MissingImageError(int band, int plane)
        : Error("missing image for band " + std::to_string(band) + ", plane " +
                std::to_string(plane)),
          band(band),
          plane(plane) {}
    int band;
    int plane;
};

struct DimensionMismatchError : Error {
    using Error::Error;
};

struct UnreadableFileError : Error {
    using Error::Error;
};

struct MalformedRowError : Error {
    MalformedRowError(int line_no, const std::string& what)
        : Error("line " + std::to_string(line_no) + ": " + what), line_no(line_no) {}
    int line_no;
};

struct OutOfBoundsCoordinateError : Error {
    using Error::Error;
};

// --- synthetic generation ----------------------------------------------

struct InfeasiblePlacementError : Error {
    using Error::Error;
};

struct InvalidSpecError : Error {
    using Error::Error;
};

// --- focus analysis ----------------------------------------------------

struct ImageTooSmallError : Error {
    using Error::Error;
};

struct BandOutOfRangeError : Error {
    using Error::Error;
};

struct EmptyMaskError : Error {
    using Error::Error;
};

// --- candidate detection -----------------------------------------------

struct DegenerateImageError : Error {
    using Error::Error;
};

// --- feature extraction ------------------------------------------------

struct WindowTooSmallError : Error {
    using Error::Error;
};

struct EmptyRegionError : Error {
    using Error::Error;
};

struct SchemaMismatchError : Error {
    using Error::Error;
};

// --- feature selection -------------------------------------------------

struct EmptyMatrixError : Error {
    using Error::Error;
};

struct NoValidSubsetError : Error {
    using Error::Error;
};

// --- classification ----------------------------------------------------

struct SingleClassDataError : Error {
    using Error::Error;
};

struct NonFiniteFeatureError : Error {
    using Error::Error;
};

// --- evaluation --------------------------------------------------------

struct InsufficientDataError : Error {
    using Error::Error;
};

}  // namespace mitoscan
