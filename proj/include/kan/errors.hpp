#pragma once

#include <stdexcept>
#include <string>

namespace kan {

// Shape mismatch in a graph primitive.
struct ShapeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed corpus files, embeddings, splits, empty documents.
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A document that tokenizes to nothing.
struct EmptyDocumentError : DataError {
    using DataError::DataError;
};

// Bad run configuration.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Non-finite values during optimization.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace kan
