#pragma once

#include <stdexcept>
#include <string>

namespace divq {

// Dimension or buffer-length disagreement between operands.
struct shape_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Argument outside the operation's domain (empty list, eps < 0, n < 2, ...).
struct domain_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// API misuse, e.g. stepping a terminal environment.
struct contract_error : std::logic_error {
    using std::logic_error::logic_error;
};

// Operation is valid but the object cannot serve it yet (buffer too small).
struct not_ready_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// CKA denominator below tolerance; similarity undefined for this pair.
struct undefined_similarity_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// NaN or Inf detected where all values must stay finite.
struct numeric_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Config or CSV text that does not match the documented grammar.
struct parse_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace divq
