#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <stdexcept>
#include <string>

namespace morsefam {

// Arbitrary-precision scalars. All algebra in this library is exact;
// floating point appears only inside the flowcount module.
using Int = boost::multiprecision::cpp_int;
using Rat = boost::multiprecision::cpp_rational;

// Violation of a documented precondition (dimension mismatch, T ⊄ S, ...).
struct contract_error : std::logic_error {
    using std::logic_error::logic_error;
};

// Structurally invalid input data (d² != 0, filtration violation, ...).
struct data_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline Int abs_int(const Int& a) { return a < 0 ? Int(-a) : a; }

inline int sign_of(const Int& a) { return a < 0 ? -1 : (a > 0 ? 1 : 0); }

}  // namespace morsefam
