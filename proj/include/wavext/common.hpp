#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace wavext {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid user input (bad family name, bad domain spec, unknown flag value).
/// The CLI maps this to exit code 2.
class ConfigError : public Error {
public:
    using Error::Error;
};

using index_t = std::int64_t;

inline bool is_pow2(index_t n) { return n > 0 && (n & (n - 1)) == 0; }

inline int log2_exact(index_t n)
{
    if (!is_pow2(n)) throw Error("length " + std::to_string(n) + " is not a power of two");
    int j = 0;
    while ((index_t{1} << j) < n) ++j;
    return j;
}

/// Non-negative remainder.
inline index_t pmod(index_t a, index_t n)
{
    index_t r = a % n;
    return r < 0 ? r + n : r;
}

inline index_t floor_div(index_t a, index_t b)
{
    index_t d = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) --d;
    return d;
}

inline index_t ceil_div(index_t a, index_t b) { return -floor_div(-a, b); }

} // namespace wavext
