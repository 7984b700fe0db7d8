#pragma once

#include <stdexcept>
#include <string>

namespace xcal {

// Raised for invalid inputs: bad calendar dates, malformed catalogs,
// configuration errors and out-of-range orbital elements.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace xcal
