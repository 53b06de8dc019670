// Error taxonomy shared by every module. Three kinds matter to callers:
// input errors (bad arguments, shape/knot mismatches), domain errors
// (mathematically out of range, e.g. a matrix that is not PSD), and
// numeric errors (non-convergence, overflow, quadrature instability).
// The CLI maps input/domain to exit code 1 and numeric to exit code 2.
#pragma once

#include <stdexcept>
#include <string>

namespace lpspin {

class input_error : public std::runtime_error {
public:
    explicit input_error(const std::string& msg) : std::runtime_error(msg) {}
};

class domain_error : public std::runtime_error {
public:
    explicit domain_error(const std::string& msg) : std::runtime_error(msg) {}
};

class numeric_error : public std::runtime_error {
public:
    explicit numeric_error(const std::string& msg) : std::runtime_error(msg) {}
};

inline void require_input(bool ok, const std::string& msg) {
    if (!ok) throw input_error(msg);
}

inline void require_domain(bool ok, const std::string& msg) {
    if (!ok) throw domain_error(msg);
}

inline void require_numeric(bool ok, const std::string& msg) {
    if (!ok) throw numeric_error(msg);
}

} // namespace lpspin
