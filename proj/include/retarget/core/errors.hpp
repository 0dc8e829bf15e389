#pragma once

#include <stdexcept>
#include <string>

namespace retarget {

// Error taxonomy maps onto process exit codes: config/parameter/shape -> 2,
// dataset/file problems -> 3, numerical failures -> 4.
struct param_error : std::runtime_error {
    explicit param_error(const std::string& msg) : std::runtime_error(msg) {}
};

struct shape_error : param_error {
    explicit shape_error(const std::string& msg) : param_error(msg) {}
};

struct data_error : std::runtime_error {
    explicit data_error(const std::string& msg) : std::runtime_error(msg) {}
};

struct numeric_error : std::runtime_error {
    explicit numeric_error(const std::string& msg) : std::runtime_error(msg) {}
};

inline int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const numeric_error*>(&e)) return 4;
    if (dynamic_cast<const data_error*>(&e)) return 3;
    if (dynamic_cast<const param_error*>(&e)) return 2;
    return 1;
}

}  // namespace retarget
