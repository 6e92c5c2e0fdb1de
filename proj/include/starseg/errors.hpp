#pragma once

#include <stdexcept>
#include <string>

namespace starseg {

// Non-finite values detected during numerical work (CLI exit code 4).
struct numerical_error : std::runtime_error {
    explicit numerical_error(const std::string& what) : std::runtime_error(what) {}
};

struct io_error : std::runtime_error {
    explicit io_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace starseg
