#pragma once

#include <stdexcept>
#include <string>

namespace sva {

/// Error type thrown by every operation in the library. The message is
/// suitable for direct display on stderr.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& message) : std::runtime_error(message) {}
};

}  // namespace sva
