#include "conscope/errors.hpp"

#include <utility>

namespace conscope {

LoadError::LoadError(std::string file, std::string detail)
    : Error(file + ": " + detail), file_(std::move(file)) {}

}  // namespace conscope
