#pragma once

#include <cstddef>
#include <cstdint>

#include "uarmpe/model.hpp"

namespace uarmpe {

/// Random benchmark model: one domain of `domain_size` auto-named constants,
/// 2n unary boolean predicates and n parfactors of three atoms over at most
/// three variables X, Y, Z. Table weights lie strictly inside (0, 1).
/// Deterministic for a given seed.
Model gen_random(std::size_t n_parfactors, std::size_t domain_size, std::uint64_t seed);

/// Copy of `m` with every domain resized to `size` and auto-named. Throws
/// ValidationError when a constant written in the model falls outside.
Model with_domain_size(const Model& m, std::size_t size);

}  // namespace uarmpe
