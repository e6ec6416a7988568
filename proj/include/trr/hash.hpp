#pragma once

#include "trr/bytes.hpp"

#include <array>

namespace trr {

using Hash256 = std::array<std::uint8_t, 32>;

Hash256 sha256(ByteView data);
/// SHA-256 applied twice, as Bitcoin does for txids and message checksums.
Hash256 sha256d(ByteView data);

} // namespace trr
