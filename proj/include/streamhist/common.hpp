#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace streamhist {

using u8 = std::uint8_t;
using u32 = std::uint32_t;
using u64 = std::uint64_t;
using i64 = std::int64_t;
using u128 = unsigned __int128;

// base for all library errors; algorithmic aborts carry their data as fields
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InvalidParam : Error {
    using Error::Error;
};

struct IoError : Error {
    using Error::Error;
};

}  // namespace streamhist
