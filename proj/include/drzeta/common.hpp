#pragma once

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <stdexcept>
#include <string>

namespace drz {

using u32 = std::uint32_t;
using u64 = std::uint64_t;
using i64 = std::int64_t;
using u128 = unsigned __int128;
using i128 = __int128;

// contract check that stays on in optimized builds; failures indicate a
// violated precondition or a precision bug, never recoverable state
#define DRZ_REQUIRE(cond, msg)                                            \
  do {                                                                    \
    if (!(cond)) throw ::drz::contract_error((msg), __FILE__, __LINE__);  \
  } while (0)

struct contract_error : std::logic_error {
  contract_error(const std::string& msg, const char* file, int line)
      : std::logic_error(std::string(file) + ":" + std::to_string(line) +
                         ": " + msg) {}
};

}  // namespace drz
