/*
 * Copyright 2026 The phenomtl Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "phenomtl/common.h"

#include <charconv>
#include <limits>

namespace phenomtl {

std::pair<std::string_view, std::string_view> split_code(std::string_view code) {
  const auto colon = code.find(':');
  if (colon == std::string_view::npos) return {std::string_view(), code};
  return {code.substr(0, colon), code.substr(colon + 1)};
}

int PatientRecord::count(std::string_view code) const {
  const auto [ns, value] = split_code(code);
  if (ns == kDemographicNamespace) {
    const auto eq = value.find('=');
    if (eq == std::string_view::npos) return 0;
    const auto key = value.substr(0, eq);
    const auto arg = value.substr(eq + 1);
    if (key == "gender") return arg == gender ? 1 : 0;
    if (key == "race") return arg == race ? 1 : 0;
    if (key == "ethnicity") return arg == ethnicity ? 1 : 0;
    if (key == "age") {
      int parsed = 0;
      const auto* end = arg.data() + arg.size();
      const auto res = std::from_chars(arg.data(), end, parsed);
      return (res.ec == std::errc() && res.ptr == end && parsed == age) ? 1 : 0;
    }
    return 0;
  }
  const auto it = codes.find(code);
  return it == codes.end() ? 0 : it->second;
}

uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

uint64_t derive_seed(uint64_t master, std::initializer_list<std::string_view> parts) {
  uint64_t state = splitmix64(master);
  for (const auto part : parts) {
    state = splitmix64(state ^ fnv1a64(part));
  }
  return state;
}

uint64_t Rng::below(uint64_t n) {
  // Rejection sampling removes modulo bias.
  const uint64_t limit = std::numeric_limits<uint64_t>::max() -
                         std::numeric_limits<uint64_t>::max() % n;
  uint64_t x = next();
  while (x >= limit) x = next();
  return x % n;
}

}  // namespace phenomtl
