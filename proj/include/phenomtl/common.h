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

// Shared primitives: the patient record, a portable random engine, and
// stable hashing used for bucketing and seed derivation.

#ifndef PHENOMTL_COMMON_H_
#define PHENOMTL_COMMON_H_

#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <utility>

namespace phenomtl {

// Namespace used for demographic pseudo-codes such as "DEMO:gender=F".
inline constexpr std::string_view kDemographicNamespace = "DEMO";

// A synthetic patient. Codes are "NS:code" keys with occurrence counts >= 1;
// timestamps are not modelled.
struct PatientRecord {
  int64_t id = 0;
  int age = 0;
  std::string gender;
  std::string race;
  std::string ethnicity;
  std::map<std::string, int, std::less<>> codes;

  // Occurrence count of `code`. Demographic pseudo-codes ("DEMO:gender=F",
  // "DEMO:race=...", "DEMO:ethnicity=...", "DEMO:age=N") resolve to 0 or 1.
  // Unknown codes count as 0.
  int count(std::string_view code) const;

  friend bool operator==(const PatientRecord&, const PatientRecord&) = default;
};

// Splits "NS:code" at the first colon. Returns {"", full} when no colon.
std::pair<std::string_view, std::string_view> split_code(std::string_view code);

// 64-bit FNV-1a over raw bytes.
inline constexpr uint64_t kFnvOffsetBasis = 14695981039346656037ULL;
inline constexpr uint64_t kFnvPrime = 1099511628211ULL;

constexpr uint64_t fnv1a64(std::string_view bytes) {
  uint64_t hash = kFnvOffsetBasis;
  for (const char c : bytes) {
    hash ^= static_cast<uint8_t>(c);
    hash *= kFnvPrime;
  }
  return hash;
}

uint64_t splitmix64(uint64_t x);

// Stable seed derived from a master seed and an ordered list of labels.
// Independent of call order and platform.
uint64_t derive_seed(uint64_t master, std::initializer_list<std::string_view> parts);

// Random engine with platform-independent derived distributions. The
// standard distributions are implementation-defined, so uniform doubles,
// bounded integers and shuffles are computed here from raw 64-bit draws.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  uint64_t next() { return engine_(); }

  // Uniform in [0, 1) with 53 bits of resolution.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n). Requires n > 0.
  uint64_t below(uint64_t n);

  bool bernoulli(double p) { return uniform() < p; }

  template <typename T>
  void shuffle(std::span<T> items) {
    for (size_t i = items.size(); i > 1; --i) {
      const size_t j = below(i);
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace phenomtl

#endif  // PHENOMTL_COMMON_H_
