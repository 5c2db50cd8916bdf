#ifndef BKR_TESTS_TEST_UTIL_HPP_
#define BKR_TESTS_TEST_UTIL_HPP_

#include <gtest/gtest.h>

#include <cstddef>

#include "bkr/core.hpp"
#include "bkr/instance.hpp"

namespace testing_util {

// Code of the bkr::Error thrown by fn; records a failure if nothing is thrown.
template <typename Fn>
bkr::Errc error_of(Fn&& fn) {
  try {
    fn();
  } catch (const bkr::Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no bkr::Error thrown";
  return bkr::Errc::kConfigError;
}

// Instance of n random ciphertexts; features are compared bitwise only.
inline bkr::Instance random_instance(std::size_t n, bkr::Rng& rng) {
  bkr::Instance x;
  x.features.resize(n);
  for (auto& c : x.features) {
    rng.fill(c.nonce);
    c.payload = rng.bit();
  }
  return x;
}

// Copy of x with the payload bit of every feature where mask[i] is set flipped.
inline bkr::Instance with_changes(const bkr::Instance& x, const std::vector<bool>& mask) {
  bkr::Instance z = x;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i]) z.features[i].payload = bkr::flip(z.features[i].payload);
  }
  return z;
}

}  // namespace testing_util

#endif  // BKR_TESTS_TEST_UTIL_HPP_
