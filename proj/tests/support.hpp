#pragma once

#include <doctest.h>

#include <filesystem>
#include <functional>
#include <random>
#include <string>

#include "a2l/core/types.hpp"
#include "a2l/errors.hpp"

namespace a2l::testing {

/// Kind of the a2l::Error thrown by `fn`; fails the test when nothing is thrown.
inline ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an a2l::Error");
  return ErrorKind::IoFailure;
}

inline std::filesystem::path source_path(const std::string& rel) {
  return std::filesystem::path(A2L_SOURCE_DIR) / rel;
}

/// Fresh directory under the system temp dir, emptied first.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("a2l_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

/// Random 3-decimal displacement in [-limit, limit], as an integer count of millimetres.
inline double milli_draw(std::mt19937_64& rng, int limit_mm) {
  std::uniform_int_distribution<int> d(-limit_mm, limit_mm);
  return d(rng) / 1000.0;
}

inline ActionChunk pepper_actions() {
  return {make_action(0.0, 0.0, 0.0, 1), make_action(-0.002, 0.0, -0.007, 1),
          make_action(0.0, -0.004, -0.016, 1), make_action(0.002, -0.002, -0.014, 1),
          make_action(0.003, 0.0, -0.008, 1), make_action(0.002, 0.0, -0.011, 1),
          make_action(0.0, 0.0, -0.005, 1), make_action(0.0, 0.0, -0.007, 1),
          make_action(0.0, 0.0, -0.006, 1), make_action(0.001, -0.003, -0.003, 0)};
}

}  // namespace a2l::testing
