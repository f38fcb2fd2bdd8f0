#pragma once

#include <filesystem>
#include <string>

#include "qmrdx/network_io.hpp"

#ifndef QMRDX_TEST_DATA
#define QMRDX_TEST_DATA "tests/data"
#endif

inline std::filesystem::path data_path(const std::string& name) {
  return std::filesystem::path(QMRDX_TEST_DATA) / name;
}

inline const qmrdx::QmrNetwork& snapshot() {
  static const qmrdx::QmrNetwork net = qmrdx::load_network(data_path("snapshot_symcat.json"));
  return net;
}

// snapshot ids in file order
namespace snap {
inline constexpr qmrdx::DiseaseId aaa = 0, hernia = 1;
inline constexpr qmrdx::FindingId sharp = 0, back = 1, breath = 2, groin = 3, ache = 4, upper = 5;
}  // namespace snap
