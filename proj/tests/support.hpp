#pragma once

// Small builders shared by the unit tests.

#include <cstdint>
#include <string>
#include <vector>

#include "tim/dataset.hpp"

namespace tim::test {

inline Column cont(std::string name, std::vector<double> values) {
  Column c;
  c.name = std::move(name);
  c.kind = CovariateKind::Continuous;
  c.values = std::move(values);
  return c;
}

inline Column disc(std::string name, const std::vector<int>& codes, int levels = -1) {
  Column c;
  c.name = std::move(name);
  c.kind = CovariateKind::Discrete;
  int lv = levels;
  for (int v : codes) lv = std::max(lv, v + 1);
  for (int l = 0; l < lv; ++l) c.labels.push_back(std::to_string(l));
  for (int v : codes) c.values.push_back(v);
  return c;
}

inline CodeMatrix code_matrix(const std::vector<std::vector<std::int32_t>>& columns) {
  CodeMatrix m;
  m.columns = columns;
  for (const auto& col : columns) {
    int lv = 1;
    for (auto v : col) lv = std::max(lv, v + 1);
    m.cardinality.push_back(lv);
  }
  return m;
}

}  // namespace tim::test
