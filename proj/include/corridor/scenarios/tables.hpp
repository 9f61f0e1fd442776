#pragma once

#include <array>
#include <string>
#include <string_view>
#include <vector>

#include "corridor/network/scenario_document.hpp"

namespace corridor::scen {

// One published schedule row; cycle is 0 where the table gives none.
struct TableRow {
  std::string_view start;
  std::string_view end;
  int cycle;
  std::array<int, 5> offsets;
};

// Period is "AM", "NOON" or "PM".
const std::vector<TableRow>& table2_rows(std::string_view period);
const std::vector<TableRow>& synchro_rows(std::string_view period);
const std::vector<TableRow>& deeprl_rows(std::string_view period);

net::Schedule to_schedule(const std::vector<TableRow>& rows);

struct SweepRow {
  std::string_view period;
  int interval_min;
  double baseline;
  double deeprl;
  double percent;
};

// Average delays (s/km) and % difference per interval setting, as published.
const std::vector<SweepRow>& table3_rows();

inline const std::array<std::string_view, 3> kPeriods{"AM", "NOON", "PM"};

}  // namespace corridor::scen
