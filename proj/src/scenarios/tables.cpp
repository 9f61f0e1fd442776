#include "corridor/scenarios/tables.hpp"

#include "corridor/core/error.hpp"

namespace corridor::scen {

namespace {

const std::vector<TableRow> kTable2Am{
    {"05:00", "05:45", 110, {75, 66, 14, 19, 48}},
    {"05:45", "06:30", 90, {40, 40, 5, 0, 5}},
    {"06:30", "09:00", 120, {60, 60, 65, 75, 5}},
    {"09:00", "11:00", 90, {40, 40, 5, 0, 5}},
};
const std::vector<TableRow> kTable2Noon{
    {"10:00", "11:30", 90, {40, 40, 5, 0, 5}},
    {"11:30", "14:00", 105, {0, 0, 55, 55, 55}},
};
const std::vector<TableRow> kTable2Pm{
    {"14:00", "16:00", 105, {0, 0, 55, 55, 55}},
    {"16:00", "19:00", 120, {60, 60, 65, 75, 5}},
    {"19:00", "20:30", 105, {0, 0, 55, 55, 55}},
    {"20:30", "21:00", 90, {40, 40, 5, 0, 5}},
};

const std::vector<TableRow> kSynchroAm{
    {"05:00", "05:45", 0, {75, 66, 14, 19, 48}},
    {"05:45", "06:30", 0, {40, 40, 5, 0, 5}},
    {"06:30", "09:00", 0, {60, 60, 65, 75, 5}},
    {"09:00", "11:00", 0, {40, 40, 5, 0, 5}},
};
const std::vector<TableRow> kSynchroNoon{
    {"10:00", "12:00", 0, {40, 40, 5, 0, 5}},
    {"12:00", "14:00", 0, {0, 0, 55, 55, 55}},
};
const std::vector<TableRow> kSynchroPm{
    {"14:00", "16:00", 0, {0, 0, 55, 55, 55}},
    {"16:00", "19:00", 0, {60, 60, 65, 75, 5}},
    {"19:00", "20:30", 0, {0, 0, 55, 55, 55}},
    {"20:30", "21:00", 0, {40, 40, 5, 0, 5}},
};

const std::vector<TableRow> kDeepRlAm{
    {"05:00", "06:00", 0, {31, 8, 60, 43, 6}},
    {"06:00", "08:00", 0, {31, 55, 60, 43, 6}},
    {"08:00", "08:15", 0, {70, 86, 82, 43, 107}},
    {"08:15", "08:30", 0, {70, 86, 82, 59, 107}},
    {"08:30", "08:45", 0, {37, 73, 82, 59, 107}},
    {"08:45", "09:15", 0, {37, 86, 82, 59, 107}},
    {"09:15", "10:45", 0, {37, 73, 82, 59, 107}},
    {"10:45", "11:00", 0, {70, 86, 82, 59, 107}},
};
const std::vector<TableRow> kDeepRlNoon{
    {"10:00", "11:45", 0, {70, 86, 82, 59, 107}},
    {"11:45", "12:00", 0, {37, 72, 60, 43, 107}},
    {"12:00", "12:45", 0, {31, 55, 60, 43, 6}},
    {"12:45", "13:00", 0, {31, 55, 60, 71, 6}},
    {"13:00", "13:15", 0, {37, 73, 82, 59, 107}},
    {"13:15", "13:30", 0, {71, 72, 60, 97, 48}},
    {"13:30", "13:45", 0, {71, 72, 88, 97, 48}},
    {"13:45", "14:00", 0, {31, 72, 60, 43, 6}},
};
const std::vector<TableRow> kDeepRlPm{
    {"14:00", "14:30", 0, {50, 55, 15, 43, 81}},
    {"14:30", "14:45", 0, {71, 72, 60, 43, 48}},
    {"14:45", "15:00", 0, {31, 55, 60, 43, 6}},
    {"15:00", "15:30", 0, {71, 72, 88, 97, 48}},
    {"15:30", "15:45", 0, {31, 55, 60, 43, 6}},
    {"15:45", "16:15", 0, {71, 72, 60, 97, 48}},
    {"16:15", "16:30", 0, {31, 72, 60, 43, 6}},
    {"16:30", "16:45", 0, {31, 55, 60, 97, 6}},
    {"16:45", "17:15", 0, {31, 55, 60, 43, 6}},
    {"17:15", "17:30", 0, {71, 72, 60, 97, 6}},
    {"17:30", "19:45", 0, {31, 55, 60, 43, 6}},
    {"19:45", "20:00", 0, {71, 72, 88, 97, 46}},
    {"20:00", "20:45", 0, {31, 55, 60, 43, 6}},
    {"20:45", "21:00", 0, {19, 104, 60, 72, 107}},
};

const std::vector<SweepRow> kTable3{
    {"AM", 5, 53.17, 56.93, -7.06},    {"AM", 10, 53.13, 55.87, -5.15},   {"AM", 15, 53.46, 46.40, 13.21},
    {"AM", 30, 53.17, 54.03, -1.60},   {"AM", 45, 53.90, 54.95, -1.94},   {"NOON", 5, 43.19, 44.18, -2.30},
    {"NOON", 10, 43.16, 44.01, -1.97}, {"NOON", 15, 43.37, 42.32, 2.42},  {"NOON", 30, 43.23, 43.90, -1.55},
    {"NOON", 45, 43.21, 43.57, -0.82}, {"PM", 5, 45.18, 47.34, -4.79},    {"PM", 10, 45.16, 46.57, -3.13},
    {"PM", 15, 45.89, 43.04, 6.20},    {"PM", 30, 45.19, 46.88, -3.74},   {"PM", 45, 45.60, 46.55, -2.09},
};

template <class T>
const T& pick(std::string_view period, const T& am, const T& noon, const T& pm) {
  if (period == "AM") return am;
  if (period == "NOON") return noon;
  if (period == "PM") return pm;
  throw ConfigError("period", "unknown period '" + std::string(period) + "' (expected AM, NOON or PM)");
}

}  // namespace

const std::vector<TableRow>& table2_rows(std::string_view period) {
  return pick(period, kTable2Am, kTable2Noon, kTable2Pm);
}

const std::vector<TableRow>& synchro_rows(std::string_view period) {
  return pick(period, kSynchroAm, kSynchroNoon, kSynchroPm);
}

const std::vector<TableRow>& deeprl_rows(std::string_view period) {
  return pick(period, kDeepRlAm, kDeepRlNoon, kDeepRlPm);
}

net::Schedule to_schedule(const std::vector<TableRow>& rows) {
  net::Schedule s;
  for (const auto& r : rows) {
    net::ScheduleBlock b;
    b.start = parse_clock(r.start);
    b.end = parse_clock(r.end);
    if (r.cycle > 0) b.cycle = r.cycle;
    b.offsets.assign(r.offsets.begin(), r.offsets.end());
    s.push_back(std::move(b));
  }
  return s;
}

const std::vector<SweepRow>& table3_rows() { return kTable3; }

}  // namespace corridor::scen
