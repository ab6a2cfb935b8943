#include "mion/time_series.hpp"

#include "mion/errors.hpp"

namespace mion {

std::string_view to_string(Provenance p) {
  switch (p) {
    case Provenance::NumericJCM:
      return "numeric-JCM";
    case Provenance::NumericFull:
      return "numeric-full";
    case Provenance::Analytic:
      return "analytic";
  }
  return "unknown";
}

Provenance provenance_from_string(std::string_view s) {
  if (s == "numeric-JCM") return Provenance::NumericJCM;
  if (s == "numeric-full") return Provenance::NumericFull;
  if (s == "analytic") return Provenance::Analytic;
  throw ValidationError("unknown provenance '" + std::string(s) + "'");
}

void TimeSeries::add_channel(std::string name, std::string unit) {
  if (!times_.empty()) {
    throw ValidationError("channels must be declared before sampling");
  }
  if (has(name)) throw ValidationError("duplicate channel '" + name + "'");
  channels_.push_back({std::move(name), std::move(unit), {}});
}

const Channel* TimeSeries::find(std::string_view name) const {
  for (const auto& c : channels_) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

const Channel& TimeSeries::channel(std::string_view name) const {
  if (const Channel* c = find(name)) return *c;
  throw ValidationError("time series has no channel '" + std::string(name) + "'");
}

void TimeSeries::append(double t, const std::vector<double>& row) {
  if (row.size() != channels_.size()) {
    throw ValidationError("sample row has " + std::to_string(row.size()) +
                          " values for " + std::to_string(channels_.size()) +
                          " channels");
  }
  times_.push_back(t);
  for (std::size_t i = 0; i < row.size(); ++i) channels_[i].values.push_back(row[i]);
}

TimeSeries TimeSeries::from_columns(Provenance provenance, std::vector<double> times,
                                    std::vector<Channel> columns) {
  for (const auto& c : columns) {
    if (c.values.size() != times.size()) {
      throw ValidationError("channel '" + c.name + "' length " +
                            std::to_string(c.values.size()) + " != " +
                            std::to_string(times.size()) + " samples");
    }
  }
  TimeSeries ts(provenance);
  ts.times_ = std::move(times);
  ts.channels_ = std::move(columns);
  return ts;
}

}  // namespace mion
