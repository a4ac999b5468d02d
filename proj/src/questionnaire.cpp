#include <algorithm>
#include <numeric>

#include "sono/error.hpp"
#include "sono/stats.hpp"

namespace sono::stats {

namespace {

void check_range(std::span<const double> items, double lo, double hi) {
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (!(items[i] >= lo && items[i] <= hi)) {
      fail(ErrorCode::ItemOutOfRange, "item " + std::to_string(i + 1) + " outside [" +
                                          std::to_string(static_cast<int>(lo)) + ", " +
                                          std::to_string(static_cast<int>(hi)) + "]");
    }
  }
}

}  // namespace

std::string_view to_string(Instrument i) {
  switch (i) {
    case Instrument::Sus: return "sus";
    case Instrument::NasaTlx: return "nasa_tlx";
    case Instrument::HriTrust: return "hri_trust";
  }
  return "sus";
}

Instrument instrument_from_string(std::string_view name) {
  if (name == "sus") return Instrument::Sus;
  if (name == "nasa_tlx") return Instrument::NasaTlx;
  if (name == "hri_trust") return Instrument::HriTrust;
  fail(ErrorCode::InvalidArgument, "unknown instrument '" + std::string(name) + "'");
}

double score_questionnaire(Instrument instrument, std::span<const double> items) {
  switch (instrument) {
    case Instrument::Sus: {
      if (items.size() != 10) fail(ErrorCode::WrongItemCount, "SUS has 10 items");
      check_range(items, 1.0, 5.0);
      double raw = 0.0;
      for (std::size_t i = 0; i < items.size(); ++i) {
        raw += i % 2 == 0 ? items[i] - 1.0 : 5.0 - items[i];
      }
      return raw * 2.5 / 100.0;
    }
    case Instrument::NasaTlx: {
      if (items.size() != 6) fail(ErrorCode::WrongItemCount, "NASA-TLX has 6 subscales");
      check_range(items, 0.0, 100.0);
      return std::accumulate(items.begin(), items.end(), 0.0) / 6.0 / 100.0;
    }
    case Instrument::HriTrust: {
      if (items.empty()) fail(ErrorCode::WrongItemCount, "trust scale needs at least one item");
      check_range(items, 1.0, 5.0);
      return std::accumulate(items.begin(), items.end(), 0.0) / static_cast<double>(items.size());
    }
  }
  fail(ErrorCode::InvalidArgument, "unknown instrument");
}

}  // namespace sono::stats
