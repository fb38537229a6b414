#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "errors.hpp"
#include "rng.hpp"

namespace markovgen {

// One trajectory observed at strictly increasing times.
struct TimeSeries {
  int id = 0;
  std::vector<double> times;
  std::vector<double> values;

  size_t n_points() const { return times.size(); }

  void validate() const {
    if (times.size() != values.size()) {
      throw std::invalid_argument("TimeSeries: times/values length mismatch");
    }
    if (times.size() < 2) throw std::invalid_argument("TimeSeries: need >= 2 points");
    for (size_t i = 0; i + 1 < times.size(); ++i) {
      if (!(times[i] < times[i + 1])) {
        throw std::invalid_argument("TimeSeries: times not strictly increasing");
      }
    }
  }
};

struct DatasetMeta {
  std::string name;
  nlohmann::json params = nlohmann::json::object();
  std::uint64_t seed = 0;
};

struct Dataset {
  std::vector<TimeSeries> series;
  double horizon = 1.0;
  DatasetMeta meta;
};

// Trend dataset: per trajectory a sign s (+1 for even ids, -1 for odd, so
// half of all ids and any contiguous id range carry each trend), start
// x0 ~ N(0,1), then
//   x_{k+1} = x_k + s ((k+1)/n_steps)^2 + B eps,
// B ~ Bernoulli(noise_prob), eps ~ N(0, 0.5^2). Knot times are k/(n_steps-1).
inline Dataset gen_trend(int n_series, int n_steps, std::uint64_t seed,
                         double noise_prob = 0.2) {
  if (n_series < 2 || n_series % 2 != 0) {
    throw std::invalid_argument("gen_trend: n_series must be even and >= 2");
  }
  if (n_steps < 2) throw std::invalid_argument("gen_trend: n_steps < 2");
  Dataset ds;
  ds.horizon = 1.0;
  ds.meta = {"trend",
             {{"n_steps", n_steps}, {"noise_prob", noise_prob}, {"n_series", n_series}},
             seed};
  ds.series.reserve(static_cast<size_t>(n_series));
  for (int id = 0; id < n_series; ++id) {
    Rng rng = derive_stream(seed, static_cast<std::uint64_t>(id));
    const double s = id % 2 == 0 ? 1.0 : -1.0;
    TimeSeries ts;
    ts.id = id;
    ts.times.resize(static_cast<size_t>(n_steps));
    ts.values.resize(static_cast<size_t>(n_steps));
    ts.values[0] = rng.normal();
    for (int k = 0; k + 1 < n_steps; ++k) {
      const double trend = s * std::pow((k + 1) / static_cast<double>(n_steps), 2);
      const bool noisy = rng.bernoulli(noise_prob);
      const double eps = rng.normal(0.0, 0.5);
      ts.values[static_cast<size_t>(k) + 1] =
          ts.values[static_cast<size_t>(k)] + trend + (noisy ? eps : 0.0);
    }
    for (int k = 0; k < n_steps; ++k) {
      ts.times[static_cast<size_t>(k)] = k / static_cast<double>(n_steps - 1);
    }
    ds.series.push_back(std::move(ts));
  }
  return ds;
}

// Geometric Brownian motion via the exact log-Euler update
//   S_{k+1} = S_k exp((mu - sigma^2/2) dt + sigma sqrt(dt) eps)
inline Dataset gen_black_scholes(int n_series, int n_steps, double mu,
                                 double sigma, double s0, std::uint64_t seed) {
  if (n_series < 1) throw std::invalid_argument("gen_black_scholes: n_series < 1");
  if (n_steps < 2) throw std::invalid_argument("gen_black_scholes: n_steps < 2");
  if (!(sigma >= 0.0)) throw std::invalid_argument("gen_black_scholes: sigma < 0");
  if (!(s0 > 0.0)) throw std::invalid_argument("gen_black_scholes: s0 <= 0");
  Dataset ds;
  ds.horizon = 1.0;
  ds.meta = {"black_scholes",
             {{"n_steps", n_steps}, {"mu", mu}, {"sigma", sigma}, {"s0", s0},
              {"n_series", n_series}},
             seed};
  const double dt = 1.0 / (n_steps - 1);
  ds.series.reserve(static_cast<size_t>(n_series));
  for (int id = 0; id < n_series; ++id) {
    Rng rng = derive_stream(seed, static_cast<std::uint64_t>(id));
    TimeSeries ts;
    ts.id = id;
    ts.times.resize(static_cast<size_t>(n_steps));
    ts.values.resize(static_cast<size_t>(n_steps));
    ts.values[0] = s0;
    for (int k = 0; k + 1 < n_steps; ++k) {
      const double eps = rng.normal();
      ts.values[static_cast<size_t>(k) + 1] =
          ts.values[static_cast<size_t>(k)] *
          std::exp((mu - 0.5 * sigma * sigma) * dt + sigma * std::sqrt(dt) * eps);
    }
    for (int k = 0; k < n_steps; ++k) ts.times[static_cast<size_t>(k)] = k * dt;
    ds.series.push_back(std::move(ts));
  }
  return ds;
}

enum class SubsampleMode { random_irregular, equidistant };

// Keeps `keep` knots per series, always including both endpoints.
// random_irregular draws the interior knots without replacement, fresh per
// series; equidistant takes a rounded even-stride grid.
inline Dataset subsample(const Dataset& ds, int keep, SubsampleMode mode,
                         std::uint64_t seed) {
  Dataset out;
  out.horizon = ds.horizon;
  out.meta = ds.meta;
  out.meta.params["subsample_keep"] = keep;
  out.meta.params["subsample_mode"] =
      mode == SubsampleMode::random_irregular ? "random_irregular" : "equidistant";
  out.series.reserve(ds.series.size());
  for (const TimeSeries& ts : ds.series) {
    const int n = static_cast<int>(ts.n_points());
    if (keep < 2 || keep > n) {
      throw std::invalid_argument("subsample: keep=" + std::to_string(keep) +
                                  " outside [2," + std::to_string(n) + "]");
    }
    std::vector<int> idx;
    if (mode == SubsampleMode::equidistant) {
      idx.resize(static_cast<size_t>(keep));
      for (int j = 0; j < keep; ++j) {
        idx[static_cast<size_t>(j)] = static_cast<int>(
            std::llround(j * static_cast<double>(n - 1) / (keep - 1)));
      }
    } else {
      // partial Fisher-Yates over the interior indices
      std::vector<int> interior(static_cast<size_t>(n - 2));
      std::iota(interior.begin(), interior.end(), 1);
      Rng rng = derive_stream(seed, 0x737562 ^ static_cast<std::uint64_t>(ts.id));
      const int want = keep - 2;
      for (int j = 0; j < want; ++j) {
        const auto pick = j + static_cast<int>(rng.uniform_int(
                                  static_cast<std::uint64_t>(n - 2 - j)));
        std::swap(interior[static_cast<size_t>(j)], interior[static_cast<size_t>(pick)]);
      }
      idx.assign(interior.begin(), interior.begin() + want);
      idx.push_back(0);
      idx.push_back(n - 1);
      std::sort(idx.begin(), idx.end());
    }
    TimeSeries sub;
    sub.id = ts.id;
    for (int i : idx) {
      sub.times.push_back(ts.times[static_cast<size_t>(i)]);
      sub.values.push_back(ts.values[static_cast<size_t>(i)]);
    }
    out.series.push_back(std::move(sub));
  }
  return out;
}

// CSV format: header "series_id,t,value", one row per observation, rows
// grouped by series with ascending t. A JSON sidecar <path>.meta.json keeps
// {name, params, seed, T, n_series}.
inline void write_csv(const Dataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << "series_id,t,value\n";
  char buf[64];
  for (const TimeSeries& ts : ds.series) {
    for (size_t i = 0; i < ts.n_points(); ++i) {
      out << ts.id << ',';
      std::snprintf(buf, sizeof buf, "%.17g", ts.times[i]);
      out << buf << ',';
      std::snprintf(buf, sizeof buf, "%.17g", ts.values[i]);
      out << buf << '\n';
    }
  }
  if (!out) throw IoError("short write to " + path);
  nlohmann::json meta = {{"name", ds.meta.name},
                         {"params", ds.meta.params},
                         {"seed", ds.meta.seed},
                         {"T", ds.horizon},
                         {"n_series", ds.series.size()}};
  std::ofstream mout(path + ".meta.json");
  if (!mout) throw IoError("cannot write " + path + ".meta.json");
  mout << meta.dump(1) << "\n";
}

inline Dataset read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path);
  Dataset ds;
  std::string line;
  int lineno = 0;
  if (!std::getline(in, line)) throw IoError(path + ": empty file");
  ++lineno;
  if (line != "series_id,t,value") {
    throw IoError(path + ":1: expected header series_id,t,value");
  }
  TimeSeries cur;
  bool have_cur = false;
  auto flush = [&] {
    if (!have_cur) return;
    cur.validate();
    ds.series.push_back(std::move(cur));
    cur = TimeSeries{};
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto where = path + ":" + std::to_string(lineno);
    const size_t c1 = line.find(',');
    const size_t c2 = c1 == std::string::npos ? std::string::npos : line.find(',', c1 + 1);
    if (c2 == std::string::npos) throw IoError(where + ": expected 3 fields");
    int id;
    double t, v;
    try {
      size_t used = 0;
      id = std::stoi(line.substr(0, c1), &used);
      if (used != c1) throw std::invalid_argument("trailing junk");
      t = std::stod(line.substr(c1 + 1, c2 - c1 - 1), &used);
      if (used != c2 - c1 - 1) throw std::invalid_argument("trailing junk");
      v = std::stod(line.substr(c2 + 1), &used);
      if (used != line.size() - c2 - 1) throw std::invalid_argument("trailing junk");
    } catch (const std::exception&) {
      throw IoError(where + ": malformed row '" + line + "'");
    }
    if (!have_cur || id != cur.id) {
      if (have_cur) {
        for (const TimeSeries& prev : ds.series) {
          if (prev.id == id) throw IoError(where + ": series id " + std::to_string(id) + " not contiguous");
        }
      }
      flush();
      cur.id = id;
      have_cur = true;
    } else if (!cur.times.empty() && !(t > cur.times.back())) {
      throw IoError(where + ": times not strictly increasing");
    }
    cur.times.push_back(t);
    cur.values.push_back(v);
  }
  flush();
  if (ds.series.empty()) throw IoError(path + ": no data rows");
  double horizon = 0.0;
  for (const TimeSeries& ts : ds.series) horizon = std::max(horizon, ts.times.back());
  ds.horizon = horizon;
  std::ifstream min(path + ".meta.json");
  if (min) {
    try {
      nlohmann::json meta;
      min >> meta;
      ds.meta.name = meta.value("name", "");
      ds.meta.params = meta.value("params", nlohmann::json::object());
      ds.meta.seed = meta.value("seed", std::uint64_t{0});
      ds.horizon = meta.value("T", ds.horizon);
    } catch (const nlohmann::json::exception&) {
      // sidecar is optional; a broken one is ignored rather than fatal
    }
  }
  return ds;
}

// locate j with times[j] <= t < times[j+1]; t at the horizon maps to the
// last segment
inline int locate_segment(const TimeSeries& s, double t) {
  const int n = static_cast<int>(s.n_points());
  if (!(t >= s.times.front() && t <= s.times.back())) {
    throw std::domain_error("locate_segment: t outside the observed range");
  }
  const auto it = std::upper_bound(s.times.begin(), s.times.end(), t);
  int j = static_cast<int>(it - s.times.begin()) - 1;
  if (j > n - 2) j = n - 2;
  return j;
}

// knots j-m..j as (value, time), left-padded with (x_0, 0); length m+1
inline std::vector<std::pair<double, double>> memory_window(const TimeSeries& s,
                                                            int j, int m) {
  if (j < 0 || j >= static_cast<int>(s.n_points())) {
    throw std::invalid_argument("memory_window: knot index out of range");
  }
  std::vector<std::pair<double, double>> out;
  out.reserve(static_cast<size_t>(m) + 1);
  for (int k = j - m; k <= j; ++k) {
    if (k < 0) {
      out.emplace_back(s.values.front(), 0.0);
    } else {
      out.emplace_back(s.values[static_cast<size_t>(k)], s.times[static_cast<size_t>(k)]);
    }
  }
  return out;
}

}  // namespace markovgen
