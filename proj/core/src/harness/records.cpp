#include "dair/harness/records.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

#include "dair/errors.hpp"

namespace dair::harness {
namespace {

constexpr std::string_view kRecordsHeader = "experiment,preset,seed,lambda,noise,fraction,metric,value";

std::string opt_text(const std::optional<double>& v) { return v ? format_number(*v) : std::string("NA"); }

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw IoError("write failed for " + path.string());
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double read_double(const std::string& text, const std::filesystem::path& path, std::size_t line) {
  double v = 0.0;
  const auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || p != text.data() + text.size()) {
    throw DataError(path.string() + ":" + std::to_string(line) + ": bad number '" + text + "'");
  }
  return v;
}

using GroupKey = std::tuple<std::string, std::string, double, double, double>;

GroupKey key_of(const RunRecord& r) { return {r.experiment, r.preset, r.lambda, r.noise, r.fraction}; }

}  // namespace

std::string format_number(double v) {
  char buf[64];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

void RunRecord::set(const std::string& name, std::optional<double> value) {
  if (value && !std::isfinite(*value)) value.reset();
  for (auto& [k, v] : metrics) {
    if (k == name) {
      v = value;
      return;
    }
  }
  metrics.emplace_back(name, value);
}

std::optional<double> RunRecord::metric(const std::string& name) const {
  for (const auto& [k, v] : metrics) {
    if (k == name) return v;
  }
  return std::nullopt;
}

double RunRecord::axis(SweepAxis a) const {
  switch (a) {
    case SweepAxis::kLambda: return lambda;
    case SweepAxis::kNoise: return noise;
    case SweepAxis::kFraction: return fraction;
  }
  return lambda;
}

double Aggregate::axis(SweepAxis a) const {
  switch (a) {
    case SweepAxis::kLambda: return lambda;
    case SweepAxis::kNoise: return noise;
    case SweepAxis::kFraction: return fraction;
  }
  return lambda;
}

std::vector<Aggregate> aggregate(const std::vector<RunRecord>& records) {
  if (records.empty()) throw DataError("aggregate: no records");
  std::vector<GroupKey> order;
  std::map<GroupKey, std::vector<const RunRecord*>> groups;
  for (const RunRecord& r : records) {
    auto [it, fresh] = groups.try_emplace(key_of(r));
    if (fresh) order.push_back(it->first);
    it->second.push_back(&r);
  }
  std::vector<Aggregate> out;
  for (const GroupKey& key : order) {
    const auto& members = groups.at(key);
    std::vector<std::string> names;
    for (const RunRecord* r : members) {
      for (const auto& [name, value] : r->metrics) {
        if (std::find(names.begin(), names.end(), name) == names.end()) names.push_back(name);
      }
    }
    for (const std::string& name : names) {
      Aggregate a;
      std::tie(a.experiment, a.preset, a.lambda, a.noise, a.fraction) = key;
      a.metric = name;
      std::vector<double> vals;
      for (const RunRecord* r : members) {
        if (const auto v = r->metric(name)) vals.push_back(*v);
      }
      a.n = vals.size();
      if (!vals.empty()) {
        double s = 0.0;
        for (double v : vals) s += v;
        const double mean = s / static_cast<double>(vals.size());
        a.mean = mean;
        if (vals.size() > 1) {
          double ss = 0.0;
          for (double v : vals) ss += (v - mean) * (v - mean);
          a.std = std::sqrt(ss / static_cast<double>(vals.size() - 1));
        }
      }
      out.push_back(std::move(a));
    }
  }
  return out;
}

void write_records_csv(const std::vector<RunRecord>& records, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << kRecordsHeader << "\n";
  for (const RunRecord& r : records) {
    for (const auto& [name, value] : r.metrics) {
      out << r.experiment << "," << r.preset << "," << r.seed << "," << format_number(r.lambda) << ","
          << format_number(r.noise) << "," << format_number(r.fraction) << "," << name << "," << opt_text(value)
          << "\n";
    }
  }
  finish(out, path);
}

std::vector<RunRecord> read_records_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kRecordsHeader) {
    throw DataError(path.string() + ": header must be '" + std::string(kRecordsHeader) + "'");
  }
  std::vector<RunRecord> out;
  std::map<std::tuple<std::string, std::string, std::uint64_t, double, double, double>, std::size_t> index;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != 8) throw DataError(path.string() + ":" + std::to_string(lineno) + ": expected 8 columns");
    std::uint64_t seed = 0;
    const auto [p, ec] = std::from_chars(cells[2].data(), cells[2].data() + cells[2].size(), seed);
    if (ec != std::errc() || p != cells[2].data() + cells[2].size()) {
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": bad seed '" + cells[2] + "'");
    }
    const double lambda = read_double(cells[3], path, lineno);
    const double noise = read_double(cells[4], path, lineno);
    const double fraction = read_double(cells[5], path, lineno);
    const auto k = std::make_tuple(cells[0], cells[1], seed, lambda, noise, fraction);
    auto it = index.find(k);
    if (it == index.end()) {
      RunRecord r;
      r.experiment = cells[0];
      r.preset = cells[1];
      r.seed = seed;
      r.lambda = lambda;
      r.noise = noise;
      r.fraction = fraction;
      out.push_back(std::move(r));
      it = index.emplace(k, out.size() - 1).first;
    }
    std::optional<double> value;
    if (cells[7] != "NA") value = read_double(cells[7], path, lineno);
    out[it->second].set(cells[6], value);
  }
  return out;
}

void write_aggregates_csv(const std::vector<Aggregate>& aggregates, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "experiment,preset,lambda,noise,fraction,metric,n,mean,std\n";
  for (const Aggregate& a : aggregates) {
    out << a.experiment << "," << a.preset << "," << format_number(a.lambda) << "," << format_number(a.noise) << ","
        << format_number(a.fraction) << "," << a.metric << "," << a.n << "," << (a.mean ? format_number(*a.mean) : "")
        << "," << (a.std ? format_number(*a.std) : "") << "\n";
  }
  finish(out, path);
}

void write_timings_csv(const std::vector<RunRecord>& records, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "experiment,preset,seed,lambda,noise,fraction,wall_seconds\n";
  for (const RunRecord& r : records) {
    out << r.experiment << "," << r.preset << "," << r.seed << "," << format_number(r.lambda) << ","
        << format_number(r.noise) << "," << format_number(r.fraction) << "," << format_number(r.wall_seconds) << "\n";
  }
  finish(out, path);
}

std::vector<std::filesystem::path> write_plot_data(const std::vector<Aggregate>& aggregates, SweepAxis axis,
                                                   const std::filesystem::path& dir) {
  const SweepAxis all[] = {SweepAxis::kLambda, SweepAxis::kNoise, SweepAxis::kFraction};
  using Series = std::tuple<std::string, std::string, std::string>;  // preset, experiment, metric
  std::map<Series, std::map<SweepAxis, std::set<double>>> others;
  for (const Aggregate& a : aggregates) {
    auto& slot = others[{a.preset, a.experiment, a.metric}];
    for (SweepAxis o : all) {
      if (o != axis) slot[o].insert(a.axis(o));
    }
  }
  std::map<std::string, std::vector<const Aggregate*>> files;
  for (const Aggregate& a : aggregates) {
    std::string name = a.preset + "." + a.experiment + "." + a.metric;
    for (const auto& [o, values] : others.at({a.preset, a.experiment, a.metric})) {
      if (values.size() > 1) name += "." + std::string(to_string(o)) + "=" + format_number(a.axis(o));
    }
    files[name + ".csv"].push_back(&a);
  }
  std::vector<std::filesystem::path> written;
  for (auto& [name, rows] : files) {
    std::stable_sort(rows.begin(), rows.end(),
                     [axis](const Aggregate* l, const Aggregate* r) { return l->axis(axis) < r->axis(axis); });
    const auto path = dir / name;
    auto out = open_out(path);
    out << "x,mean,std\n";
    for (const Aggregate* a : rows) {
      out << format_number(a->axis(axis)) << "," << (a->mean ? format_number(*a->mean) : "") << ","
          << (a->std ? format_number(*a->std) : "") << "\n";
    }
    finish(out, path);
    written.push_back(path);
  }
  return written;
}

}  // namespace dair::harness
