#include "grainpd/observers.hpp"

#include <algorithm>
#include <cmath>

#include "grainpd/error.hpp"

namespace grainpd {

TimeSeries::TimeSeries(std::vector<std::string> columns) : columns_(std::move(columns)) {
  if (columns_.empty() || columns_.front() != "t") throw IoError("time series must start with column 't'");
}

bool TimeSeries::has_column(const std::string& name) const {
  return std::find(columns_.begin(), columns_.end(), name) != columns_.end();
}

std::size_t TimeSeries::column_index(const std::string& name) const {
  const auto it = std::find(columns_.begin(), columns_.end(), name);
  if (it == columns_.end()) throw IoError("missing column '" + name + "'");
  return static_cast<std::size_t>(it - columns_.begin());
}

std::vector<double> TimeSeries::column(const std::string& name) const {
  const std::size_t c = column_index(name);
  std::vector<double> out;
  out.reserve(rows_.size());
  for (const auto& r : rows_) out.push_back(r[c]);
  return out;
}

void TimeSeries::append(std::vector<double> row) {
  if (row.size() != columns_.size()) {
    throw IoError("row has " + std::to_string(row.size()) + " values for " + std::to_string(columns_.size()) +
                  " columns");
  }
  if (!rows_.empty() && !(row.front() > rows_.back().front())) throw IoError("time must increase between rows");
  rows_.push_back(std::move(row));
}

void GapObserver::columns(std::vector<std::string>& out) const {
  out.emplace_back("gap");
  out.emplace_back("contact");
}

void GapObserver::sample(Simulation& sim, std::vector<double>& row) {
  sim.ensure_forces();
  row.push_back(sim.body_gap(a_, b_));
  row.push_back(sim.contact().body_distance(static_cast<std::uint32_t>(a_), static_cast<std::uint32_t>(b_)) ? 1.0
                                                                                                             : 0.0);
}

CentroidObserver::CentroidObserver(const Simulation& sim, std::vector<std::size_t> bodies)
    : bodies_(std::move(bodies)) {
  for (auto b : bodies_) names_.push_back(sim.scene().bodies.at(b).name);
}

void CentroidObserver::columns(std::vector<std::string>& out) const {
  for (const auto& n : names_) {
    out.push_back("cx_" + n);
    out.push_back("cy_" + n);
    out.push_back("vx_" + n);
    out.push_back("vy_" + n);
  }
}

void CentroidObserver::sample(Simulation& sim, std::vector<double>& row) {
  for (auto b : bodies_) {
    const Vec2 c = sim.centroid(b);
    const Vec2 v = sim.centroid_velocity(b);
    row.insert(row.end(), {c.x, c.y, v.x, v.y});
  }
}

void EnergyObserver::columns(std::vector<std::string>& out) const {
  out.insert(out.end(), {"kinetic", "potential", "contact_energy", "elastic", "total_energy"});
}

void EnergyObserver::sample(Simulation& sim, std::vector<double>& row) {
  const auto e = sim.energy();
  row.insert(row.end(), {e.kinetic, e.potential, e.contact, e.elastic, e.total()});
}

DamageObserver::DamageObserver(const Simulation& sim) {
  for (std::size_t b = 0; b < sim.body_count(); ++b) {
    if (sim.graph(b) == nullptr) continue;
    bodies_.push_back(b);
    names_.push_back(sim.scene().bodies[b].name);
  }
}

void DamageObserver::columns(std::vector<std::string>& out) const {
  out.emplace_back("broken_bonds");
  for (const auto& n : names_) out.push_back("fz_" + n);
}

void DamageObserver::sample(Simulation& sim, std::vector<double>& row) {
  row.push_back(static_cast<double>(sim.broken_bonds()));
  const auto fz = sim.fracture_zone_sizes();
  for (auto b : bodies_) row.push_back(static_cast<double>(fz[b]));
}

ReactionObserver::ReactionObserver(const Simulation& sim, std::size_t wall, double face_length)
    : wall_(wall), face_length_(face_length), name_(sim.scene().bodies.at(wall).name) {
  if (!(face_length > 0.0)) throw ConfigError("experiment", "wall face length must be positive");
}

void ReactionObserver::columns(std::vector<std::string>& out) const {
  out.push_back("fx_" + name_);
  out.push_back("fy_" + name_);
  out.push_back("py_" + name_);
}

void ReactionObserver::sample(Simulation& sim, std::vector<double>& row) {
  const Vec2 f = sim.contact_resultant(wall_);
  row.insert(row.end(), {f.x, f.y, f.y / face_length_});
}

void Recorder::add(std::unique_ptr<Observer> obs) {
  if (!series_.empty()) throw Error("observers must be added before the first sample");
  std::vector<std::string> cols = series_.columns();
  obs->columns(cols);
  series_ = TimeSeries(std::move(cols));
  observers_.push_back(std::move(obs));
}

void Recorder::sample(Simulation& sim) {
  if (!series_.empty() && !(sim.time() > series_.rows().back().front())) return;
  row_.clear();
  row_.push_back(sim.time());
  for (auto& o : observers_) o->sample(sim, row_);
  series_.append(row_);
}

CorResult cor_from_records(const TimeSeries& series) {
  const auto gap = series.column("gap");
  const auto contact = series.column("contact");
  if (gap.empty()) throw Error("record is empty");
  CorResult r;
  r.h0 = gap.front();
  std::size_t k = 0;
  while (k < gap.size() && contact[k] == 0.0) ++k;
  if (k == gap.size()) throw Error("no contact between the two particles within the simulated time");
  while (k < gap.size() && contact[k] != 0.0) ++k;
  for (; k < gap.size(); ++k) r.h1 = std::max(r.h1, gap[k]);
  r.cor = std::sqrt(r.h1 / r.h0);
  return r;
}

std::vector<double> moving_average(std::span<const double> t, std::span<const double> y, double window) {
  std::vector<double> out(y.begin(), y.end());
  if (!(window > 0.0)) return out;
  const double half = 0.5 * window;
  std::size_t lo = 0;
  std::size_t hi = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    while (hi < t.size() && t[hi] - t[i] <= half) ++hi;
    while (t[i] - t[lo] > half) ++lo;
    // Fresh sum per window: no drift from a running total.
    double sum = 0.0;
    for (std::size_t k = lo; k < hi; ++k) sum += y[k];
    out[i] = sum / static_cast<double>(hi - lo);
  }
  return out;
}

std::vector<double> reaction_force(const TimeSeries& series, const std::string& wall, double window) {
  const auto t = series.column("t");
  const auto p = series.column("py_" + wall);
  return moving_average(t, p, window);
}

}  // namespace grainpd
