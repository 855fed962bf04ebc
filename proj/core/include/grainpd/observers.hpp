#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "grainpd/engine.hpp"

namespace grainpd {

/// Column-oriented time series. The first column is always "t" and rows are
/// strictly increasing in t.
class TimeSeries {
 public:
  TimeSeries() : columns_{"t"} {}
  explicit TimeSeries(std::vector<std::string> columns);

  [[nodiscard]] const std::vector<std::string>& columns() const { return columns_; }
  [[nodiscard]] const std::vector<std::vector<double>>& rows() const { return rows_; }
  [[nodiscard]] std::size_t size() const { return rows_.size(); }
  [[nodiscard]] bool empty() const { return rows_.empty(); }
  [[nodiscard]] bool has_column(const std::string& name) const;
  /// Throws IoError naming the column when it is absent.
  [[nodiscard]] std::size_t column_index(const std::string& name) const;
  [[nodiscard]] std::vector<double> column(const std::string& name) const;

  /// Throws IoError when the row width is wrong or t does not increase.
  void append(std::vector<double> row);

  friend bool operator==(const TimeSeries&, const TimeSeries&) = default;

 private:
  std::vector<std::string> columns_;
  std::vector<std::vector<double>> rows_;
};

/// Contributes columns to a time-series row.
class Observer {
 public:
  virtual ~Observer() = default;
  virtual void columns(std::vector<std::string>& out) const = 0;
  virtual void sample(Simulation& sim, std::vector<double>& row) = 0;
};

/// `gap`: minimum node distance between two bodies; `contact`: 1 while they
/// share a contact pair.
class GapObserver : public Observer {
 public:
  GapObserver(std::size_t a, std::size_t b) : a_(a), b_(b) {}
  void columns(std::vector<std::string>& out) const override;
  void sample(Simulation& sim, std::vector<double>& row) override;

 private:
  std::size_t a_;
  std::size_t b_;
};

/// Centroid position and velocity per listed body: cx_<name>, cy_, vx_, vy_.
class CentroidObserver : public Observer {
 public:
  CentroidObserver(const Simulation& sim, std::vector<std::size_t> bodies);
  void columns(std::vector<std::string>& out) const override;
  void sample(Simulation& sim, std::vector<double>& row) override;

 private:
  std::vector<std::size_t> bodies_;
  std::vector<std::string> names_;
};

/// kinetic, potential, contact_energy, elastic, total_energy.
class EnergyObserver : public Observer {
 public:
  void columns(std::vector<std::string>& out) const override;
  void sample(Simulation& sim, std::vector<double>& row) override;
};

/// broken_bonds and fz_<name> (nodes with Z >= 1) for every deformable body.
class DamageObserver : public Observer {
 public:
  explicit DamageObserver(const Simulation& sim);
  void columns(std::vector<std::string>& out) const override;
  void sample(Simulation& sim, std::vector<double>& row) override;

 private:
  std::vector<std::size_t> bodies_;
  std::vector<std::string> names_;
};

/// Contact reaction on a wall: fx_<name>, fy_<name> (N per metre of
/// thickness) and py_<name> = fy / face length (Pa).
class ReactionObserver : public Observer {
 public:
  ReactionObserver(const Simulation& sim, std::size_t wall, double face_length);
  void columns(std::vector<std::string>& out) const override;
  void sample(Simulation& sim, std::vector<double>& row) override;

 private:
  std::size_t wall_;
  double face_length_;
  std::string name_;
};

/// Collects observers and the series they fill.
class Recorder {
 public:
  void add(std::unique_ptr<Observer> obs);
  void sample(Simulation& sim);
  [[nodiscard]] const TimeSeries& series() const { return series_; }
  [[nodiscard]] TimeSeries& series() { return series_; }

 private:
  std::vector<std::unique_ptr<Observer>> observers_;
  TimeSeries series_;
  std::vector<double> row_;
};

/// Coefficient of restitution from a record with `gap` and `contact` columns:
/// H0 is the first gap, H1 the largest gap after the first contact has ended
/// (0 if it never ends), C_R = sqrt(H1 / H0). Throws Error if no contact occurs.
struct CorResult {
  double h0 = 0.0;
  double h1 = 0.0;
  double cor = 0.0;
};
[[nodiscard]] CorResult cor_from_records(const TimeSeries& series);

/// Centred moving average: each value is the mean of the samples within
/// window/2 of its time. A zero window returns the input.
[[nodiscard]] std::vector<double> moving_average(std::span<const double> t, std::span<const double> y, double window);

/// Smoothed per-area vertical reaction of a wall, from the py_<wall> column.
[[nodiscard]] std::vector<double> reaction_force(const TimeSeries& series, const std::string& wall, double window);

}  // namespace grainpd
