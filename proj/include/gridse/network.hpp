#pragma once

#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "gridse/types.hpp"

namespace gridse {

enum class BusType { PQ = 1, PV = 2, Slack = 3, Isolated = 4 };

/// One bus row. Loads and shunts are stored in per-unit on the system base;
/// vm/va carry the case file's voltage solution (va in degrees).
struct Bus {
  int id = 0;  // external bus number
  BusType type = BusType::PQ;
  Real Pd = 0.0, Qd = 0.0;  // demand, p.u.
  Real Gs = 0.0, Bs = 0.0;  // shunt admittance, p.u.
  Real vm = 1.0;            // p.u.
  Real va = 0.0;            // degrees
  Real base_kv = 0.0;
  bool has_gen = false;  // at least one in-service generator at this bus
};

/// Pi-model branch. tap == 0 means nominal ratio 1.0; shift in degrees.
struct Branch {
  int from_bus = 0, to_bus = 0;  // external bus ids
  Real r = 0.0, x = 0.0;
  Real b_charging = 0.0;
  Real tap = 0.0;
  Real shift = 0.0;
  bool in_service = true;
};

/// Immutable network model with contiguous 0-based internal bus indexing.
class Network {
 public:
  Network(Real base_mva, std::vector<Bus> buses, std::vector<Branch> branches);

  Real base_mva() const { return base_mva_; }
  int n_buses() const { return static_cast<int>(buses_.size()); }
  int n_branches() const { return static_cast<int>(branches_.size()); }
  const std::vector<Bus>& buses() const { return buses_; }
  const std::vector<Branch>& branches() const { return branches_; }
  const Bus& bus(int index) const { return buses_.at(index); }
  const Branch& branch(int index) const { return branches_.at(index); }

  /// Internal index for an external bus id; throws ModelError if unknown.
  int index_of(int external_id) const;
  std::optional<int> try_index_of(int external_id) const;

  /// Index of the first slack bus, or 0 if the case declares none.
  int slack_index() const { return slack_index_; }

 private:
  Real base_mva_ = 100.0;
  std::vector<Bus> buses_;
  std::vector<Branch> branches_;
  std::unordered_map<int, int> index_;
  int slack_index_ = 0;
};

}  // namespace gridse
