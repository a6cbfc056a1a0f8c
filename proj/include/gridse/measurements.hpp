#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gridse/admittance.hpp"
#include "gridse/network.hpp"

namespace gridse {

/// PMU at a bus: voltage and injection-current phasors in rectangular
/// coordinates. Injection currents follow the device sign convention
/// (z_i = -(Y x)_i + noise), so the balance row Y_i x + z_i + n_i = 0
/// holds at the true state.
struct PmuInjectionMeas {
  int bus = 0;  // internal index
  Real z_vr = 0, z_vi = 0;
  Real z_ir = 0, z_ii = 0;
  Real w_v = 1, w_i = 1;
};

/// RTU at a bus: voltage magnitude plus drawn active/reactive power
/// (device convention: positive for load).
struct RtuInjectionMeas {
  int bus = 0;
  Real z_vm = 1;
  Real z_p = 0, z_q = 0;
  Real w = 1;
};

enum class FlowKind { Rtu, Pmu };

/// Line-flow meter at one end of a branch. RTU kind carries (|V|, P, Q) of
/// the flow leaving the bus into the line; PMU kind carries the current
/// phasor of that flow.
struct FlowMeas {
  int branch = 0;  // internal branch index
  BranchEnd end = BranchEnd::From;
  FlowKind kind = FlowKind::Rtu;
  Real z_vm = 1, z_pline = 0, z_qline = 0;  // rtu kind
  Real z_ir = 0, z_ii = 0;                  // pmu kind
  Real w = 1;
};

/// Known voltage phasor pseudo-measurement that fixes the global phase.
struct AnchorMeas {
  int bus = 0;
  Real z_vr = 1, z_vi = 0;
  Real w = 1;
};

struct MeasurementSet {
  std::vector<PmuInjectionMeas> pmu;
  std::vector<RtuInjectionMeas> rtu;
  std::vector<FlowMeas> flows;
  std::vector<int> zi_buses;  // sorted internal indices
  std::optional<AnchorMeas> anchor;
  Real sigma = 0.0;        // noise level the set was synthesized with
  std::uint64_t seed = 0;  // generator seed (metadata)
};

/// Equivalent shunt parameters of the RTU model, G = P/|V|^2, B = Q/|V|^2.
struct ShuntParams {
  Real G = 0, B = 0;
};

/// Throws MeasurementError ("NonPositiveVoltage") when z_vm <= 0.
ShuntParams rtu_shunt_params(Real z_vm, Real z_p, Real z_q);

enum class IssueKind {
  IndexOutOfRange,
  AnchorMissing,
  DuplicateRecord,
  ZiConflict,
  BranchOutOfService,
  BadField,
};

struct ValidationIssue {
  IssueKind kind;
  std::string detail;
};

struct ValidationReport {
  std::vector<ValidationIssue> issues;
  bool ok() const { return issues.empty(); }
  bool has(IssueKind kind) const;
};

/// Structural validation: index ranges, anchoring, duplicates, ZI conflicts.
ValidationReport validate_measurement_set(const Network& net, const MeasurementSet& ms);

/// JSON document I/O. Bus references use external ids, branch references the
/// 1-based row number of the case's branch table; both resolved at load time.
std::string measurement_set_to_json(const Network& net, const MeasurementSet& ms);
MeasurementSet measurement_set_from_json(const Network& net, const std::string& text);

}  // namespace gridse
