#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gridse/admittance.hpp"
#include "gridse/measurements.hpp"
#include "gridse/network.hpp"

namespace gridse {

/// True current and power of the flow leaving one branch end, plus the
/// voltage magnitude at that end.
struct FlowTruth {
  int branch = 0;
  BranchEnd end = BranchEnd::From;
  Real ir = 0, ii = 0;  // current into the line
  Real p = 0, q = 0;    // S = V_end * conj(I), network convention
  Real vm = 0;
};

/// Ground truth derived from a voltage state: x_true, per-bus injection
/// currents and per-(branch,end) flows.
struct TruthBundle {
  Vec x_true;
  std::vector<Complex> inj;      // injection current per bus, I = Y V
  std::vector<FlowTruth> flows;  // both ends of every in-service branch
};

/// Rectangular state from the case's stored voltage solution.
Vec true_state_from_case(const Network& net);

TruthBundle compute_truth(const Network& net, const AdmittanceBlocks& adm, const Vec& x_true);

enum class DeviceKind { None, Pmu, Rtu };

struct PlannedFlow {
  int branch = 0;
  BranchEnd end = BranchEnd::From;
  FlowKind kind = FlowKind::Rtu;
};

/// Which device sits where. Built-in plans:
///   rtu-all           RTU at every injection bus + exact slack-bus anchor
///   rtu-all-noanchor  same without the anchor (refused by the estimator)
///   pmu-all           PMU at every bus
///   fig5              PMU at buses 1 and 4, RTU at bus 5
struct DevicePlan {
  std::vector<DeviceKind> bus_device;  // per internal bus index
  std::vector<PlannedFlow> flows;
  bool anchor_at_slack = false;
};

DevicePlan make_builtin_plan(const std::string& name, const Network& net);
bool is_builtin_plan(const std::string& name);

/// Plan JSON: {"devices": {"<bus id>": "pmu"|"rtu"}, "flows": [{"branch": k,
/// "end": "from"|"to", "kind": "rtu"|"pmu"}], "anchor_at_slack": bool}.
DevicePlan plan_from_json(const Network& net, const std::string& text);

/// Noisy measurement synthesis per the experimental protocol: every measured
/// scalar is the true value plus an independent N(0, sigma^2) draw from a
/// seeded generator; weights are 1/sigma^2 (1 when sigma == 0). Injection
/// devices report current/power in device (load) convention; flow meters
/// report the flow into the line. ZI buses are the detected set minus
/// measured buses. The anchor, when planned, is the exact slack phasor.
MeasurementSet synthesize_measurements(const Network& net, const TruthBundle& truth,
                                       const DevicePlan& plan, Real sigma, std::uint64_t seed);

}  // namespace gridse
