#pragma once

#include <string>
#include <vector>

#include "gridse/admittance.hpp"
#include "gridse/measurements.hpp"
#include "gridse/network.hpp"

namespace gridse {

/// Polar state of the classical estimator. The reference-bus angle is held
/// at the case value and carries no Jacobian column.
struct PolarState {
  Vec vm;       // p.u.
  Vec va;       // radians
  int ref = 0;  // reference (slack) bus index
};

/// Rectangular [V^R; V^I] from a polar state.
Vec polar_to_rect(const PolarState& st);

enum class WlsChannelKind {
  Vm,      // voltage magnitude
  P,       // injection active power, device (load) convention
  Q,       // injection reactive power, device convention
  Vr, Vi,  // PMU voltage phasor components
  Ir, Ii,  // PMU injection current components, device convention
  Pflow, Qflow,    // line flow power into the line
  IflowR, IflowI,  // line flow current components
  ZiP, ZiQ,        // zero-injection pseudo-measurements (z = 0)
};

struct WlsChannel {
  WlsChannelKind kind;
  int bus = -1;
  int branch = -1;
  BranchEnd end = BranchEnd::From;
  Real z = 0;
  Real weight = 1;
  bool is_meter() const { return kind != WlsChannelKind::ZiP && kind != WlsChannelKind::ZiQ; }
  std::string label(const Network& net) const;
};

/// Canonical channel order: PMU records (Vr, Vi, Ir, Ii), RTU records
/// (Vm, P, Q), flows, then ZI pseudo-channels (weighted 1e6 x the largest
/// measurement weight).
std::vector<WlsChannel> build_wls_channels(const Network& net, const MeasurementSet& ms);

/// h(x): the polar AC measurement function over the channel list.
Vec measurement_function(const Network& net, const AdmittanceBlocks& adm,
                         const MeasurementSet& ms, const PolarState& st);

/// Analytic dh/d[va (non-ref); vm].
SpMat measurement_jacobian(const Network& net, const AdmittanceBlocks& adm,
                           const MeasurementSet& ms, const PolarState& st);

enum class WlsInit { Flat, CaseData };
enum class WlsDivergence { None, MaxIters, Nan, SingularGain };

struct WlsOptions {
  int max_iters = 20;
  Real step_tol = 1e-8;
  bool line_search = false;  // off by default: divergence stays observable
  int max_halvings = 4;
  Real zi_weight_mult = 1e6;
};

struct WlsResult {
  PolarState state;
  int iterations = 0;
  bool converged = false;
  WlsDivergence divergence_reason = WlsDivergence::None;
  Real final_gradient_norm = 0;
  Real objective = 0;
};

/// Gauss-Newton WLS: delta = (J^T W J)^{-1} J^T W (z - h) until the step
/// infinity-norm drops below tol or the iteration cap hits.
WlsResult estimate_wls(const Network& net, const AdmittanceBlocks& adm, const MeasurementSet& ms,
                       WlsInit init, const WlsOptions& opts = {});

}  // namespace gridse
