#pragma once

#include <string>
#include <vector>

#include "gridse/admittance.hpp"
#include "gridse/measurements.hpp"
#include "gridse/network.hpp"

namespace gridse {

enum class ChannelKind {
  PmuVoltage,   // V_i - z_v
  PmuCurrent,   // -Y_i x  vs  z_i (device convention)
  RtuCurrent,   // -Y_i x  vs  G V^R + B V^I (and the imaginary twin)
  FlowRtu,      // I_line(x)  vs  G V^R + B V^I at the metered end
  FlowPmu,      // I_line(x)  vs  z_i
  Anchor,       // V_i - z_v, pseudo
};

/// One scalar term of the ECF objective, kept as an affine residual
///   residual(x) = model(x) - observed(x)
///               = (model_row - obs_row) . x - obs_const.
/// model is the grid-physics side (a function of x only); observed is the
/// device side (measurement constants, plus G/B-scaled voltage terms for
/// RTU models). Metrics use model(x) as the channel estimate.
struct EcfChannel {
  ChannelKind kind;
  bool imag_part = false;  // the I-component twin of a phasor pair
  int bus = -1;
  int branch = -1;
  BranchEnd end = BranchEnd::From;
  Real weight = 1;  // raw weight
  SpVec model_row;
  SpVec obs_row;
  Real obs_const = 0;

  Real residual(const Vec& x) const {
    return model_row.dot(x) - obs_row.dot(x) - obs_const;
  }
  Real model_value(const Vec& x) const { return model_row.dot(x); }
  bool is_meter() const { return kind != ChannelKind::Anchor; }
  std::string label(const Network& net) const;
};

/// Objective channels in canonical order: PMU records (V^R, V^I, I^R, I^I),
/// RTU records (I^R, I^I), flows (R, I), anchor last.
std::vector<EcfChannel> build_ecf_channels(const Network& net, const AdmittanceBlocks& adm,
                                           const MeasurementSet& ms);

struct ZiRow {
  int bus;
  bool imag_part;
};

/// Equality-constrained quadratic program over x = [V^R; V^I].
/// H, g, c0 store the objective with weights normalized by weight_scale:
///   objective_raw(x) = weight_scale * (x^T H x + g.x + c0).
/// The normalization keeps the KKT system well scaled when raw weights are
/// large (1/sigma^2); x and the constraint rows are unaffected.
struct QpProblem {
  int n_state = 0;
  SpMat H;
  Vec g;
  Real c0 = 0;
  Real weight_scale = 1;
  SpMat C;  // ZI balance rows, exactly injection_rows of each ZI bus
  std::vector<ZiRow> row_index;
  std::vector<EcfChannel> channels;  // residual row per measurement channel

  Real objective_raw(const Vec& x) const {
    return weight_scale * (x.dot(H * x) + g.dot(x) + c0);
  }
};

enum class SolveStatus { Optimal, Singular, AnchorMissing };

struct EstimateResult {
  Vec x;
  Vec lambda;  // ZI multipliers in the stored (normalized) QP's scale
  Real objective = 0;  // raw-weight objective value at x
  Real kkt_residual = 0;
  SolveStatus status = SolveStatus::Optimal;
  Real weight_scale = 1;
  Real solve_seconds = 0;
};

/// Builds the reduced ECF problem: noise and unmeasured-bus slack variables
/// eliminated into the objective, ZI buses kept as hard constraint rows.
/// Throws EstimationError ("AnchorMissing") for an unanchorable set.
QpProblem assemble_qp(const Network& net, const AdmittanceBlocks& adm, const MeasurementSet& ms);

/// One-shot KKT solve: [2H, C^T; C, 0] [x; lambda] = [-g; 0] via a single
/// sparse LU factorization plus one iterative-refinement step. Never
/// iterates and needs no initial guess.
EstimateResult solve_qp(const QpProblem& qp);

struct NoiseRecord {
  std::string channel;
  Real value = 0;
};

/// Per-channel noise/mismatch terms recovered from the model equations at x.
std::vector<NoiseRecord> recover_noise_terms(const Network& net, const AdmittanceBlocks& adm,
                                             const MeasurementSet& ms, const Vec& x);

/// Infinity norm of [2Hx + g + C^T lambda; Cx].
Real kkt_residual(const QpProblem& qp, const EstimateResult& est);

}  // namespace gridse
