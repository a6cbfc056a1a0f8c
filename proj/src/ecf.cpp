#include "gridse/ecf.hpp"

#include <chrono>
#include <limits>

#include <Eigen/SparseLU>

#include "gridse/errors.hpp"

namespace gridse {

std::string EcfChannel::label(const Network& net) const {
  const char* part = imag_part ? "I" : "R";
  switch (kind) {
    case ChannelKind::PmuVoltage:
      return "pmu_v" + std::string(part) + "@bus" + std::to_string(net.bus(bus).id);
    case ChannelKind::PmuCurrent:
      return "pmu_i" + std::string(part) + "@bus" + std::to_string(net.bus(bus).id);
    case ChannelKind::RtuCurrent:
      return "rtu_i" + std::string(part) + "@bus" + std::to_string(net.bus(bus).id);
    case ChannelKind::FlowRtu:
      return "flow_rtu_i" + std::string(part) + "@br" + std::to_string(branch + 1) +
             (end == BranchEnd::From ? "f" : "t");
    case ChannelKind::FlowPmu:
      return "flow_pmu_i" + std::string(part) + "@br" + std::to_string(branch + 1) +
             (end == BranchEnd::From ? "f" : "t");
    case ChannelKind::Anchor:
      return "anchor_v" + std::string(part) + "@bus" + std::to_string(net.bus(bus).id);
  }
  return "?";
}

namespace {

SpVec unit_row(int size, int index, Real value) {
  SpVec v(size);
  v.insert(index) = value;
  return v;
}

SpVec negate(const SpVec& v) {
  SpVec out = v;
  for (SpVec::InnerIterator it(out); it; ++it) it.valueRef() = -it.value();
  return out;
}

}  // namespace

std::vector<EcfChannel> build_ecf_channels(const Network& net, const AdmittanceBlocks& adm,
                                           const MeasurementSet& ms) {
  const int n = adm.n;
  const int nx = 2 * n;
  std::vector<EcfChannel> channels;

  auto push = [&](EcfChannel&& ch) {
    if (ch.obs_row.size() == 0) ch.obs_row.resize(nx);
    channels.push_back(std::move(ch));
  };

  for (const auto& m : ms.pmu) {
    const SparseRowPair rows = injection_rows(adm, m.bus);
    EcfChannel vr{ChannelKind::PmuVoltage, false, m.bus};
    vr.weight = m.w_v;
    vr.model_row = unit_row(nx, m.bus, 1.0);
    vr.obs_const = m.z_vr;
    push(std::move(vr));

    EcfChannel vi{ChannelKind::PmuVoltage, true, m.bus};
    vi.weight = m.w_v;
    vi.model_row = unit_row(nx, n + m.bus, 1.0);
    vi.obs_const = m.z_vi;
    push(std::move(vi));

    // Y_i x + z + n = 0: the device estimate of the current is -Y_i x.
    EcfChannel ir{ChannelKind::PmuCurrent, false, m.bus};
    ir.weight = m.w_i;
    ir.model_row = negate(rows.re);
    ir.obs_const = m.z_ir;
    push(std::move(ir));

    EcfChannel ii{ChannelKind::PmuCurrent, true, m.bus};
    ii.weight = m.w_i;
    ii.model_row = negate(rows.im);
    ii.obs_const = m.z_ii;
    push(std::move(ii));
  }

  for (const auto& m : ms.rtu) {
    const ShuntParams sp = rtu_shunt_params(m.z_vm, m.z_p, m.z_q);
    const SparseRowPair rows = injection_rows(adm, m.bus);

    // Y_i x + G V^R + B V^I + n = 0
    EcfChannel ir{ChannelKind::RtuCurrent, false, m.bus};
    ir.weight = m.w;
    ir.model_row = negate(rows.re);
    ir.obs_row.resize(nx);
    ir.obs_row.insert(m.bus) = sp.G;
    ir.obs_row.insert(n + m.bus) = sp.B;
    push(std::move(ir));

    // Y_i x + G V^I - B V^R + n = 0
    EcfChannel ii{ChannelKind::RtuCurrent, true, m.bus};
    ii.weight = m.w;
    ii.model_row = negate(rows.im);
    ii.obs_row.resize(nx);
    ii.obs_row.insert(m.bus) = -sp.B;
    ii.obs_row.insert(n + m.bus) = sp.G;
    push(std::move(ii));
  }

  for (const auto& f : ms.flows) {
    const SparseRowPair rows = branch_current_rows(net, adm, f.branch, f.end);
    const Branch& br = net.branch(f.branch);
    const int bus = net.index_of(f.end == BranchEnd::From ? br.from_bus : br.to_bus);
    if (f.kind == FlowKind::Rtu) {
      const ShuntParams sp = rtu_shunt_params(f.z_vm, f.z_pline, f.z_qline);
      EcfChannel ir{ChannelKind::FlowRtu, false, bus, f.branch, f.end};
      ir.weight = f.w;
      ir.model_row = rows.re;
      ir.obs_row.resize(nx);
      ir.obs_row.insert(bus) = sp.G;
      ir.obs_row.insert(n + bus) = sp.B;
      push(std::move(ir));

      EcfChannel ii{ChannelKind::FlowRtu, true, bus, f.branch, f.end};
      ii.weight = f.w;
      ii.model_row = rows.im;
      ii.obs_row.resize(nx);
      ii.obs_row.insert(bus) = -sp.B;
      ii.obs_row.insert(n + bus) = sp.G;
      push(std::move(ii));
    } else {
      EcfChannel ir{ChannelKind::FlowPmu, false, bus, f.branch, f.end};
      ir.weight = f.w;
      ir.model_row = rows.re;
      ir.obs_const = f.z_ir;
      push(std::move(ir));

      EcfChannel ii{ChannelKind::FlowPmu, true, bus, f.branch, f.end};
      ii.weight = f.w;
      ii.model_row = rows.im;
      ii.obs_const = f.z_ii;
      push(std::move(ii));
    }
  }

  if (ms.anchor) {
    const auto& a = *ms.anchor;
    EcfChannel ar{ChannelKind::Anchor, false, a.bus};
    ar.weight = a.w;
    ar.model_row = unit_row(nx, a.bus, 1.0);
    ar.obs_const = a.z_vr;
    push(std::move(ar));

    EcfChannel ai{ChannelKind::Anchor, true, a.bus};
    ai.weight = a.w;
    ai.model_row = unit_row(nx, n + a.bus, 1.0);
    ai.obs_const = a.z_vi;
    push(std::move(ai));
  }
  return channels;
}

QpProblem assemble_qp(const Network& net, const AdmittanceBlocks& adm, const MeasurementSet& ms) {
  const ValidationReport report = validate_measurement_set(net, ms);
  for (const auto& issue : report.issues) {
    if (issue.kind == IssueKind::AnchorMissing)
      throw EstimationError("AnchorMissing: " + issue.detail);
    if (issue.kind == IssueKind::IndexOutOfRange)
      throw EstimationError("IndexOutOfRange: " + issue.detail);
  }

  QpProblem qp;
  qp.n_state = 2 * adm.n;
  qp.channels = build_ecf_channels(net, adm, ms);

  Real wmax = 0;
  for (const auto& ch : qp.channels) wmax = std::max(wmax, ch.weight);
  qp.weight_scale = wmax > 0 ? wmax : 1.0;

  std::vector<Triplet> ht;
  Vec g = Vec::Zero(qp.n_state);
  Real c0 = 0;
  for (const auto& ch : qp.channels) {
    const Real w = ch.weight / qp.weight_scale;
    if (w == 0.0) continue;
    const SpVec row = ch.model_row - ch.obs_row;
    const Real c = -ch.obs_const;
    for (SpVec::InnerIterator it1(row); it1; ++it1) {
      for (SpVec::InnerIterator it2(row); it2; ++it2)
        ht.emplace_back(it1.index(), it2.index(), w * it1.value() * it2.value());
      g(it1.index()) += 2.0 * w * c * it1.value();
    }
    c0 += w * c * c;
  }
  qp.H.resize(qp.n_state, qp.n_state);
  qp.H.setFromTriplets(ht.begin(), ht.end());
  qp.H.makeCompressed();
  qp.g = std::move(g);
  qp.c0 = c0;

  std::vector<Triplet> ct;
  int row = 0;
  for (int zi : ms.zi_buses) {
    const SparseRowPair rows = injection_rows(adm, zi);
    for (SpVec::InnerIterator it(rows.re); it; ++it) ct.emplace_back(row, it.index(), it.value());
    qp.row_index.push_back({zi, false});
    ++row;
    for (SpVec::InnerIterator it(rows.im); it; ++it) ct.emplace_back(row, it.index(), it.value());
    qp.row_index.push_back({zi, true});
    ++row;
  }
  qp.C.resize(row, qp.n_state);
  qp.C.setFromTriplets(ct.begin(), ct.end());
  qp.C.makeCompressed();
  return qp;
}

EstimateResult solve_qp(const QpProblem& qp) {
  const auto t0 = std::chrono::steady_clock::now();
  const int nx = qp.n_state;
  const int m = static_cast<int>(qp.C.rows());
  const int dim = nx + m;

  std::vector<Triplet> kt;
  kt.reserve(2 * qp.H.nonZeros() + 2 * qp.C.nonZeros());
  for (int k = 0; k < qp.H.outerSize(); ++k)
    for (SpMat::InnerIterator it(qp.H, k); it; ++it)
      kt.emplace_back(it.row(), it.col(), 2.0 * it.value());
  for (int k = 0; k < qp.C.outerSize(); ++k)
    for (SpMat::InnerIterator it(qp.C, k); it; ++it) {
      kt.emplace_back(nx + it.row(), it.col(), it.value());
      kt.emplace_back(it.col(), nx + it.row(), it.value());
    }
  SpMat kkt(dim, dim);
  kkt.setFromTriplets(kt.begin(), kt.end());
  kkt.makeCompressed();

  Vec rhs = Vec::Zero(dim);
  rhs.head(nx) = -qp.g;

  EstimateResult est;
  est.weight_scale = qp.weight_scale;

  Eigen::SparseLU<SpMat> lu;
  lu.analyzePattern(kkt);
  lu.factorize(kkt);
  if (lu.info() != Eigen::Success) {
    est.status = SolveStatus::Singular;
    est.x = Vec::Zero(nx);
    est.lambda = Vec::Zero(m);
    est.kkt_residual = std::numeric_limits<Real>::infinity();
    est.solve_seconds = std::chrono::duration<Real>(std::chrono::steady_clock::now() - t0).count();
    return est;
  }

  Vec y = lu.solve(rhs);
  y += lu.solve(rhs - kkt * y);  // one refinement step

  est.x = y.head(nx);
  est.lambda = y.tail(m);
  if (!est.x.allFinite() || !est.lambda.allFinite()) {
    est.status = SolveStatus::Singular;
    est.kkt_residual = std::numeric_limits<Real>::infinity();
  } else {
    est.kkt_residual = kkt_residual(qp, est);
    est.objective = qp.objective_raw(est.x);
    const Real feas = m > 0 ? (qp.C * est.x).lpNorm<Eigen::Infinity>() : 0.0;
    est.status = (est.kkt_residual <= 1e-8 && feas <= 1e-10) ? SolveStatus::Optimal
                                                             : SolveStatus::Singular;
  }
  est.solve_seconds = std::chrono::duration<Real>(std::chrono::steady_clock::now() - t0).count();
  return est;
}

std::vector<NoiseRecord> recover_noise_terms(const Network& net, const AdmittanceBlocks& adm,
                                             const MeasurementSet& ms, const Vec& x) {
  if (x.size() != 2 * adm.n) throw ModelError("state vector has wrong dimension");
  std::vector<NoiseRecord> out;
  for (const auto& ch : build_ecf_channels(net, adm, ms)) {
    // For current-type channels residual(x) is exactly the slack source n;
    // for voltage channels it is the phasor mismatch.
    out.push_back({ch.label(net), ch.residual(x)});
  }
  return out;
}

Real kkt_residual(const QpProblem& qp, const EstimateResult& est) {
  Vec stat = 2.0 * (qp.H * est.x) + qp.g;
  if (qp.C.rows() > 0) stat += qp.C.transpose() * est.lambda;
  Real r = stat.lpNorm<Eigen::Infinity>();
  if (qp.C.rows() > 0) r = std::max(r, (qp.C * est.x).lpNorm<Eigen::Infinity>());
  return r;
}

}  // namespace gridse
