#include "gridse/synth.hpp"

#include <algorithm>
#include <set>

#include <json.hpp>

#include "gridse/errors.hpp"
#include "gridse/rng.hpp"

namespace gridse {

Vec true_state_from_case(const Network& net) {
  const int n = net.n_buses();
  Vec x(2 * n);
  for (int i = 0; i < n; ++i) {
    const Bus& b = net.bus(i);
    if (b.vm <= 0.0) throw ModelError("ZeroVm: bus " + std::to_string(b.id));
    const Real th = deg2rad(b.va);
    x(i) = b.vm * std::cos(th);
    x(n + i) = b.vm * std::sin(th);
  }
  return x;
}

TruthBundle compute_truth(const Network& net, const AdmittanceBlocks& adm, const Vec& x_true) {
  const int n = net.n_buses();
  if (x_true.size() != 2 * n) throw ModelError("state vector has wrong dimension");

  TruthBundle truth;
  truth.x_true = x_true;

  const Vec ix = apply_stacked(adm, x_true);
  truth.inj.resize(n);
  for (int i = 0; i < n; ++i) truth.inj[i] = Complex(ix(i), ix(n + i));

  for (int k = 0; k < net.n_branches(); ++k) {
    if (!net.branch(k).in_service) continue;
    for (BranchEnd end : {BranchEnd::From, BranchEnd::To}) {
      const SparseRowPair rows = branch_current_rows(net, adm, k, end);
      FlowTruth ft;
      ft.branch = k;
      ft.end = end;
      ft.ir = rows.re.dot(x_true);
      ft.ii = rows.im.dot(x_true);
      const int bus = net.index_of(end == BranchEnd::From ? net.branch(k).from_bus
                                                          : net.branch(k).to_bus);
      const Complex v(x_true(bus), x_true(n + bus));
      const Complex s = v * std::conj(Complex(ft.ir, ft.ii));
      ft.p = s.real();
      ft.q = s.imag();
      ft.vm = std::abs(v);
      truth.flows.push_back(ft);
    }
  }
  return truth;
}

bool is_builtin_plan(const std::string& name) {
  return name == "rtu-all" || name == "rtu-all-noanchor" || name == "pmu-all" || name == "fig5";
}

DevicePlan make_builtin_plan(const std::string& name, const Network& net) {
  const int n = net.n_buses();
  DevicePlan plan;
  plan.bus_device.assign(n, DeviceKind::None);

  if (name == "rtu-all" || name == "rtu-all-noanchor") {
    const std::vector<int> zi = detect_zero_injection_buses(net);
    const std::set<int> zi_set(zi.begin(), zi.end());
    for (int i = 0; i < n; ++i)
      if (!zi_set.count(i)) plan.bus_device[i] = DeviceKind::Rtu;
    plan.anchor_at_slack = name == "rtu-all";
    return plan;
  }
  if (name == "pmu-all") {
    std::fill(plan.bus_device.begin(), plan.bus_device.end(), DeviceKind::Pmu);
    return plan;
  }
  if (name == "fig5") {
    plan.bus_device[net.index_of(1)] = DeviceKind::Pmu;
    plan.bus_device[net.index_of(4)] = DeviceKind::Pmu;
    plan.bus_device[net.index_of(5)] = DeviceKind::Rtu;
    return plan;
  }
  throw MeasurementError("unknown built-in plan '" + name + "'");
}

DevicePlan plan_from_json(const Network& net, const std::string& text) {
  using nlohmann::json;
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw MeasurementError(std::string("bad plan JSON: ") + e.what());
  }
  DevicePlan plan;
  plan.bus_device.assign(net.n_buses(), DeviceKind::None);
  try {
    for (const auto& [key, val] : j.value("devices", json::object()).items()) {
      const int idx = [&] {
        auto r = net.try_index_of(std::stoi(key));
        if (!r) throw MeasurementError("IndexOutOfRange: unknown bus id " + key + " in plan");
        return *r;
      }();
      if (plan.bus_device[idx] != DeviceKind::None)
        throw MeasurementError("PlanConflict: two devices at bus id " + key);
      const std::string kind = val.get<std::string>();
      if (kind == "pmu")
        plan.bus_device[idx] = DeviceKind::Pmu;
      else if (kind == "rtu")
        plan.bus_device[idx] = DeviceKind::Rtu;
      else
        throw MeasurementError("bad device kind '" + kind + "' in plan");
    }
    for (const auto& e : j.value("flows", json::array())) {
      PlannedFlow f;
      const int row = e.at("branch").get<int>();
      if (row < 1 || row > net.n_branches())
        throw MeasurementError("IndexOutOfRange: branch row " + std::to_string(row) + " in plan");
      f.branch = row - 1;
      const std::string end = e.at("end").get<std::string>();
      f.end = end == "to" ? BranchEnd::To : BranchEnd::From;
      const std::string kind = e.value("kind", "rtu");
      f.kind = kind == "pmu" ? FlowKind::Pmu : FlowKind::Rtu;
      plan.flows.push_back(f);
    }
    plan.anchor_at_slack = j.value("anchor_at_slack", false);
  } catch (const json::exception& e) {
    throw MeasurementError(std::string("bad plan JSON: ") + e.what());
  }
  return plan;
}

MeasurementSet synthesize_measurements(const Network& net, const TruthBundle& truth,
                                       const DevicePlan& plan, Real sigma, std::uint64_t seed) {
  if (sigma < 0.0) throw MeasurementError("NegativeSigma");
  const int n = net.n_buses();
  if (static_cast<int>(plan.bus_device.size()) != n)
    throw MeasurementError("PlanConflict: plan covers " + std::to_string(plan.bus_device.size()) +
                           " buses, network has " + std::to_string(n));

  GaussianSampler rng(seed);
  const Real w = sigma > 0.0 ? 1.0 / (sigma * sigma) : 1.0;

  MeasurementSet ms;
  ms.sigma = sigma;
  ms.seed = seed;

  // Draw order is part of the format: buses ascending (field order below),
  // then planned flows in order, so a seed pins the whole set.
  for (int i = 0; i < n; ++i) {
    switch (plan.bus_device[i]) {
      case DeviceKind::None:
        break;
      case DeviceKind::Pmu: {
        PmuInjectionMeas m;
        m.bus = i;
        m.z_vr = truth.x_true(i) + rng.next(sigma);
        m.z_vi = truth.x_true(n + i) + rng.next(sigma);
        m.z_ir = -truth.inj[i].real() + rng.next(sigma);
        m.z_ii = -truth.inj[i].imag() + rng.next(sigma);
        m.w_v = w;
        m.w_i = w;
        ms.pmu.push_back(m);
        break;
      }
      case DeviceKind::Rtu: {
        const Complex v(truth.x_true(i), truth.x_true(n + i));
        const Complex s = v * std::conj(truth.inj[i]);
        RtuInjectionMeas m;
        m.bus = i;
        m.z_vm = std::abs(v) + rng.next(sigma);
        m.z_p = -s.real() + rng.next(sigma);
        m.z_q = -s.imag() + rng.next(sigma);
        m.w = w;
        ms.rtu.push_back(m);
        break;
      }
    }
  }

  for (const PlannedFlow& pf : plan.flows) {
    auto it = std::find_if(truth.flows.begin(), truth.flows.end(), [&](const FlowTruth& ft) {
      return ft.branch == pf.branch && ft.end == pf.end;
    });
    if (it == truth.flows.end())
      throw MeasurementError("BranchOutOfService: planned flow on branch " +
                             std::to_string(pf.branch));
    FlowMeas f;
    f.branch = pf.branch;
    f.end = pf.end;
    f.kind = pf.kind;
    f.w = w;
    if (pf.kind == FlowKind::Rtu) {
      f.z_vm = it->vm + rng.next(sigma);
      f.z_pline = it->p + rng.next(sigma);
      f.z_qline = it->q + rng.next(sigma);
    } else {
      f.z_ir = it->ir + rng.next(sigma);
      f.z_ii = it->ii + rng.next(sigma);
    }
    ms.flows.push_back(f);
  }

  // ZI constraints apply to detected ZI buses that carry no device.
  for (int zi : detect_zero_injection_buses(net))
    if (plan.bus_device[zi] == DeviceKind::None) ms.zi_buses.push_back(zi);

  if (plan.anchor_at_slack) {
    AnchorMeas a;
    a.bus = net.slack_index();
    a.z_vr = truth.x_true(a.bus);
    a.z_vi = truth.x_true(n + a.bus);
    a.w = w;
    ms.anchor = a;
  }
  return ms;
}

}  // namespace gridse
