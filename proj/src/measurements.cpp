#include "gridse/measurements.hpp"

#include <algorithm>
#include <set>

#include <json.hpp>

#include "gridse/errors.hpp"

namespace gridse {

using nlohmann::json;

ShuntParams rtu_shunt_params(Real z_vm, Real z_p, Real z_q) {
  if (z_vm <= 0.0)
    throw MeasurementError("NonPositiveVoltage: z_vm = " + std::to_string(z_vm));
  const Real inv_v2 = 1.0 / (z_vm * z_vm);
  return {z_p * inv_v2, z_q * inv_v2};
}

bool ValidationReport::has(IssueKind kind) const {
  return std::any_of(issues.begin(), issues.end(),
                     [&](const ValidationIssue& i) { return i.kind == kind; });
}

ValidationReport validate_measurement_set(const Network& net, const MeasurementSet& ms) {
  ValidationReport rep;
  const int n = net.n_buses();
  const int nbr = net.n_branches();
  auto add = [&](IssueKind k, std::string detail) {
    rep.issues.push_back({k, std::move(detail)});
  };

  std::set<int> pmu_buses, rtu_buses;
  for (const auto& m : ms.pmu) {
    if (m.bus < 0 || m.bus >= n) {
      add(IssueKind::IndexOutOfRange, "pmu bus index " + std::to_string(m.bus));
      continue;
    }
    if (!pmu_buses.insert(m.bus).second)
      add(IssueKind::DuplicateRecord, "second pmu record at bus index " + std::to_string(m.bus));
    if (m.w_v < 0 || m.w_i < 0)
      add(IssueKind::BadField, "negative pmu weight at bus index " + std::to_string(m.bus));
  }
  for (const auto& m : ms.rtu) {
    if (m.bus < 0 || m.bus >= n) {
      add(IssueKind::IndexOutOfRange, "rtu bus index " + std::to_string(m.bus));
      continue;
    }
    if (!rtu_buses.insert(m.bus).second)
      add(IssueKind::DuplicateRecord, "second rtu record at bus index " + std::to_string(m.bus));
    if (m.z_vm <= 0)
      add(IssueKind::BadField, "rtu z_vm <= 0 at bus index " + std::to_string(m.bus));
    if (m.w < 0)
      add(IssueKind::BadField, "negative rtu weight at bus index " + std::to_string(m.bus));
  }
  std::set<std::tuple<int, int, int>> flow_keys;
  for (const auto& f : ms.flows) {
    if (f.branch < 0 || f.branch >= nbr) {
      add(IssueKind::IndexOutOfRange, "flow branch index " + std::to_string(f.branch));
      continue;
    }
    if (!net.branch(f.branch).in_service)
      add(IssueKind::BranchOutOfService, "flow on branch index " + std::to_string(f.branch));
    if (!flow_keys.insert({f.branch, static_cast<int>(f.end), static_cast<int>(f.kind)}).second)
      add(IssueKind::DuplicateRecord, "second flow record on branch index " + std::to_string(f.branch));
    if (f.kind == FlowKind::Rtu && f.z_vm <= 0)
      add(IssueKind::BadField, "flow z_vm <= 0 on branch index " + std::to_string(f.branch));
    if (f.w < 0)
      add(IssueKind::BadField, "negative flow weight on branch index " + std::to_string(f.branch));
  }
  for (int zi : ms.zi_buses) {
    if (zi < 0 || zi >= n) {
      add(IssueKind::IndexOutOfRange, "zi bus index " + std::to_string(zi));
      continue;
    }
    if (pmu_buses.count(zi) || rtu_buses.count(zi))
      add(IssueKind::ZiConflict, "bus index " + std::to_string(zi) + " is both ZI and measured");
  }
  if (ms.anchor) {
    if (ms.anchor->bus < 0 || ms.anchor->bus >= n)
      add(IssueKind::IndexOutOfRange, "anchor bus index " + std::to_string(ms.anchor->bus));
    if (ms.anchor->w < 0) add(IssueKind::BadField, "negative anchor weight");
  }

  // Without any PMU voltage phasor or anchor the problem has a free global
  // phase (and with RTU-only data a free scale), so it must be refused.
  if (ms.pmu.empty() && !ms.anchor)
    add(IssueKind::AnchorMissing, "no PMU voltage phasor and no anchor");

  return rep;
}

namespace {

const char* end_name(BranchEnd e) { return e == BranchEnd::From ? "from" : "to"; }
const char* kind_name(FlowKind k) { return k == FlowKind::Rtu ? "rtu" : "pmu"; }

BranchEnd end_from_name(const std::string& s) {
  if (s == "from") return BranchEnd::From;
  if (s == "to") return BranchEnd::To;
  throw MeasurementError("bad flow end '" + s + "'");
}

FlowKind kind_from_name(const std::string& s) {
  if (s == "rtu") return FlowKind::Rtu;
  if (s == "pmu") return FlowKind::Pmu;
  throw MeasurementError("bad flow kind '" + s + "'");
}

int resolve_bus(const Network& net, int external_id) {
  auto idx = net.try_index_of(external_id);
  if (!idx)
    throw MeasurementError("IndexOutOfRange: unknown bus id " + std::to_string(external_id));
  return *idx;
}

int resolve_branch(const Network& net, int row_1based) {
  if (row_1based < 1 || row_1based > net.n_branches())
    throw MeasurementError("IndexOutOfRange: branch row " + std::to_string(row_1based));
  return row_1based - 1;
}

}  // namespace

std::string measurement_set_to_json(const Network& net, const MeasurementSet& ms) {
  json j;
  j["sigma"] = ms.sigma;
  j["seed"] = ms.seed;
  j["pmu"] = json::array();
  for (const auto& m : ms.pmu)
    j["pmu"].push_back({{"bus", net.bus(m.bus).id},
                        {"z_vr", m.z_vr},
                        {"z_vi", m.z_vi},
                        {"z_ir", m.z_ir},
                        {"z_ii", m.z_ii},
                        {"w_v", m.w_v},
                        {"w_i", m.w_i}});
  j["rtu"] = json::array();
  for (const auto& m : ms.rtu)
    j["rtu"].push_back({{"bus", net.bus(m.bus).id},
                        {"z_vm", m.z_vm},
                        {"z_p", m.z_p},
                        {"z_q", m.z_q},
                        {"w", m.w}});
  j["flows"] = json::array();
  for (const auto& f : ms.flows) {
    json e = {{"branch", f.branch + 1},
              {"end", end_name(f.end)},
              {"kind", kind_name(f.kind)},
              {"w", f.w}};
    if (f.kind == FlowKind::Rtu) {
      e["z_vm"] = f.z_vm;
      e["z_pline"] = f.z_pline;
      e["z_qline"] = f.z_qline;
    } else {
      e["z_ir"] = f.z_ir;
      e["z_ii"] = f.z_ii;
    }
    j["flows"].push_back(e);
  }
  j["zi_buses"] = json::array();
  for (int zi : ms.zi_buses) j["zi_buses"].push_back(net.bus(zi).id);
  if (ms.anchor)
    j["anchor"] = {{"bus", net.bus(ms.anchor->bus).id},
                   {"z_vr", ms.anchor->z_vr},
                   {"z_vi", ms.anchor->z_vi},
                   {"w", ms.anchor->w}};
  else
    j["anchor"] = nullptr;
  return j.dump(2) + "\n";
}

MeasurementSet measurement_set_from_json(const Network& net, const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw MeasurementError(std::string("bad measurement JSON: ") + e.what());
  }
  MeasurementSet ms;
  try {
    ms.sigma = j.value("sigma", 0.0);
    ms.seed = j.value("seed", std::uint64_t{0});
    for (const auto& e : j.value("pmu", json::array())) {
      PmuInjectionMeas m;
      m.bus = resolve_bus(net, e.at("bus").get<int>());
      m.z_vr = e.at("z_vr");
      m.z_vi = e.at("z_vi");
      m.z_ir = e.at("z_ir");
      m.z_ii = e.at("z_ii");
      m.w_v = e.at("w_v");
      m.w_i = e.at("w_i");
      ms.pmu.push_back(m);
    }
    for (const auto& e : j.value("rtu", json::array())) {
      RtuInjectionMeas m;
      m.bus = resolve_bus(net, e.at("bus").get<int>());
      m.z_vm = e.at("z_vm");
      m.z_p = e.at("z_p");
      m.z_q = e.at("z_q");
      m.w = e.at("w");
      ms.rtu.push_back(m);
    }
    for (const auto& e : j.value("flows", json::array())) {
      FlowMeas f;
      f.branch = resolve_branch(net, e.at("branch").get<int>());
      f.end = end_from_name(e.at("end").get<std::string>());
      f.kind = kind_from_name(e.at("kind").get<std::string>());
      f.w = e.at("w");
      if (f.kind == FlowKind::Rtu) {
        f.z_vm = e.at("z_vm");
        f.z_pline = e.at("z_pline");
        f.z_qline = e.at("z_qline");
      } else {
        f.z_ir = e.at("z_ir");
        f.z_ii = e.at("z_ii");
      }
      ms.flows.push_back(f);
    }
    for (const auto& e : j.value("zi_buses", json::array()))
      ms.zi_buses.push_back(resolve_bus(net, e.get<int>()));
    std::sort(ms.zi_buses.begin(), ms.zi_buses.end());
    if (j.contains("anchor") && !j["anchor"].is_null()) {
      AnchorMeas a;
      a.bus = resolve_bus(net, j["anchor"].at("bus").get<int>());
      a.z_vr = j["anchor"].at("z_vr");
      a.z_vi = j["anchor"].at("z_vi");
      a.w = j["anchor"].at("w");
      ms.anchor = a;
    }
  } catch (const json::exception& e) {
    throw MeasurementError(std::string("bad measurement JSON: ") + e.what());
  }
  return ms;
}

}  // namespace gridse
