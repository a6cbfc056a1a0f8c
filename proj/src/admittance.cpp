#include "gridse/admittance.hpp"

#include <string>

#include "gridse/errors.hpp"

namespace gridse {

BranchAdmittance branch_admittance(const Branch& br, int branch_index) {
  if (br.r == 0.0 && br.x == 0.0)
    throw ModelError("SingularBranch: branch " + std::to_string(branch_index));
  const Complex ys = Real(1) / Complex(br.r, br.x);
  const Complex ysh(0.0, br.b_charging / 2.0);
  const Real tau = br.tap == 0.0 ? 1.0 : br.tap;
  const Real theta = deg2rad(br.shift);
  const Complex t = std::polar(tau, theta);  // tap * e^{j shift}

  BranchAdmittance a;
  a.yff = (ys + ysh) / (tau * tau);
  a.ytt = ys + ysh;
  a.yft = -ys / std::conj(t);
  a.ytf = -ys / t;
  return a;
}

AdmittanceBlocks build_ybus(const Network& net) {
  const int n = net.n_buses();
  std::vector<Triplet> tg, tb;
  tg.reserve(4 * net.n_branches() + n);
  tb.reserve(4 * net.n_branches() + n);

  auto stamp = [&](int i, int j, Complex y) {
    tg.emplace_back(i, j, y.real());
    tb.emplace_back(i, j, y.imag());
  };

  for (int k = 0; k < net.n_branches(); ++k) {
    const Branch& br = net.branch(k);
    if (!br.in_service) continue;
    const BranchAdmittance a = branch_admittance(br, k);
    const int f = net.index_of(br.from_bus);
    const int t = net.index_of(br.to_bus);
    stamp(f, f, a.yff);
    stamp(f, t, a.yft);
    stamp(t, f, a.ytf);
    stamp(t, t, a.ytt);
  }
  for (int i = 0; i < n; ++i) {
    const Bus& b = net.bus(i);
    if (b.Gs != 0.0 || b.Bs != 0.0) stamp(i, i, Complex(b.Gs, b.Bs));
  }

  AdmittanceBlocks adm;
  adm.n = n;
  adm.Gm.resize(n, n);
  adm.Bm.resize(n, n);
  adm.Gm.setFromTriplets(tg.begin(), tg.end());
  adm.Bm.setFromTriplets(tb.begin(), tb.end());
  adm.Gm.makeCompressed();
  adm.Bm.makeCompressed();
  return adm;
}

SparseRowPair injection_rows(const AdmittanceBlocks& adm, int bus_index) {
  if (bus_index < 0 || bus_index >= adm.n)
    throw ModelError("IndexOutOfRange: bus index " + std::to_string(bus_index));
  const int n = adm.n;
  SparseRowPair rows;
  rows.re.resize(2 * n);
  rows.im.resize(2 * n);
  for (SpMatRow::InnerIterator it(adm.Gm, bus_index); it; ++it) {
    rows.re.coeffRef(it.col()) += it.value();
    rows.im.coeffRef(n + it.col()) += it.value();
  }
  for (SpMatRow::InnerIterator it(adm.Bm, bus_index); it; ++it) {
    rows.re.coeffRef(n + it.col()) -= it.value();
    rows.im.coeffRef(it.col()) += it.value();
  }
  return rows;
}

SparseRowPair branch_current_rows(const Network& net, const AdmittanceBlocks& adm,
                                  int branch_index, BranchEnd end) {
  if (branch_index < 0 || branch_index >= net.n_branches())
    throw ModelError("IndexOutOfRange: branch index " + std::to_string(branch_index));
  const Branch& br = net.branch(branch_index);
  if (!br.in_service)
    throw ModelError("BranchOutOfService: branch " + std::to_string(branch_index));

  const BranchAdmittance a = branch_admittance(br, branch_index);
  const int f = net.index_of(br.from_bus);
  const int t = net.index_of(br.to_bus);
  const Complex y_self = end == BranchEnd::From ? a.yff : a.ytt;
  const Complex y_other = end == BranchEnd::From ? a.yft : a.ytf;
  const int i_self = end == BranchEnd::From ? f : t;
  const int i_other = end == BranchEnd::From ? t : f;

  const int n = adm.n;
  SparseRowPair rows;
  rows.re.resize(2 * n);
  rows.im.resize(2 * n);
  auto stamp = [&](int bus, Complex y) {
    // I += y * V_bus, split into real/imaginary parts of x
    rows.re.coeffRef(bus) += y.real();
    rows.re.coeffRef(n + bus) -= y.imag();
    rows.im.coeffRef(bus) += y.imag();
    rows.im.coeffRef(n + bus) += y.real();
  };
  stamp(i_self, y_self);
  stamp(i_other, y_other);
  return rows;
}

std::vector<int> detect_zero_injection_buses(const Network& net) {
  std::vector<int> zi;
  for (int i = 0; i < net.n_buses(); ++i) {
    const Bus& b = net.bus(i);
    if (!b.has_gen && b.Pd == 0.0 && b.Qd == 0.0 && b.Gs == 0.0 && b.Bs == 0.0)
      zi.push_back(i);
  }
  return zi;
}

Vec apply_stacked(const AdmittanceBlocks& adm, const Vec& x) {
  const int n = adm.n;
  Vec vr = x.head(n), vi = x.tail(n);
  Vec out(2 * n);
  out.head(n) = adm.Gm * vr - adm.Bm * vi;
  out.tail(n) = adm.Bm * vr + adm.Gm * vi;
  return out;
}

Eigen::VectorXcd complex_voltage(const Vec& x) {
  const int n = static_cast<int>(x.size()) / 2;
  Eigen::VectorXcd v(n);
  for (int i = 0; i < n; ++i) v(i) = Complex(x(i), x(n + i));
  return v;
}

}  // namespace gridse
