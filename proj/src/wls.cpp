#include "gridse/wls.hpp"

#include <limits>

#include <Eigen/SparseCholesky>

#include "gridse/errors.hpp"

namespace gridse {

Vec polar_to_rect(const PolarState& st) {
  const int n = static_cast<int>(st.vm.size());
  Vec x(2 * n);
  for (int i = 0; i < n; ++i) {
    x(i) = st.vm(i) * std::cos(st.va(i));
    x(n + i) = st.vm(i) * std::sin(st.va(i));
  }
  return x;
}

std::string WlsChannel::label(const Network& net) const {
  auto bus_tag = [&] { return "@bus" + std::to_string(net.bus(bus).id); };
  auto br_tag = [&] {
    return "@br" + std::to_string(branch + 1) + (end == BranchEnd::From ? "f" : "t");
  };
  switch (kind) {
    case WlsChannelKind::Vm: return "vm" + bus_tag();
    case WlsChannelKind::P: return "p" + bus_tag();
    case WlsChannelKind::Q: return "q" + bus_tag();
    case WlsChannelKind::Vr: return "vr" + bus_tag();
    case WlsChannelKind::Vi: return "vi" + bus_tag();
    case WlsChannelKind::Ir: return "ir" + bus_tag();
    case WlsChannelKind::Ii: return "ii" + bus_tag();
    case WlsChannelKind::Pflow: return "pline" + br_tag();
    case WlsChannelKind::Qflow: return "qline" + br_tag();
    case WlsChannelKind::IflowR: return "iline_r" + br_tag();
    case WlsChannelKind::IflowI: return "iline_i" + br_tag();
    case WlsChannelKind::ZiP: return "zi_p" + bus_tag();
    case WlsChannelKind::ZiQ: return "zi_q" + bus_tag();
  }
  return "?";
}

std::vector<WlsChannel> build_wls_channels(const Network& net, const MeasurementSet& ms) {
  std::vector<WlsChannel> channels;
  Real wmax = 0;

  for (const auto& m : ms.pmu) {
    channels.push_back({WlsChannelKind::Vr, m.bus, -1, BranchEnd::From, m.z_vr, m.w_v});
    channels.push_back({WlsChannelKind::Vi, m.bus, -1, BranchEnd::From, m.z_vi, m.w_v});
    channels.push_back({WlsChannelKind::Ir, m.bus, -1, BranchEnd::From, m.z_ir, m.w_i});
    channels.push_back({WlsChannelKind::Ii, m.bus, -1, BranchEnd::From, m.z_ii, m.w_i});
    wmax = std::max({wmax, m.w_v, m.w_i});
  }
  for (const auto& m : ms.rtu) {
    channels.push_back({WlsChannelKind::Vm, m.bus, -1, BranchEnd::From, m.z_vm, m.w});
    channels.push_back({WlsChannelKind::P, m.bus, -1, BranchEnd::From, m.z_p, m.w});
    channels.push_back({WlsChannelKind::Q, m.bus, -1, BranchEnd::From, m.z_q, m.w});
    wmax = std::max(wmax, m.w);
  }
  for (const auto& f : ms.flows) {
    const Branch& br = net.branch(f.branch);
    const int bus = net.index_of(f.end == BranchEnd::From ? br.from_bus : br.to_bus);
    if (f.kind == FlowKind::Rtu) {
      channels.push_back({WlsChannelKind::Vm, bus, f.branch, f.end, f.z_vm, f.w});
      channels.push_back({WlsChannelKind::Pflow, bus, f.branch, f.end, f.z_pline, f.w});
      channels.push_back({WlsChannelKind::Qflow, bus, f.branch, f.end, f.z_qline, f.w});
    } else {
      channels.push_back({WlsChannelKind::IflowR, bus, f.branch, f.end, f.z_ir, f.w});
      channels.push_back({WlsChannelKind::IflowI, bus, f.branch, f.end, f.z_ii, f.w});
    }
    wmax = std::max(wmax, f.w);
  }

  const Real zi_w = 1e6 * (wmax > 0 ? wmax : 1.0);
  for (int zi : ms.zi_buses) {
    channels.push_back({WlsChannelKind::ZiP, zi, -1, BranchEnd::From, 0.0, zi_w});
    channels.push_back({WlsChannelKind::ZiQ, zi, -1, BranchEnd::From, 0.0, zi_w});
  }
  return channels;
}

namespace {

// Shared per-state quantities for h and J evaluation.
struct PolarEval {
  Eigen::VectorXcd v;    // bus voltages
  Eigen::VectorXcd inj;  // Y v
  Eigen::VectorXcd s;    // v .* conj(inj)
};

PolarEval evaluate_state(const AdmittanceBlocks& adm, const PolarState& st) {
  const int n = adm.n;
  PolarEval ev;
  ev.v.resize(n);
  for (int i = 0; i < n; ++i) ev.v(i) = std::polar(st.vm(i), st.va(i));
  Vec vr(n), vi(n);
  for (int i = 0; i < n; ++i) {
    vr(i) = ev.v(i).real();
    vi(i) = ev.v(i).imag();
  }
  Vec ir = adm.Gm * vr - adm.Bm * vi;
  Vec ii = adm.Bm * vr + adm.Gm * vi;
  ev.inj.resize(n);
  ev.s.resize(n);
  for (int i = 0; i < n; ++i) {
    ev.inj(i) = Complex(ir(i), ii(i));
    ev.s(i) = ev.v(i) * std::conj(ev.inj(i));
  }
  return ev;
}

Complex flow_current(const Network& net, int branch, BranchEnd end, const PolarEval& ev,
                     Complex* y_self, Complex* y_other, int* self_bus, int* other_bus) {
  const Branch& br = net.branch(branch);
  const BranchAdmittance a = branch_admittance(br, branch);
  const int f = net.index_of(br.from_bus);
  const int t = net.index_of(br.to_bus);
  *self_bus = end == BranchEnd::From ? f : t;
  *other_bus = end == BranchEnd::From ? t : f;
  *y_self = end == BranchEnd::From ? a.yff : a.ytt;
  *y_other = end == BranchEnd::From ? a.yft : a.ytf;
  return *y_self * ev.v(*self_bus) + *y_other * ev.v(*other_bus);
}

// Column layout of the reduced state: angles of non-reference buses first,
// then all magnitudes.
struct ColMap {
  int n, ref;
  int va(int bus) const { return bus < ref ? bus : (bus == ref ? -1 : bus - 1); }
  int vm(int bus) const { return n - 1 + bus; }
  int size() const { return 2 * n - 1; }
};

Vec eval_h(const Network& net, const AdmittanceBlocks& adm,
           const std::vector<WlsChannel>& channels, const PolarState& st) {
  const PolarEval ev = evaluate_state(adm, st);
  Vec h(channels.size());
  for (size_t c = 0; c < channels.size(); ++c) {
    const WlsChannel& ch = channels[c];
    switch (ch.kind) {
      case WlsChannelKind::Vm: h(c) = st.vm(ch.bus); break;
      case WlsChannelKind::Vr: h(c) = ev.v(ch.bus).real(); break;
      case WlsChannelKind::Vi: h(c) = ev.v(ch.bus).imag(); break;
      case WlsChannelKind::P: h(c) = -ev.s(ch.bus).real(); break;
      case WlsChannelKind::Q: h(c) = -ev.s(ch.bus).imag(); break;
      case WlsChannelKind::Ir: h(c) = -ev.inj(ch.bus).real(); break;
      case WlsChannelKind::Ii: h(c) = -ev.inj(ch.bus).imag(); break;
      case WlsChannelKind::ZiP: h(c) = ev.s(ch.bus).real(); break;
      case WlsChannelKind::ZiQ: h(c) = ev.s(ch.bus).imag(); break;
      case WlsChannelKind::Pflow:
      case WlsChannelKind::Qflow:
      case WlsChannelKind::IflowR:
      case WlsChannelKind::IflowI: {
        Complex ys, yo;
        int sb, ob;
        const Complex i_line = flow_current(net, ch.branch, ch.end, ev, &ys, &yo, &sb, &ob);
        if (ch.kind == WlsChannelKind::IflowR)
          h(c) = i_line.real();
        else if (ch.kind == WlsChannelKind::IflowI)
          h(c) = i_line.imag();
        else {
          const Complex s = ev.v(sb) * std::conj(i_line);
          h(c) = ch.kind == WlsChannelKind::Pflow ? s.real() : s.imag();
        }
        break;
      }
    }
  }
  return h;
}

SpMat eval_jacobian(const Network& net, const AdmittanceBlocks& adm,
                    const std::vector<WlsChannel>& channels, const PolarState& st) {
  const int n = adm.n;
  const ColMap cols{n, st.ref};
  const PolarEval ev = evaluate_state(adm, st);
  std::vector<Triplet> trips;
  trips.reserve(channels.size() * 8);

  auto add = [&](int row, int col, Real v) {
    if (col >= 0 && v != 0.0) trips.emplace_back(row, col, v);
  };
  // d h / d vm_k and d h / d va_k from the complex derivative of a quantity
  // whose sensitivity to V_k is dV = coef * dV_k:
  //   d/dvm_k = coef * V_k / vm_k,  d/dva_k = coef * j V_k
  auto add_complex = [&](int row, int k, Complex dv_coef, bool imag_part, Real sign) {
    const Complex dvm = dv_coef * ev.v(k) / st.vm(k);
    const Complex dva = dv_coef * Complex(0, 1) * ev.v(k);
    add(row, cols.vm(k), sign * (imag_part ? dvm.imag() : dvm.real()));
    add(row, cols.va(k), sign * (imag_part ? dva.imag() : dva.real()));
  };

  for (size_t c = 0; c < channels.size(); ++c) {
    const int row = static_cast<int>(c);
    const WlsChannel& ch = channels[c];
    switch (ch.kind) {
      case WlsChannelKind::Vm:
        add(row, cols.vm(ch.bus), 1.0);
        break;
      case WlsChannelKind::Vr:
        add_complex(row, ch.bus, Complex(1, 0), false, 1.0);
        break;
      case WlsChannelKind::Vi:
        add_complex(row, ch.bus, Complex(1, 0), true, 1.0);
        break;
      case WlsChannelKind::Ir:
      case WlsChannelKind::Ii: {
        // I_i = sum_k Y_ik V_k, device sign -1
        const bool imag_part = ch.kind == WlsChannelKind::Ii;
        const int i = ch.bus;
        for (SpMatRow::InnerIterator g(adm.Gm, i); g; ++g)
          add_complex(row, static_cast<int>(g.col()), Complex(g.value(), 0), imag_part, -1.0);
        for (SpMatRow::InnerIterator b(adm.Bm, i); b; ++b)
          add_complex(row, static_cast<int>(b.col()), Complex(0, b.value()), imag_part, -1.0);
        break;
      }
      case WlsChannelKind::P:
      case WlsChannelKind::Q:
      case WlsChannelKind::ZiP:
      case WlsChannelKind::ZiQ: {
        // S_i = V_i conj(I_i); dS = dV_i conj(I_i) + V_i conj(Y_ik dV_k)
        const bool imag_part = ch.kind == WlsChannelKind::Q || ch.kind == WlsChannelKind::ZiQ;
        const Real sign =
            (ch.kind == WlsChannelKind::P || ch.kind == WlsChannelKind::Q) ? -1.0 : 1.0;
        const int i = ch.bus;
        auto add_s_term = [&](int k, Complex y_ik) {
          // V_i conj(y_ik dV_k): conj flips the j of dva
          const Complex base = ev.v(i) * std::conj(y_ik * ev.v(k));
          const Complex dvm = base / st.vm(k);
          const Complex dva = base * Complex(0, -1);
          add(row, cols.vm(k), sign * (imag_part ? dvm.imag() : dvm.real()));
          add(row, cols.va(k), sign * (imag_part ? dva.imag() : dva.real()));
        };
        for (SpMatRow::InnerIterator g(adm.Gm, i); g; ++g)
          add_s_term(static_cast<int>(g.col()), Complex(g.value(), 0));
        for (SpMatRow::InnerIterator b(adm.Bm, i); b; ++b)
          add_s_term(static_cast<int>(b.col()), Complex(0, b.value()));
        // dV_i conj(I_i) part
        add_complex(row, i, std::conj(ev.inj(i)), imag_part, sign);
        break;
      }
      case WlsChannelKind::Pflow:
      case WlsChannelKind::Qflow:
      case WlsChannelKind::IflowR:
      case WlsChannelKind::IflowI: {
        Complex ys, yo;
        int sb, ob;
        const Complex i_line = flow_current(net, ch.branch, ch.end, ev, &ys, &yo, &sb, &ob);
        if (ch.kind == WlsChannelKind::IflowR || ch.kind == WlsChannelKind::IflowI) {
          const bool imag_part = ch.kind == WlsChannelKind::IflowI;
          add_complex(row, sb, ys, imag_part, 1.0);
          add_complex(row, ob, yo, imag_part, 1.0);
        } else {
          const bool imag_part = ch.kind == WlsChannelKind::Qflow;
          // S = V_sb conj(i_line)
          {  // dV_sb conj(i_line) + V_sb conj(ys dV_sb)
            const Complex b1 = std::conj(i_line);
            const Complex b2 = ev.v(sb) * std::conj(ys * ev.v(sb));
            const Complex dvm = b1 * ev.v(sb) / st.vm(sb) + b2 / st.vm(sb);
            const Complex dva = b1 * Complex(0, 1) * ev.v(sb) + b2 * Complex(0, -1);
            add(row, cols.vm(sb), imag_part ? dvm.imag() : dvm.real());
            add(row, cols.va(sb), imag_part ? dva.imag() : dva.real());
          }
          {  // V_sb conj(yo dV_ob)
            const Complex base = ev.v(sb) * std::conj(yo * ev.v(ob));
            const Complex dvm = base / st.vm(ob);
            const Complex dva = base * Complex(0, -1);
            add(row, cols.vm(ob), imag_part ? dvm.imag() : dvm.real());
            add(row, cols.va(ob), imag_part ? dva.imag() : dva.real());
          }
        }
        break;
      }
    }
  }
  SpMat jac(static_cast<int>(channels.size()), cols.size());
  jac.setFromTriplets(trips.begin(), trips.end());
  jac.makeCompressed();
  return jac;
}

PolarState initial_state(const Network& net, WlsInit init) {
  const int n = net.n_buses();
  PolarState st;
  st.vm.resize(n);
  st.va.resize(n);
  st.ref = net.slack_index();
  for (int i = 0; i < n; ++i) {
    if (init == WlsInit::CaseData) {
      st.vm(i) = net.bus(i).vm;
      st.va(i) = deg2rad(net.bus(i).va);
    } else {
      st.vm(i) = 1.0;
      st.va(i) = 0.0;
    }
  }
  // the reference angle is pinned to the case value in either start
  st.va(st.ref) = deg2rad(net.bus(st.ref).va);
  return st;
}

}  // namespace

Vec measurement_function(const Network& net, const AdmittanceBlocks& adm,
                         const MeasurementSet& ms, const PolarState& st) {
  return eval_h(net, adm, build_wls_channels(net, ms), st);
}

SpMat measurement_jacobian(const Network& net, const AdmittanceBlocks& adm,
                           const MeasurementSet& ms, const PolarState& st) {
  return eval_jacobian(net, adm, build_wls_channels(net, ms), st);
}

WlsResult estimate_wls(const Network& net, const AdmittanceBlocks& adm, const MeasurementSet& ms,
                       WlsInit init, const WlsOptions& opts) {
  const std::vector<WlsChannel> channels = build_wls_channels(net, ms);
  if (channels.empty()) throw EstimationError("empty measurement set");
  const int n = net.n_buses();
  const size_t m = channels.size();

  Vec z(m), w(m);
  for (size_t c = 0; c < m; ++c) {
    z(c) = channels[c].z;
    w(c) = channels[c].weight;
  }

  WlsResult res;
  res.state = initial_state(net, init);

  auto objective_at = [&](const PolarState& st) {
    const Vec r = z - eval_h(net, adm, channels, st);
    return r.dot(w.asDiagonal() * r);
  };

  const ColMap cols{n, res.state.ref};
  auto apply_step = [&](const PolarState& st, const Vec& dx) {
    PolarState out = st;
    for (int k = 0; k < n; ++k) {
      if (cols.va(k) >= 0) out.va(k) += dx(cols.va(k));
      out.vm(k) += dx(cols.vm(k));
    }
    return out;
  };

  for (int iter = 1; iter <= opts.max_iters; ++iter) {
    const Vec h = eval_h(net, adm, channels, res.state);
    if (!h.allFinite()) {
      res.divergence_reason = WlsDivergence::Nan;
      break;
    }
    const Vec r = z - h;
    const SpMat jac = eval_jacobian(net, adm, channels, res.state);
    const SpMat jtw = jac.transpose() * w.asDiagonal();
    const SpMat gain = (jtw * jac).pruned();
    const Vec grad = jtw * r;

    Eigen::SimplicialLDLT<SpMat> ldlt(gain);
    if (ldlt.info() != Eigen::Success) {
      res.divergence_reason = WlsDivergence::SingularGain;
      break;
    }
    Vec step = ldlt.solve(grad);
    if (!step.allFinite() || step.lpNorm<Eigen::Infinity>() > 1e6) {
      res.divergence_reason = WlsDivergence::SingularGain;
      break;
    }

    PolarState next = apply_step(res.state, step);
    if (opts.line_search) {
      const Real f0 = objective_at(res.state);
      Real scale = 1.0;
      for (int halving = 0; halving < opts.max_halvings && objective_at(next) > f0; ++halving) {
        scale *= 0.5;
        next = apply_step(res.state, (scale * step).eval());
      }
    }
    res.state = std::move(next);
    res.iterations = iter;

    if (step.lpNorm<Eigen::Infinity>() < opts.step_tol) {
      res.converged = true;
      break;
    }
    if (iter == opts.max_iters) res.divergence_reason = WlsDivergence::MaxIters;
  }

  const Vec h = eval_h(net, adm, channels, res.state);
  if (h.allFinite()) {
    const Vec r = z - h;
    const SpMat jac = eval_jacobian(net, adm, channels, res.state);
    res.final_gradient_norm = (jac.transpose() * (w.asDiagonal() * r)).lpNorm<Eigen::Infinity>();
    res.objective = r.dot(w.asDiagonal() * r);
  } else {
    res.final_gradient_norm = std::numeric_limits<Real>::quiet_NaN();
    res.objective = std::numeric_limits<Real>::quiet_NaN();
    if (res.divergence_reason == WlsDivergence::None && !res.converged)
      res.divergence_reason = WlsDivergence::Nan;
  }
  return res;
}

}  // namespace gridse
