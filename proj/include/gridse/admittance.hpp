#pragma once

#include <vector>

#include "gridse/network.hpp"
#include "gridse/types.hpp"

namespace gridse {

/// Sparse real/imaginary blocks of the bus admittance matrix,
/// Ybus = Gm + j*Bm. The stacked real operator [[Gm,-Bm],[Bm,Gm]] maps
/// x = [V^R; V^I] to [I^R; I^I].
struct AdmittanceBlocks {
  int n = 0;
  SpMatRow Gm, Bm;
};

enum class BranchEnd { From, To };

/// Complex pi-model admittances of one branch as seen from its terminals:
/// I_from = yff*V_from + yft*V_to, I_to = ytf*V_from + ytt*V_to.
struct BranchAdmittance {
  Complex yff, yft, ytf, ytt;
};

/// Pi-model terminal admittances with tap/shift handling; throws ModelError
/// ("SingularBranch") when r == x == 0 on an in-service branch.
BranchAdmittance branch_admittance(const Branch& br, int branch_index);

/// Standard pi-model Ybus assembly over in-service branches plus bus shunts.
AdmittanceBlocks build_ybus(const Network& net);

/// A pair of sparse functionals over x = [V^R; V^I].
struct SparseRowPair {
  SpVec re, im;
};

/// Rows r with r.re . x = I_i^R and r.im . x = I_i^I (bus injection).
SparseRowPair injection_rows(const AdmittanceBlocks& adm, int bus_index);

/// Rows giving the complex current leaving `end` of a branch into the line.
SparseRowPair branch_current_rows(const Network& net, const AdmittanceBlocks& adm,
                                  int branch_index, BranchEnd end);

/// Buses with no generator, no load and no shunt, ascending internal indices.
std::vector<int> detect_zero_injection_buses(const Network& net);

/// Applies the stacked operator [[Gm,-Bm],[Bm,Gm]] to x.
Vec apply_stacked(const AdmittanceBlocks& adm, const Vec& x);

/// Complex bus voltages from the rectangular state vector.
Eigen::VectorXcd complex_voltage(const Vec& x);

}  // namespace gridse
