#include "gridse/matpower.hpp"

#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "gridse/errors.hpp"

namespace gridse {
namespace {

struct Row {
  std::vector<Real> values;
  int line = 0;  // 1-based line number of the row start
};

// Strips '%' comments, keeping line structure intact.
std::string strip_comments(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool in_comment = false;
  for (char c : text) {
    if (c == '\n') {
      in_comment = false;
      out.push_back(c);
    } else if (in_comment) {
      // drop
    } else if (c == '%') {
      in_comment = true;
    } else {
      out.push_back(c);
    }
  }
  return out;
}

int line_of(std::string_view text, size_t pos) {
  int line = 1;
  for (size_t i = 0; i < pos && i < text.size(); ++i)
    if (text[i] == '\n') ++line;
  return line;
}

// Locates `mpc.<name> = [ ... ];` and splits the bracket body into rows.
// Rows are separated by ';' or newlines.
std::vector<Row> parse_matrix(std::string_view text, const std::string& name) {
  const std::string key = "mpc." + name;
  size_t pos = 0;
  while (true) {
    pos = text.find(key, pos);
    if (pos == std::string_view::npos)
      throw ParseError("MissingTable: " + name);
    size_t after = pos + key.size();
    // must be followed by '=' (possibly spaced), not a longer identifier
    if (after < text.size() && (std::isalnum(static_cast<unsigned char>(text[after])) || text[after] == '_')) {
      pos = after;
      continue;
    }
    size_t eq = text.find_first_not_of(" \t", after);
    if (eq == std::string_view::npos || text[eq] != '=') {
      pos = after;
      continue;
    }
    size_t open = text.find('[', eq);
    if (open == std::string_view::npos)
      throw ParseError("MissingTable: " + name + " (no matrix literal)");
    size_t close = text.find(']', open);
    if (close == std::string_view::npos)
      throw ParseError("MalformedRow: unterminated matrix " + name);

    std::vector<Row> rows;
    Row cur;
    cur.line = 0;
    std::string token;
    int line = line_of(text, open);
    auto flush_token = [&]() {
      if (token.empty()) return;
      Real v = 0;
      auto [p, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
      if (ec != std::errc() || p != token.data() + token.size())
        throw ParseError("MalformedRow: line " + std::to_string(line) +
                         " in mpc." + name + ": bad number '" + token + "'");
      if (cur.values.empty()) cur.line = line;
      cur.values.push_back(v);
      token.clear();
    };
    auto flush_row = [&]() {
      flush_token();
      if (!cur.values.empty()) rows.push_back(std::move(cur));
      cur = Row{};
    };
    for (size_t i = open + 1; i < close; ++i) {
      char c = text[i];
      if (c == '\n') {
        flush_row();
        ++line;
      } else if (c == ';') {
        flush_row();
      } else if (c == ' ' || c == '\t' || c == ',' || c == '\r') {
        flush_token();
      } else {
        token.push_back(c);
      }
    }
    flush_row();
    return rows;
  }
}

Real parse_scalar(std::string_view text, const std::string& name) {
  const std::string key = "mpc." + name;
  size_t pos = text.find(key);
  if (pos == std::string_view::npos) throw ParseError("MissingTable: " + name);
  size_t eq = text.find('=', pos);
  if (eq == std::string_view::npos) throw ParseError("MissingTable: " + name);
  size_t start = text.find_first_not_of(" \t", eq + 1);
  size_t end = text.find_first_of(";\n", start);
  if (start == std::string_view::npos) throw ParseError("MalformedRow: mpc." + name);
  std::string token(text.substr(start, end - start));
  while (!token.empty() && std::isspace(static_cast<unsigned char>(token.back()))) token.pop_back();
  Real v = 0;
  auto [p, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
  if (ec != std::errc() || p != token.data() + token.size())
    throw ParseError("MalformedRow: mpc." + name + " = '" + token + "'");
  return v;
}

}  // namespace

Network parse_matpower_case(std::string_view raw) {
  const std::string text = strip_comments(raw);

  const Real base_mva = parse_scalar(text, "baseMVA");
  if (base_mva <= 0.0) throw ParseError("MalformedRow: baseMVA must be positive");

  const auto bus_rows = parse_matrix(text, "bus");
  const auto gen_rows = parse_matrix(text, "gen");
  const auto branch_rows = parse_matrix(text, "branch");

  std::set<int> gen_buses;
  for (const Row& row : gen_rows) {
    if (row.values.size() < 8)
      throw ParseError("MalformedRow: line " + std::to_string(row.line) + " in mpc.gen");
    if (row.values[7] > 0.0) gen_buses.insert(static_cast<int>(row.values[0]));
  }

  std::vector<Bus> buses;
  std::set<int> isolated_ids;
  for (const Row& row : bus_rows) {
    if (row.values.size() < 13)
      throw ParseError("MalformedRow: line " + std::to_string(row.line) + " in mpc.bus");
    const int type_code = static_cast<int>(row.values[1]);
    const int id = static_cast<int>(row.values[0]);
    if (type_code == 4) {
      isolated_ids.insert(id);
      continue;
    }
    if (type_code < 1 || type_code > 3)
      throw ParseError("MalformedRow: line " + std::to_string(row.line) +
                       " in mpc.bus: unknown bus type " + std::to_string(type_code));
    Bus b;
    b.id = id;
    b.type = static_cast<BusType>(type_code);
    b.Pd = row.values[2] / base_mva;
    b.Qd = row.values[3] / base_mva;
    b.Gs = row.values[4] / base_mva;
    b.Bs = row.values[5] / base_mva;
    b.vm = row.values[7];
    b.va = row.values[8];
    b.base_kv = row.values[9];
    b.has_gen = gen_buses.count(b.id) > 0;
    if (b.vm <= 0.0) throw ParseError("ZeroVm: bus " + std::to_string(b.id));
    buses.push_back(b);
  }
  if (buses.empty()) throw ParseError("MalformedRow: no non-isolated buses");

  std::set<int> bus_ids;
  for (const Bus& b : buses) bus_ids.insert(b.id);

  std::vector<Branch> branches;
  int branch_index = 0;
  for (const Row& row : branch_rows) {
    if (row.values.size() < 11)
      throw ParseError("MalformedRow: line " + std::to_string(row.line) + " in mpc.branch");
    Branch br;
    br.from_bus = static_cast<int>(row.values[0]);
    br.to_bus = static_cast<int>(row.values[1]);
    br.r = row.values[2];
    br.x = row.values[3];
    br.b_charging = row.values[4];
    br.tap = row.values[8];
    br.shift = row.values[9];
    br.in_service = row.values[10] > 0.0;
    if (isolated_ids.count(br.from_bus) || isolated_ids.count(br.to_bus)) {
      ++branch_index;
      continue;  // dropped with its isolated endpoint
    }
    if (!bus_ids.count(br.from_bus) || !bus_ids.count(br.to_bus))
      throw ParseError("UnknownBusReference: branch " + std::to_string(branch_index));
    branches.push_back(br);
    ++branch_index;
  }

  return Network(base_mva, std::move(buses), std::move(branches));
}

Network load_matpower_case(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open case file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_matpower_case(ss.str());
}

namespace {

std::string num(Real v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

std::string write_matpower_case(const Network& net) {
  std::ostringstream os;
  const Real base = net.base_mva();
  os << "function mpc = case_export\n";
  os << "mpc.version = '2';\n";
  os << "mpc.baseMVA = " << num(base) << ";\n\n";

  os << "mpc.bus = [\n";
  for (const Bus& b : net.buses()) {
    os << "\t" << b.id << "\t" << static_cast<int>(b.type) << "\t" << num(b.Pd * base) << "\t"
       << num(b.Qd * base) << "\t" << num(b.Gs * base) << "\t" << num(b.Bs * base)
       << "\t1\t" << num(b.vm) << "\t" << num(b.va) << "\t" << num(b.base_kv)
       << "\t1\t1.1\t0.9;\n";
  }
  os << "];\n\n";

  os << "mpc.gen = [\n";
  for (const Bus& b : net.buses()) {
    if (!b.has_gen) continue;
    os << "\t" << b.id << "\t0\t0\t9999\t-9999\t" << num(b.vm)
       << "\t" << num(base) << "\t1\t9999\t0\t0\t0\t0\t0\t0\t0\t0\t0\t0\t0\t0;\n";
  }
  os << "];\n\n";

  os << "mpc.branch = [\n";
  for (const Branch& br : net.branches()) {
    os << "\t" << br.from_bus << "\t" << br.to_bus << "\t" << num(br.r) << "\t" << num(br.x)
       << "\t" << num(br.b_charging) << "\t0\t0\t0\t" << num(br.tap) << "\t" << num(br.shift)
       << "\t" << (br.in_service ? 1 : 0) << "\t-360\t360;\n";
  }
  os << "];\n";
  return os.str();
}

bool networks_equal(const Network& a, const Network& b) {
  if (a.base_mva() != b.base_mva()) return false;
  if (a.n_buses() != b.n_buses() || a.n_branches() != b.n_branches()) return false;
  for (int i = 0; i < a.n_buses(); ++i) {
    const Bus &x = a.bus(i), &y = b.bus(i);
    if (x.id != y.id || x.type != y.type || x.Pd != y.Pd || x.Qd != y.Qd || x.Gs != y.Gs ||
        x.Bs != y.Bs || x.vm != y.vm || x.va != y.va || x.base_kv != y.base_kv ||
        x.has_gen != y.has_gen)
      return false;
  }
  for (int k = 0; k < a.n_branches(); ++k) {
    const Branch &x = a.branch(k), &y = b.branch(k);
    if (x.from_bus != y.from_bus || x.to_bus != y.to_bus || x.r != y.r || x.x != y.x ||
        x.b_charging != y.b_charging || x.tap != y.tap || x.shift != y.shift ||
        x.in_service != y.in_service)
      return false;
  }
  return true;
}

}  // namespace gridse
