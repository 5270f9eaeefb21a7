#include "cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <limits>
#include <map>
#include <optional>
#include <sstream>

#include "trapent/error.hpp"
#include "trapent/parallel.hpp"
#include "trapent/schmidt.hpp"
#include "trapent/spectrum.hpp"
#include "trapent/version.hpp"
#include "trapent/wavefunction.hpp"

namespace trapent::cli {

using json = nlohmann::ordered_json;

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  if (x == 0.0) return "0";
  char buf[64];
  const double ax = std::abs(x);
  if (ax < 1e-3 || ax >= 1e6) {
    std::snprintf(buf, sizeof buf, "%.9e", x);
  } else {
    std::snprintf(buf, sizeof buf, "%.10g", x);
  }
  return buf;
}

namespace {

// JSON numbers carry the same 10 digits as the CSV output.
json number(double x) {
  if (!std::isfinite(x)) return format_number(x);
  return std::stod(format_number(x));
}

double parse_double(std::string_view text, std::string_view what) {
  std::string s(text);
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size() || !std::isfinite(v)) {
    throw UsageError(std::string(what) + ": '" + s + "' is not a finite number");
  }
  return v;
}

int parse_int(std::string_view text, std::string_view what) {
  const double v = parse_double(text, what);
  if (v != std::floor(v) || std::abs(v) > 1e9) {
    throw UsageError(std::string(what) + ": '" + std::string(text) + "' is not an integer");
  }
  return static_cast<int>(v);
}

std::vector<std::string_view> split(std::string_view text, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = text.find(sep, start);
    parts.push_back(text.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

}  // namespace

std::vector<double> Range::values() const {
  std::vector<double> v;
  if (points == 1) return {min};
  for (int i = 0; i < points; ++i) {
    // endpoints exact, interior by linear interpolation
    v.push_back(i == points - 1 ? max : min + (max - min) * i / (points - 1));
  }
  return v;
}

Range parse_range(std::string_view text, std::string_view flag) {
  const auto parts = split(text, ':');
  if (parts.size() != 3) {
    throw UsageError(std::string(flag) + " expects MIN:MAX:POINTS, got '" + std::string(text) +
                     "'");
  }
  Range r;
  r.min = parse_double(parts[0], flag);
  r.max = parse_double(parts[1], flag);
  r.points = parse_int(parts[2], flag);
  if (r.points < 1) throw UsageError(std::string(flag) + ": POINTS must be at least 1");
  if (r.max < r.min) throw UsageError(std::string(flag) + ": empty range, MAX < MIN");
  if (r.points == 1 && r.max != r.min) {
    throw UsageError(std::string(flag) + ": a single point needs MIN = MAX");
  }
  return r;
}

std::vector<int> parse_branches(std::string_view text) {
  if (text == "all") return {0, 1, 2};
  std::vector<int> out;
  for (auto part : split(text, ',')) {
    const int b = parse_int(part, "--branch");
    if (b < 0 || b > 2) throw UsageError("--branch: branches are 0, 1, 2 or 'all'");
    if (std::find(out.begin(), out.end(), b) == out.end()) out.push_back(b);
  }
  return out;
}

std::vector<std::pair<int, int>> parse_modes(std::string_view text) {
  std::vector<std::pair<int, int>> out;
  for (auto part : split(text, ',')) {
    const auto nl = split(part, ':');
    if (nl.size() != 2) throw UsageError("--modes expects n:l pairs, got '" + std::string(part) + "'");
    const int n = parse_int(nl[0], "--modes");
    const int l = parse_int(nl[1], "--modes");
    if (n < 1 || l < 0) throw UsageError("--modes: need n >= 1 and l >= 0");
    out.emplace_back(n, l);
  }
  return out;
}

namespace {

struct Common {
  double dr = 0.01;
  double r_max = 3.5;
  int l_max = 30;
  bool converge = false;
  std::string format = "auto";
  std::string out_path;
  int jobs = 1;
  std::vector<double> inv_a;
  std::string inv_a_range;
  std::string branch;
};

struct Header {
  std::string command;
  bool has_grid = true;
  double dr = 0.0;
  double r_max = 0.0;
  std::optional<int> l_max;
  std::optional<double> defect;
};

void write_csv_header(std::ostream& os, const Header& h) {
  os << "# trapent " << kVersion << "\n";
  os << "# command: " << h.command << "\n";
  if (h.has_grid) {
    os << "# grid: dr=" << format_number(h.dr) << " r_max=" << format_number(h.r_max) << "\n";
    os << "# l_max: " << (h.l_max ? std::to_string(*h.l_max) : "n/a") << "\n";
  } else {
    os << "# grid: n/a\n# l_max: n/a\n";
  }
  os << "# eigenvalue condition: " << kEigenConditionVariant << "\n";
  os << "# completeness defect: " << (h.defect ? format_number(*h.defect) : "n/a") << "\n";
}

json provenance(const Header& h) {
  json p;
  p["version"] = kVersion;
  p["command"] = h.command;
  if (h.has_grid) {
    p["grid"] = {{"dr", number(h.dr)}, {"r_max", number(h.r_max)}};
    p["l_max"] = h.l_max ? json(*h.l_max) : json(nullptr);
  } else {
    p["grid"] = nullptr;
    p["l_max"] = nullptr;
  }
  p["eigenvalue_condition"] = std::string(kEigenConditionVariant);
  p["completeness_defect"] = h.defect ? number(*h.defect) : json(nullptr);
  return p;
}

std::string resolve_format(const Common& c, const std::string& fallback) {
  const std::string f = c.format == "auto" ? fallback : c.format;
  if (f != "csv" && f != "json") throw UsageError("--format must be csv or json");
  return f;
}

void check_grid(const Common& c) {
  if (c.l_max < 0) throw UsageError("--l-max must be non-negative");
  if (c.jobs < 1) throw UsageError("--jobs must be at least 1");
  try {
    RadialGrid(c.dr, c.r_max);
  } catch (const DomainError& e) {
    throw UsageError(std::string("grid: ") + e.what());
  }
}

std::vector<double> inv_a_values(const Common& c, std::vector<double> fallback) {
  if (!c.inv_a.empty() && !c.inv_a_range.empty()) {
    throw UsageError("give either --inv-a or --inv-a-range, not both");
  }
  if (!c.inv_a_range.empty()) return parse_range(c.inv_a_range, "--inv-a-range").values();
  if (!c.inv_a.empty()) return c.inv_a;
  return fallback;
}

struct StateChoice {
  std::optional<int> unitarity;
  bool noninteracting = false;
};

TwoBodyState select_state(const Common& c, const StateChoice& choice) {
  const int picks = (choice.unitarity ? 1 : 0) + (choice.noninteracting ? 1 : 0) +
                    ((!c.inv_a.empty() || !c.inv_a_range.empty()) ? 1 : 0);
  if (picks != 1) {
    throw UsageError("choose exactly one state: --inv-a X [--branch B], --unitarity K or "
                     "--noninteracting");
  }
  if (choice.unitarity) {
    if (*choice.unitarity < 0 || *choice.unitarity > 2) {
      throw UsageError("--unitarity: K must be 0, 1 or 2");
    }
    return TwoBodyState::unitarity(*choice.unitarity);
  }
  if (choice.noninteracting) return TwoBodyState::trap(noninteracting_state());
  if (!c.inv_a_range.empty() || c.inv_a.size() != 1) {
    throw UsageError("this command takes a single --inv-a value");
  }
  const auto branches = parse_branches(c.branch.empty() ? "0" : c.branch);
  if (branches.size() != 1) throw UsageError("this command takes a single --branch");
  return TwoBodyState::trap(energy_of_inv_a(c.inv_a.front(), branches.front()));
}

struct Analysis {
  Decomposition decomposition;
  std::optional<ConvergenceReport> report;
};

Analysis analyze(const TwoBodyState& state, const Common& c, bool modes, int jobs) {
  Analysis a;
  if (c.converge) {
    ConvergenceTolerances tol;
    tol.compute_modes = modes;
    tol.jobs = jobs;
    auto res = converge(state, RadialGrid(c.dr, c.r_max), c.l_max, tol);
    a.decomposition = std::move(res.decomposition);
    a.report = std::move(res.report);
  } else {
    SchmidtOptions o;
    o.dr = c.dr;
    o.r_max = c.r_max;
    o.l_max = c.l_max;
    o.compute_modes = modes;
    o.jobs = jobs;
    a.decomposition = decompose_state(state, o);
  }
  return a;
}

Header grid_header(const std::string& command, const Analysis& a) {
  const auto& s = a.decomposition.spectrum;
  Header h;
  h.command = command;
  h.dr = s.dr;
  h.r_max = s.r_max;
  h.l_max = s.l_max;
  h.defect = s.completeness_defect;
  return h;
}

json state_json(const TwoBodyState& s) {
  json j;
  j["label"] = s.label();
  if (s.kind() == StateKind::Unitarity) {
    j["kind"] = "unitarity";
    j["k"] = s.unitarity_index();
    j["energy"] = number(0.5 + 2.0 * s.unitarity_index());
    j["inv_a"] = 0;
  } else {
    const auto& e = *s.eigenstate();
    j["kind"] = "trap";
    j["branch"] = e.branch;
    j["inv_a"] = number(e.inv_a);
    j["energy"] = number(e.energy);
  }
  return j;
}

json report_json(const ConvergenceReport& r) {
  json j;
  j["l_max_converged"] = r.l_max_converged;
  j["grid_checked"] = r.grid_checked;
  j["grid_converged"] = r.grid_converged;
  j["grid_relative_change"] = number(r.grid_relative_change);
  json trace = json::array();
  for (const auto& step : r.trace) {
    trace.push_back({{"l_max", step.l_max},
                     {"dr", number(step.dr)},
                     {"K", number(step.K)},
                     {"completeness_defect", number(step.completeness_defect)}});
  }
  j["trace"] = trace;
  return j;
}

// ---------------------------------------------------------------------------

constexpr double kPoleWindow = 1e-3;

bool near_pole(double e) {
  const double k = std::round((e - 1.5) / 2.0);
  return std::abs(e - (1.5 + 2.0 * k)) < kPoleWindow;
}

int branch_of_energy(double e) { return e < 1.5 ? 0 : static_cast<int>((e - 1.5) / 2.0) + 1; }

void spectrum_sweep(const Common& c, const std::string& e_range, std::ostream& os) {
  const auto format = resolve_format(c, "csv");
  const auto branches = parse_branches(c.branch.empty() ? "all" : c.branch);
  Header h;
  h.command = "spectrum-sweep";
  h.has_grid = false;

  if (!c.inv_a.empty() || !c.inv_a_range.empty()) {
    // E(1/a) on each requested branch
    const auto values = inv_a_values(c, {});
    std::vector<std::vector<double>> energies(values.size(), std::vector<double>(branches.size()));
    detail::parallel_for(static_cast<int>(values.size()), c.jobs, [&](int i) {
      for (std::size_t b = 0; b < branches.size(); ++b) {
        energies[i][b] = energy_of_inv_a(values[i], branches[b]).energy;
      }
    });
    if (format == "csv") {
      write_csv_header(os, h);
      os << "inv_a";
      for (int b : branches) os << ",E_b" << b;
      os << "\n";
      for (std::size_t i = 0; i < values.size(); ++i) {
        os << format_number(values[i]);
        for (double e : energies[i]) os << "," << format_number(e);
        os << "\n";
      }
    } else {
      json j;
      j["provenance"] = provenance(h);
      json rows = json::array();
      for (std::size_t i = 0; i < values.size(); ++i) {
        json row{{"inv_a", number(values[i])}};
        for (std::size_t b = 0; b < branches.size(); ++b) {
          row["E_b" + std::to_string(branches[b])] = number(energies[i][b]);
        }
        rows.push_back(row);
      }
      j["rows"] = rows;
      os << j.dump(2) << "\n";
    }
    return;
  }

  const auto range = parse_range(e_range, "--e-range");
  struct Row {
    double e, inv_a;
    int branch;
  };
  std::vector<Row> rows;
  for (double e : range.values()) {
    if (near_pole(e)) continue;
    const int b = branch_of_energy(e);
    if (std::find(branches.begin(), branches.end(), b) == branches.end()) continue;
    rows.push_back({e, inv_a_of_energy(e), b});
  }
  if (rows.empty()) {
    throw UsageError("--e-range: every point lies inside a pole exclusion window (|E - (3/2 + 2n)| < " +
                     format_number(kPoleWindow) + ") or outside the requested branches");
  }
  if (format == "csv") {
    write_csv_header(os, h);
    os << "E,inv_a,branch\n";
    for (const auto& r : rows) {
      os << format_number(r.e) << "," << format_number(r.inv_a) << "," << r.branch << "\n";
    }
  } else {
    json j;
    j["provenance"] = provenance(h);
    json arr = json::array();
    for (const auto& r : rows) {
      arr.push_back({{"E", number(r.e)}, {"inv_a", number(r.inv_a)}, {"branch", r.branch}});
    }
    j["rows"] = arr;
    os << j.dump(2) << "\n";
  }
}

void density(const Common& c, std::ostream& os) {
  const auto format = resolve_format(c, "csv");
  check_grid(c);
  const auto values = inv_a_values(c, {-2.0, 0.0, 2.0});
  const auto branches = parse_branches(c.branch.empty() ? "0" : c.branch);
  const RadialGrid grid(c.dr, c.r_max);
  const auto radii = grid.points();

  struct Column {
    EigenState state;
    std::vector<double> rho;
  };
  std::vector<Column> cols;
  for (double g : values) {
    for (int b : branches) cols.push_back({energy_of_inv_a(g, b), {}});
  }
  detail::parallel_for(static_cast<int>(cols.size()), c.jobs, [&](int k) {
    for (double r : radii) cols[k].rho.push_back(radial_density(cols[k].state, r));
  });

  Header h;
  h.command = "density";
  h.dr = c.dr;
  h.r_max = c.r_max;
  auto name = [](const EigenState& s) {
    return "rho_b" + std::to_string(s.branch) + "_inv_a=" + format_number(s.inv_a);
  };
  if (format == "csv") {
    write_csv_header(os, h);
    os << "r";
    for (const auto& col : cols) os << "," << name(col.state);
    os << "\n";
    for (std::size_t i = 0; i < radii.size(); ++i) {
      os << format_number(radii[i]);
      for (const auto& col : cols) os << "," << format_number(col.rho[i]);
      os << "\n";
    }
  } else {
    json j;
    j["provenance"] = provenance(h);
    json r = json::array();
    for (double x : radii) r.push_back(number(x));
    j["r"] = r;
    json states = json::array();
    for (const auto& col : cols) {
      json rho = json::array();
      for (double v : col.rho) rho.push_back(number(v));
      states.push_back({{"branch", col.state.branch},
                        {"inv_a", number(col.state.inv_a)},
                        {"energy", number(col.state.energy)},
                        {"density", rho}});
    }
    j["states"] = states;
    os << j.dump(2) << "\n";
  }
}

void schmidt(const Common& c, const StateChoice& choice, int top, std::ostream& os) {
  const auto format = resolve_format(c, "json");
  check_grid(c);
  if (top < 0) throw UsageError("--top must be non-negative");
  const auto state = select_state(c, choice);
  const auto a = analyze(state, c, false, c.jobs);
  const auto& s = a.decomposition.spectrum;
  const Header h = grid_header("schmidt", a);

  if (format == "csv") {
    write_csv_header(os, h);
    os << "# state: " << state.label() << "\n";
    os << "# K: " << format_number(s.K) << "\n# S: " << format_number(s.S) << "\n";
    os << "n,l,lambda,Lambda,p\n";
    for (const auto& e : s.entries) {
      os << e.n << "," << e.l << "," << format_number(e.lambda) << ","
         << format_number(e.big_lambda) << "," << format_number(e.channel_prob) << "\n";
    }
    return;
  }
  json j;
  j["provenance"] = provenance(h);
  j["state"] = state_json(state);
  j["K"] = number(s.K);
  j["S"] = number(s.S);
  j["completeness_defect"] = number(s.completeness_defect);
  j["completeness_ok"] = s.completeness_ok;
  json table = json::array();
  for (const auto& e : s.entries) {
    table.push_back({{"n", e.n},
                     {"l", e.l},
                     {"lambda", number(e.lambda)},
                     {"Lambda", number(e.big_lambda)},
                     {"p", number(e.channel_prob)}});
  }
  j["lambda_table"] = table;
  json ranked = json::array();
  const auto r = s.ranked();
  for (int i = 0; i < std::min<int>(top, static_cast<int>(r.size())); ++i) {
    ranked.push_back({{"n", r[i].n}, {"l", r[i].l}, {"p", number(r[i].channel_prob)}});
  }
  j["top_modes"] = ranked;
  j["convergence"] = a.report ? report_json(*a.report) : json(nullptr);
  os << j.dump(2) << "\n";
}

void k_sweep(const Common& c, double branch0_cap, std::ostream& os) {
  const auto format = resolve_format(c, "csv");
  check_grid(c);
  const auto values = inv_a_values(c, Range{-6.0, 6.0, 49}.values());
  const auto branches = parse_branches(c.branch.empty() ? "all" : c.branch);

  struct Cell {
    double inv_a;
    int branch;
    bool skipped = false;
    double energy = NAN;
    double K = NAN;
    double defect = NAN;
  };
  std::vector<Cell> cells;
  for (double g : values) {
    for (int b : branches) {
      Cell cell{g, b};
      // deep dimers beyond the cap are left out of the sweep
      cell.skipped = b == 0 && g > branch0_cap;
      cells.push_back(cell);
    }
  }
  detail::parallel_for(static_cast<int>(cells.size()), c.jobs, [&](int k) {
    auto& cell = cells[k];
    if (cell.skipped) return;
    const auto e = energy_of_inv_a(cell.inv_a, cell.branch);
    const auto a = analyze(TwoBodyState::trap(e), c, false, 1);
    cell.energy = e.energy;
    cell.K = a.decomposition.spectrum.K;
    cell.defect = a.decomposition.spectrum.completeness_defect;
  });

  Header h;
  h.command = "k-sweep";
  h.dr = c.dr;
  h.r_max = c.r_max;
  h.l_max = c.l_max;
  double worst = 0.0;
  for (const auto& cell : cells) {
    if (!cell.skipped && std::abs(cell.defect) > std::abs(worst)) worst = cell.defect;
  }
  h.defect = worst;

  const std::size_t nb = branches.size();
  auto blank = [](double v) { return std::isnan(v) ? std::string() : format_number(v); };
  if (format == "csv") {
    write_csv_header(os, h);
    os << "inv_a";
    for (int b : branches) os << ",K_b" << b;
    for (int b : branches) os << ",E_b" << b;
    os << "\n";
    for (std::size_t i = 0; i < values.size(); ++i) {
      os << format_number(values[i]);
      for (std::size_t b = 0; b < nb; ++b) os << "," << blank(cells[i * nb + b].K);
      for (std::size_t b = 0; b < nb; ++b) os << "," << blank(cells[i * nb + b].energy);
      os << "\n";
    }
  } else {
    json j;
    j["provenance"] = provenance(h);
    json rows = json::array();
    for (const auto& cell : cells) {
      if (cell.skipped) continue;
      rows.push_back({{"inv_a", number(cell.inv_a)},
                      {"branch", cell.branch},
                      {"energy", number(cell.energy)},
                      {"K", number(cell.K)},
                      {"completeness_defect", number(cell.defect)}});
    }
    j["rows"] = rows;
    os << j.dump(2) << "\n";
  }
}

void unitarity(const Common& c, bool cross_check, std::ostream& os) {
  const auto format = resolve_format(c, "json");
  check_grid(c);
  struct Row {
    Analysis closed;
    double K_trap = NAN;
  };
  std::vector<Row> rows(3);
  const int tasks = cross_check ? 6 : 3;
  detail::parallel_for(tasks, c.jobs, [&](int t) {
    const int k = t % 3;
    if (t < 3) {
      rows[k].closed = analyze(TwoBodyState::unitarity(k), c, false, 1);
    } else {
      const auto trap = TwoBodyState::trap(energy_of_inv_a(0.0, k));
      rows[k].K_trap = analyze(trap, c, false, 1).decomposition.spectrum.K;
    }
  });

  Header h = grid_header("unitarity", rows[0].closed);
  double worst = 0.0;
  for (const auto& r : rows) {
    const double d = r.closed.decomposition.spectrum.completeness_defect;
    if (std::abs(d) > std::abs(worst)) worst = d;
  }
  h.defect = worst;

  if (format == "csv") {
    write_csv_header(os, h);
    os << "k,energy,K,S,completeness_defect";
    if (cross_check) os << ",K_trap_route,relative_difference";
    os << "\n";
    for (int k = 0; k < 3; ++k) {
      const auto& s = rows[k].closed.decomposition.spectrum;
      os << k << "," << format_number(0.5 + 2.0 * k) << "," << format_number(s.K) << ","
         << format_number(s.S) << "," << format_number(s.completeness_defect);
      if (cross_check) {
        os << "," << format_number(rows[k].K_trap) << ","
           << format_number(std::abs(rows[k].K_trap - s.K) / s.K);
      }
      os << "\n";
    }
    return;
  }
  json j;
  j["provenance"] = provenance(h);
  json states = json::array();
  for (int k = 0; k < 3; ++k) {
    const auto& s = rows[k].closed.decomposition.spectrum;
    json row{{"k", k},
             {"energy", number(0.5 + 2.0 * k)},
             {"K", number(s.K)},
             {"S", number(s.S)},
             {"completeness_defect", number(s.completeness_defect)}};
    if (cross_check) {
      row["K_trap_route"] = number(rows[k].K_trap);
      row["relative_difference"] = number(std::abs(rows[k].K_trap - s.K) / s.K);
    }
    if (rows[k].closed.report) row["convergence"] = report_json(*rows[k].closed.report);
    states.push_back(row);
  }
  j["states"] = states;
  os << j.dump(2) << "\n";
}

void modes(const Common& c, const StateChoice& choice, const std::string& mode_list,
           std::ostream& os) {
  const auto format = resolve_format(c, "csv");
  check_grid(c);
  const auto wanted = parse_modes(mode_list);
  const auto state = select_state(c, choice);
  const auto a = analyze(state, c, true, c.jobs);
  const auto& channels = a.decomposition.channels;

  struct Column {
    int n, l;
    double p;
    std::vector<double> u, rho;
  };
  std::vector<Column> cols;
  for (auto [n, l] : wanted) {
    const auto it = std::find_if(channels.begin(), channels.end(),
                                 [l](const ChannelDecomposition& ch) { return ch.l == l; });
    if (it == channels.end()) {
      throw UsageError("--modes: channel l=" + std::to_string(l) + " is above --l-max");
    }
    if (n > static_cast<int>(it->lambdas.size())) {
      throw UsageError("--modes: channel l=" + std::to_string(l) + " has only " +
                       std::to_string(it->lambdas.size()) + " retained modes");
    }
    const auto* entry = a.decomposition.spectrum.find(n, l);
    Column col{n, l, entry ? entry->channel_prob : 0.0, {}, mode_density(*it, n)};
    for (int i = 0; i < it->modes.rows(); ++i) col.u.push_back(it->modes(i, n - 1));
    cols.push_back(std::move(col));
  }
  const RadialGrid grid(a.decomposition.spectrum.dr, a.decomposition.spectrum.r_max);
  const auto radii = grid.points();
  const Header h = grid_header("modes", a);

  if (format == "csv") {
    write_csv_header(os, h);
    os << "# state: " << state.label() << "\n";
    os << "r";
    for (const auto& col : cols) os << ",u_" << col.n << "_" << col.l;
    for (const auto& col : cols) os << ",rho_" << col.n << "_" << col.l;
    os << "\n";
    for (std::size_t i = 0; i < radii.size(); ++i) {
      os << format_number(radii[i]);
      for (const auto& col : cols) os << "," << format_number(col.u[i]);
      for (const auto& col : cols) os << "," << format_number(col.rho[i]);
      os << "\n";
    }
    return;
  }
  json j;
  j["provenance"] = provenance(h);
  j["state"] = state_json(state);
  json r = json::array();
  for (double x : radii) r.push_back(number(x));
  j["r"] = r;
  json arr = json::array();
  for (const auto& col : cols) {
    json u = json::array(), rho = json::array();
    for (double v : col.u) u.push_back(number(v));
    for (double v : col.rho) rho.push_back(number(v));
    arr.push_back({{"n", col.n}, {"l", col.l}, {"p", number(col.p)}, {"u", u}, {"density", rho}});
  }
  j["modes"] = arr;
  os << j.dump(2) << "\n";
}

void add_common(CLI::App* sub, Common& c, bool grid, bool channels, bool states) {
  if (grid) {
    sub->add_option("--dr", c.dr, "radial grid spacing")->capture_default_str();
    sub->add_option("--r-max", c.r_max, "radial cutoff")->capture_default_str();
  }
  if (channels) {
    sub->add_option("--l-max", c.l_max, "highest Legendre channel")->capture_default_str();
    sub->add_flag("--converge", c.converge, "raise l_max until K settles, then check dr/2");
  }
  if (states) {
    sub->add_option("--inv-a", c.inv_a, "inverse scattering length(s)")->delimiter(',');
    sub->add_option("--inv-a-range", c.inv_a_range, "MIN:MAX:POINTS");
    sub->add_option("--branch", c.branch, "0, 1, 2 or all");
  }
  sub->add_option("--format", c.format, "csv or json");
  sub->add_option("--out", c.out_path, "write to this file instead of stdout");
  sub->add_option("--jobs", c.jobs, "worker threads")->capture_default_str();
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Spectrum, eigenstates and Schmidt decomposition of two trapped atoms"};
  app.name("trapent");
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  Common common;
  StateChoice choice;
  std::optional<int> unitarity_k;
  std::string e_range = "-4:6:1001";
  std::string mode_list = "1:0,2:0,1:1,1:2";
  double branch0_cap = 2.0;
  int top = 10;
  bool cross_check = false;
  int unitarity_arg = -1;

  auto* s_spec = app.add_subcommand("spectrum-sweep", "E(1/a) on the branches");
  add_common(s_spec, common, false, false, true);
  s_spec->add_option("--e-range", e_range, "MIN:MAX:POINTS energy sweep")->capture_default_str();

  auto* s_dens = app.add_subcommand("density", "radial densities 4 pi r^2 |psi|^2");
  add_common(s_dens, common, true, false, true);

  auto* s_schm = app.add_subcommand("schmidt", "Schmidt spectrum of one state");
  add_common(s_schm, common, true, true, true);
  auto* unit_opt = s_schm->add_option("--unitarity", unitarity_arg, "closed-form state k");
  s_schm->add_flag("--noninteracting", choice.noninteracting, "the a = 0 product state");
  s_schm->add_option("--top", top, "number of ranked modes to list")->capture_default_str();

  auto* s_ksw = app.add_subcommand("k-sweep", "Schmidt number against 1/a");
  add_common(s_ksw, common, true, true, true);
  s_ksw->add_option("--branch0-max-inv-a", branch0_cap, "drop branch 0 above this 1/a")
      ->capture_default_str();

  auto* s_unit = app.add_subcommand("unitarity", "Schmidt numbers of the closed-form states");
  add_common(s_unit, common, true, true, false);
  s_unit->add_flag("--cross-check", cross_check, "repeat through the trap eigenstates at 1/a = 0");

  auto* s_mode = app.add_subcommand("modes", "Schmidt mode functions u_nl(r)");
  add_common(s_mode, common, true, true, true);
  auto* mode_unit_opt = s_mode->add_option("--unitarity", unitarity_arg, "closed-form state k");
  s_mode->add_flag("--noninteracting", choice.noninteracting, "the a = 0 product state");
  s_mode->add_option("--modes", mode_list, "n:l list")->capture_default_str();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }
  if (unit_opt->count() > 0 || mode_unit_opt->count() > 0) choice.unitarity = unitarity_arg;

  std::ostringstream buffer;
  try {
    if (s_spec->parsed()) {
      spectrum_sweep(common, e_range, buffer);
    } else if (s_dens->parsed()) {
      density(common, buffer);
    } else if (s_schm->parsed()) {
      schmidt(common, choice, top, buffer);
    } else if (s_ksw->parsed()) {
      k_sweep(common, branch0_cap, buffer);
    } else if (s_unit->parsed()) {
      unitarity(common, cross_check, buffer);
    } else if (s_mode->parsed()) {
      modes(common, choice, mode_list, buffer);
    }
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const DomainError& e) {
    err << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const ConvergenceError& e) {
    err << "not converged: " << e.what() << "\n";
    for (const auto& line : e.trace()) err << "  " << line << "\n";
    return kNotConverged;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kFailure;
  }

  if (common.out_path.empty()) {
    out << buffer.str();
  } else {
    std::ofstream file(common.out_path);
    if (!file) {
      err << "error: cannot open " << common.out_path << " for writing\n";
      return kFailure;
    }
    file << buffer.str();
  }
  return kOk;
}

}  // namespace trapent::cli
