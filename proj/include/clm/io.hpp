#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "clm/integrate.hpp"
#include "clm/problems.hpp"

namespace clm {

namespace detail {

// shortest round-trippable decimal form
inline std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

// --- XYZ cluster geometries -------------------------------------------------
// atom count, then a comment line carrying the energy, then "El x y z" rows

inline void write_xyz(const std::string& path, const LJCluster& cluster, double energy,
                      const std::string& element = "LJ") {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << cluster.atoms << "\n";
  out << "E = " << detail::fmt_double(energy) << "\n";
  for (int i = 0; i < cluster.atoms; ++i) {
    out << element << " " << detail::fmt_double(cluster.coords[3 * i]) << " "
        << detail::fmt_double(cluster.coords[3 * i + 1]) << " "
        << detail::fmt_double(cluster.coords[3 * i + 2]) << "\n";
  }
}

struct XYZContents {
  LJCluster cluster;
  double energy = 0.0;
};

inline XYZContents read_xyz(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  XYZContents out;
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(path + ": missing atom count");
  out.cluster.atoms = std::stoi(line);
  if (!std::getline(in, line)) throw std::runtime_error(path + ": missing comment line");
  if (const auto eq = line.find('='); eq != std::string::npos)
    out.energy = std::stod(line.substr(eq + 1));
  out.cluster.coords.reserve(3 * out.cluster.atoms);
  for (int i = 0; i < out.cluster.atoms; ++i) {
    if (!std::getline(in, line)) throw std::runtime_error(path + ": truncated atom list");
    std::istringstream row(line);
    std::string el;
    double x, y, z;
    if (!(row >> el >> x >> y >> z)) throw std::runtime_error(path + ": bad atom row: " + line);
    out.cluster.coords.insert(out.cluster.coords.end(), {x, y, z});
  }
  return out;
}

// --- scalar regression datasets, CSV with header "u,d" -----------------------

inline void write_dataset_csv(const std::string& path, const Dataset& data) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << "u,d\n";
  for (std::size_t k = 0; k < data.size(); ++k) {
    if (data.inputs[k].size() != 1)
      throw std::invalid_argument("dataset CSV supports scalar inputs only");
    out << detail::fmt_double(data.inputs[k][0]) << "," << detail::fmt_double(data.targets[k])
        << "\n";
  }
}

inline Dataset read_dataset_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  Dataset data;
  std::string line;
  if (!std::getline(in, line) || line != "u,d")
    throw std::runtime_error(path + ": expected header \"u,d\"");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw std::runtime_error(path + ": bad row: " + line);
    data.inputs.push_back({std::stod(line.substr(0, comma))});
    data.targets.push_back(std::stod(line.substr(comma + 1)));
  }
  return data;
}

// --- run traces ---------------------------------------------------------------

inline std::string trace_csv_header(int q) {
  std::string h = "window,t";
  for (int i = 1; i <= q; ++i) h += ",U_" + std::to_string(i);
  h += ",avgU,sync_residual,eta";
  for (int i = 1; i <= q; ++i) h += ",gamma_" + std::to_string(i);
  h += ",renumbered";
  return h;
}

inline std::string trace_to_csv(const RunTrace& trace, int q) {
  std::string out = trace_csv_header(q) + "\n";
  for (const auto& w : trace.windows) {
    out += std::to_string(w.window) + "," + detail::fmt_double(w.t);
    for (double c : w.member_costs) out += "," + detail::fmt_double(c);
    out += "," + detail::fmt_double(w.avg_cost) + "," + detail::fmt_double(w.sync) + "," +
           detail::fmt_double(w.eta);
    for (double g : w.gamma) out += "," + detail::fmt_double(g);
    out += w.renumbered ? ",1\n" : ",0\n";
  }
  return out;
}

inline void write_trace_csv(const std::string& path, const RunTrace& trace, int q) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << trace_to_csv(trace, q);
}

}  // namespace clm
