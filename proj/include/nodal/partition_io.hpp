#pragma once

#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>

#include "nodal/error.hpp"
#include "nodal/partition.hpp"

// Plain-text partition records, one per line:
//
//   domain <circle|rectangle|torus> <length_x> <length_y>
//   subdomain <id> <measure> [label]
//   interface <id> <subdomain_a> <subdomain_b> <chi_a> <chi_b> <npoints>
//   <param> <x> <y>          (npoints rows following each interface record)
//
// Blank lines and lines starting with '#' are ignored.

namespace nodal {

inline void write_partition(std::ostream& os, const Partition& p) {
  os << std::setprecision(std::numeric_limits<double>::max_digits10);
  os << "# partition: " << p.size() << " subdomains, " << p.interfaces.size() << " interfaces\n";
  os << "domain " << to_string(p.domain.kind) << ' ' << p.domain.length_x << ' ' << p.domain.length_y << '\n';
  for (const auto& s : p.subdomains) {
    os << "subdomain " << s.id << ' ' << s.measure;
    if (!s.label.empty()) os << ' ' << s.label;
    os << '\n';
  }
  for (const auto& f : p.interfaces) {
    os << "interface " << f.id << ' ' << f.subdomains[0] << ' ' << f.subdomains[1] << ' ' << f.chi[0] << ' '
       << f.chi[1] << ' ' << f.polyline.size() << '\n';
    for (const auto& pt : f.polyline) os << pt.param << ' ' << pt.x << ' ' << pt.y << '\n';
  }
}

inline std::string partition_to_string(const Partition& p) {
  std::ostringstream os;
  write_partition(os, p);
  return os.str();
}

inline Partition read_partition(std::istream& is) {
  Partition p;
  bool have_domain = false;
  std::string line;
  int line_no = 0;
  auto fail = [&](const std::string& why) {
    throw Error(ErrorCode::Io, "line " + std::to_string(line_no) + ": " + why);
  };
  auto next_data_line = [&]() -> bool {
    while (std::getline(is, line)) {
      ++line_no;
      const auto first = line.find_first_not_of(" \t\r");
      if (first == std::string::npos || line[first] == '#') continue;
      return true;
    }
    return false;
  };
  while (next_data_line()) {
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag == "domain") {
      std::string kind;
      double lx = 0, ly = 0;
      if (!(ls >> kind >> lx >> ly)) fail("bad domain record");
      if (kind == "circle") p.domain = Domain::circle(lx);
      else if (kind == "rectangle") p.domain = Domain::rectangle(lx, ly);
      else if (kind == "torus") p.domain = Domain::torus(lx, ly);
      else fail("unknown domain kind '" + kind + "'");
      have_domain = true;
    } else if (tag == "subdomain") {
      Subdomain s;
      if (!(ls >> s.id >> s.measure)) fail("bad subdomain record");
      ls >> s.label;
      p.subdomains.push_back(s);
    } else if (tag == "interface") {
      Interface f;
      std::size_t n = 0;
      if (!(ls >> f.id >> f.subdomains[0] >> f.subdomains[1] >> f.chi[0] >> f.chi[1] >> n))
        fail("bad interface record");
      for (std::size_t k = 0; k < n; ++k) {
        if (!next_data_line()) fail("truncated polyline");
        std::istringstream ps(line);
        PolylinePoint pt;
        if (!(ps >> pt.param >> pt.x >> pt.y)) fail("bad polyline row");
        f.polyline.push_back(pt);
      }
      p.interfaces.push_back(std::move(f));
    } else {
      fail("unknown record '" + tag + "'");
    }
  }
  if (!have_domain) throw Error(ErrorCode::Io, "missing domain record");
  validate(p, -1.0);
  return p;
}

inline Partition partition_from_string(const std::string& text) {
  std::istringstream is(text);
  return read_partition(is);
}

}  // namespace nodal
