#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "phasetr/mesh.hpp"

namespace phasetr {

// ASCII field dump: header "nx ny x_min x_max y_min y_max", then one nodal
// value per line in node order.
inline void write_field(const std::string& path, const MeshCG1& mesh, const NodalField& values) {
    if (static_cast<int>(values.size()) != mesh.n_nodes())
        throw std::invalid_argument("write_field: field size mismatch");
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_field: cannot open " + path);
    char buf[128];
    std::snprintf(buf, sizeof(buf), "%d %d %.17g %.17g %.17g %.17g\n", mesh.nx, mesh.ny,
                  mesh.x_min, mesh.x_max, mesh.y_min, mesh.y_max);
    out << buf;
    for (double v : values) {
        std::snprintf(buf, sizeof(buf), "%.17g\n", v);
        out << buf;
    }
}

struct FieldFile {
    int nx = 0, ny = 0;
    double x_min = 0, x_max = 0, y_min = 0, y_max = 0;
    NodalField values;
};

inline FieldFile read_field(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("read_field: cannot open " + path);
    FieldFile f;
    std::string header;
    if (!std::getline(in, header)) throw std::runtime_error("read_field: empty file " + path);
    std::istringstream hs(header);
    if (!(hs >> f.nx >> f.ny >> f.x_min >> f.x_max >> f.y_min >> f.y_max))
        throw std::runtime_error("read_field: malformed header in " + path);
    const int n = (f.nx + 1) * (f.ny + 1);
    f.values.reserve(n);
    double v;
    while (in >> v) f.values.push_back(v);
    if (static_cast<int>(f.values.size()) != n)
        throw std::runtime_error("read_field: expected " + std::to_string(n) + " values in " + path);
    return f;
}

// Legacy-VTK structured grid writer for the same nodal values.
inline void write_vtk(const std::string& path, const MeshCG1& mesh, const NodalField& values,
                      const std::string& name = "field") {
    if (static_cast<int>(values.size()) != mesh.n_nodes())
        throw std::invalid_argument("write_vtk: field size mismatch");
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_vtk: cannot open " + path);
    out << "# vtk DataFile Version 3.0\n" << name << "\nASCII\nDATASET STRUCTURED_GRID\n";
    out << "DIMENSIONS " << mesh.nx + 1 << " " << mesh.ny + 1 << " 1\n";
    out << "POINTS " << mesh.n_nodes() << " double\n";
    char buf[160];
    for (const auto& p : mesh.nodes) {
        std::snprintf(buf, sizeof(buf), "%.17g %.17g 0\n", p[0], p[1]);
        out << buf;
    }
    out << "POINT_DATA " << mesh.n_nodes() << "\nSCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
    for (double v : values) {
        std::snprintf(buf, sizeof(buf), "%.17g\n", v);
        out << buf;
    }
}

}  // namespace phasetr
