#include "ksfv/io.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace ksfv {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

namespace {

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    return out;
}

}  // namespace

void write_vtk(const std::string& path,
               const std::vector<std::pair<std::string, const Field*>>& fields) {
    if (fields.empty()) throw std::invalid_argument("write_vtk: no fields");
    const Grid& g = *fields.front().second->grid();
    for (const auto& [name, f] : fields)
        if (f->grid().get() != &g) throw std::invalid_argument("write_vtk: mixed grids");

    auto out = open_out(path);
    out << "# vtk DataFile Version 3.0\n";
    out << "ksfv snapshot\n";
    out << "ASCII\n";
    out << "DATASET STRUCTURED_POINTS\n";
    out << "DIMENSIONS " << g.cells()[0] << " " << g.cells()[1] << " " << g.cells()[2] << "\n";
    out << "ORIGIN " << format_double(g.origin()[0] + 0.5 * g.spacing()[0]) << " "
        << format_double(g.origin()[1] + 0.5 * g.spacing()[1]) << " "
        << format_double(g.origin()[2] + 0.5 * g.spacing()[2]) << "\n";
    out << "SPACING " << format_double(g.spacing()[0]) << " " << format_double(g.spacing()[1])
        << " " << format_double(g.spacing()[2]) << "\n";
    out << "POINT_DATA " << g.lattice_count() << "\n";

    for (const auto& [name, f] : fields) {
        out << "SCALARS " << name << " double 1\n";
        out << "LOOKUP_TABLE default\n";
        for (std::int64_t li = 0; li < g.lattice_count(); ++li) {
            int a = g.active_index_of_lattice(li);
            out << format_double(a >= 0 ? (*f)[a] : 0.0) << "\n";
        }
    }
    if (!out) throw std::runtime_error("write_vtk: write failed: " + path);
}

void write_field_csv(const std::string& path, const Field& field) {
    const Grid& g = *field.grid();
    auto out = open_out(path);

    const char* idx_names[3] = {"i", "j", "k"};
    const char* coord_names[3] = {"x", "y", "z"};
    for (int a = 0; a < g.dim(); ++a) out << idx_names[a] << ",";
    for (int a = 0; a < g.dim(); ++a) out << coord_names[a] << ",";
    out << "value\n";

    for (int iz = 0; iz < g.cells()[2]; ++iz)
        for (int iy = 0; iy < g.cells()[1]; ++iy)
            for (int ix = 0; ix < g.cells()[0]; ++ix) {
                const int idx[3] = {ix, iy, iz};
                for (int a = 0; a < g.dim(); ++a) out << idx[a] << ",";
                for (int a = 0; a < g.dim(); ++a)
                    out << format_double(g.origin()[a] + (idx[a] + 0.5) * g.spacing()[a]) << ",";
                int ai = g.active_index(ix, iy, iz);
                out << format_double(ai >= 0 ? field[ai] : 0.0) << "\n";
            }
    if (!out) throw std::runtime_error("write_field_csv: write failed: " + path);
}

void write_diagnostics_csv(const std::string& path,
                           const std::vector<DiagnosticsRecord>& records) {
    auto out = open_out(path);
    out << "t,mass,E,rho_max,rho_Ln,c_L2,prod_rho,prod_c,coupling,E_rel\n";
    for (const auto& r : records) {
        out << format_double(r.t) << "," << format_double(r.mass) << ","
            << format_double(r.entropy_E) << "," << format_double(r.rho_max) << ","
            << format_double(r.rho_Ln) << "," << format_double(r.c_L2) << ","
            << format_double(r.production_rho) << "," << format_double(r.production_c) << ","
            << format_double(r.coupling) << "," << format_double(r.relative_entropy) << "\n";
    }
    if (!out) throw std::runtime_error("write_diagnostics_csv: write failed: " + path);
}

}  // namespace ksfv
