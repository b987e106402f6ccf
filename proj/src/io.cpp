#include "dpm/io.hpp"

#include "dpm/error.hpp"

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace dpm {

namespace {

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

std::uint32_t get_u32(const std::string& in, std::size_t offset) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
        v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[offset + i])) << (8 * i);
    }
    return v;
}

}  // namespace

std::string format_double(double value) {
    if (std::isnan(value)) return "nan";
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", value);
    return buf;
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << content;
    if (!out) throw IoError("failed writing '" + path + "'");
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

CsvTable::CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

void CsvTable::add_row(const std::vector<double>& values) {
    if (values.size() != header_.size()) throw InvalidInput("CSV row width mismatch");
    rows_.push_back(values);
}

std::string CsvTable::str() const {
    std::string out;
    for (std::size_t i = 0; i < header_.size(); ++i) {
        if (i) out += ',';
        out += header_[i];
    }
    out += '\n';
    for (const auto& row : rows_) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out += ',';
            out += format_double(row[i]);
        }
        out += '\n';
    }
    return out;
}

void write_vtk(const std::string& path, const Lattice& lat, const std::vector<ScalarChannel>& scalars,
               const std::vector<VectorChannel>& vectors) {
    const Coord ext = lat.cell_extent();
    std::ostringstream o;
    o << "# vtk DataFile Version 3.0\ndpm\nASCII\nDATASET STRUCTURED_POINTS\n";
    o << "DIMENSIONS " << ext[0] + 1 << ' ' << ext[1] + 1 << ' ' << (lat.dim() == 3 ? ext[2] + 1 : 1)
      << '\n';
    o << "ORIGIN 0 0 0\n";
    o << "SPACING " << format_double(lat.h()) << ' ' << format_double(lat.h()) << ' '
      << format_double(lat.h()) << '\n';
    o << "CELL_DATA " << lat.num_cells() << '\n';
    for (const auto& [name, data] : scalars) {
        if (data.size() != lat.num_cells()) throw InvalidInput("VTK channel size mismatch");
        o << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
        for (double v : data) o << format_double(v) << '\n';
    }
    for (const auto& [name, data] : vectors) {
        if (data.size() != lat.num_cells()) throw InvalidInput("VTK channel size mismatch");
        o << "VECTORS " << name << " double\n";
        for (const auto& v : data) {
            o << format_double(v[0]) << ' ' << format_double(v[1]) << ' ' << format_double(v[2]) << '\n';
        }
    }
    write_text_file(path, o.str());
}

void write_mask_vtk(const std::string& path, const IndicatorField& mask) {
    std::vector<double> fluid(mask.data().begin(), mask.data().end());
    write_vtk(path, mask.lattice(), {{"fluid", fluid}}, {});
}

void write_field_vtk(const std::string& path, const StaggeredField& field, const IndicatorField& mask) {
    const Lattice& lat = field.lattice;
    std::vector<Vec3> velocity(lat.num_cells());
    for (std::size_t c = 0; c < lat.num_cells(); ++c) velocity[c] = field.cell_velocity(c);
    std::vector<double> fluid(mask.data().begin(), mask.data().end());
    write_vtk(path, lat, {{"pressure", field.pressure}, {"fluid", fluid}}, {{"velocity", velocity}});
}

void write_macro_vtk(const std::string& path, const MacroState& state) {
    const Lattice& lat = state.lattice;
    std::vector<Vec3> vc(lat.num_cells()), vp(lat.num_cells());
    for (std::size_t c = 0; c < lat.num_cells(); ++c) {
        vc[c] = state.cell_velocity(state.v_c, c);
        vp[c] = state.cell_velocity(state.v_p, c);
    }
    write_vtk(path, lat, {{"pressure", state.q}}, {{"crack_velocity", vc}, {"pore_velocity", vp}});
}

void write_raw_mask(const std::string& path, const IndicatorField& mask) {
    const Coord ext = mask.lattice().cell_extent();
    std::string out;
    for (int a = 0; a < 3; ++a) put_u32(out, static_cast<std::uint32_t>(ext[a]));
    put_u32(out, 1u);
    for (auto v : mask.data()) out.push_back(static_cast<char>(v ? 1 : 0));
    write_text_file(path, out);
}

IndicatorField read_raw_mask(const std::string& path, bool periodic) {
    const std::string in = read_text_file(path);
    if (in.size() < 16) throw IoError("raw mask '" + path + "' is shorter than its header");
    const std::uint32_t nx = get_u32(in, 0), ny = get_u32(in, 4), nz = get_u32(in, 8);
    if (get_u32(in, 12) != 1u) throw IoError("raw mask '" + path + "' has an unsupported dtype");
    const int dim = nz == 1 ? 2 : 3;
    if (nx != ny || (dim == 3 && nz != nx) || nx == 0) {
        throw IoError("raw mask '" + path + "' is not a square or cubic cell");
    }
    const Lattice lat(dim, static_cast<int>(nx), periodic);
    if (in.size() != 16 + lat.num_cells()) throw IoError("raw mask '" + path + "' has the wrong size");
    std::vector<std::uint8_t> data(lat.num_cells());
    for (std::size_t i = 0; i < data.size(); ++i) data[i] = in[16 + i] != 0 ? 1 : 0;
    return IndicatorField(lat, std::move(data));
}

}  // namespace dpm
