#pragma once

#include "dpm/geometry.hpp"
#include "dpm/macro_models.hpp"
#include "dpm/staggered.hpp"

#include <string>
#include <utility>
#include <vector>

namespace dpm {

/// Shortest round-trip decimal form ("%.17g"); "inf", "-inf", "nan" otherwise.
std::string format_double(double value);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

/// Comma-separated table with a header row.
class CsvTable {
public:
    explicit CsvTable(std::vector<std::string> header);
    void add_row(const std::vector<double>& values);
    std::string str() const;
    std::size_t rows() const noexcept { return rows_.size(); }

private:
    std::vector<std::string> header_;
    std::vector<std::vector<double>> rows_;
};

using ScalarChannel = std::pair<std::string, std::vector<double>>;
using VectorChannel = std::pair<std::string, std::vector<Vec3>>;

/// Legacy VTK structured points with cell data.
void write_vtk(const std::string& path, const Lattice& lattice,
               const std::vector<ScalarChannel>& scalars, const std::vector<VectorChannel>& vectors);

void write_mask_vtk(const std::string& path, const IndicatorField& mask);
/// Cell-centred velocity, pressure and the fluid mask.
void write_field_vtk(const std::string& path, const StaggeredField& field,
                     const IndicatorField& mask);
void write_macro_vtk(const std::string& path, const MacroState& state);

/// Raw mask: 16-byte little-endian header (uint32 nx, ny, nz, dtype tag
/// 1 = uint8) followed by nx*ny*nz bytes, x fastest.
void write_raw_mask(const std::string& path, const IndicatorField& mask);
/// Periodic cell read back from a raw mask (nz == 1 means two dimensions).
IndicatorField read_raw_mask(const std::string& path, bool periodic = true);

}  // namespace dpm
