#pragma once

// Field files: raw little-endian float64, row-major, plus "<file>.json" with
// {"kind", "d", "nt", "nx", "R", "layout", "components", "count"}.
// layout is one of "spatial" (one slice), "slices", "cells", "faces".
//
// JSON documents are exchanged as text so the JSON library stays private.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mfplan/dual.hpp"
#include "mfplan/grid.hpp"
#include "mfplan/lagrangian.hpp"
#include "mfplan/model.hpp"
#include "mfplan/primal.hpp"

namespace mfplan {

struct FieldFile {
  std::string kind;    // density | momentum | scalar
  std::string layout;  // spatial | slices | cells | faces
  GridSpec grid;
  int components = 1;
  std::vector<double> data;
};

void write_field(const std::filesystem::path& path, const FieldFile& field);
FieldFile read_field(const std::filesystem::path& path);

FieldFile to_field_file(const Density& m);
FieldFile to_field_file(const SliceField& f, const std::string& kind);
FieldFile to_field_file(const CellField& f);
FieldFile to_field_file(const MomentumField& w);

Density density_from(const FieldFile& f);
SliceField slices_from(const FieldFile& f);
CellField cells_from(const FieldFile& f);
MomentumField momentum_from(const FieldFile& f);

// d = 1 only. Columns: t,x,value (spatial layouts omit t; faces use face
// coordinates and cell-centred times).
void write_field_csv(const std::filesystem::path& path, const FieldFile& field);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

// Relative field references inside a model file resolve against `base_dir`.
ModelSpec model_from_json(const std::string& text, const std::filesystem::path& base_dir = {});
std::string model_to_json(const ModelSpec& model);
GridSpec grid_from_json(const std::string& text);
std::string grid_to_json(const GridSpec& grid);
// Unknown keys are rejected.
SolverConfig config_from_json(const std::string& text);
std::string config_to_json(const SolverConfig& config);

std::string report_to_json(const DiagnosticsReport& report);
std::string apriori_to_json(const AprioriReport& report);
std::string superposition_to_json(const SuperpositionReport& report);
std::string optimality_to_json(const OptimalityReport& report);

void write_history_csv(const std::filesystem::path& path, const std::vector<HistoryEntry>& history);
std::vector<HistoryEntry> read_history_csv(const std::filesystem::path& path);

// 64-bit FNV-1a, rendered as 16 hex digits.
std::string fnv1a_hex(const std::string& bytes);

}  // namespace mfplan
