#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "mzbias/calibration.hpp"
#include "mzbias/mesh_graph.hpp"
#include "mzbias/unitary.hpp"

namespace mzbias {

using Json = nlohmann::ordered_json;

/// {"m": m, "entries": [[[re, im], ...], ...]}, row-major.
Json matrix_to_json(const ComplexMatrix& u);
ComplexMatrix matrix_from_json(const Json& j);

/// {"m", "architecture", "cells": [{"layer", "row", "psi", "theta", "t1", "t2"}], "output_phases"}.
Json mesh_to_json(const MeshParameters& p);
/// Validates the layout against the canonical one for the tagged architecture.
MeshParameters mesh_from_json(const Json& j);

/// Node and edge lists with (layer, row) coordinates.
Json graph_to_json(const MeshGraph& g);

Json estimate_to_json(const CalibrationEstimate& e, const std::vector<VoltagePhaseLaw>& truth);

Json read_json_file(const std::string& path);
void write_json_file(const std::string& path, const Json& j);

/// CSV with a header row of input modes and a header column of output modes,
/// both labelled 1..m. Rows are output modes.
void write_heatmap(std::ostream& os, const std::vector<std::vector<std::string>>& cells);
void write_heatmap(std::ostream& os, const Eigen::MatrixXd& a);
void write_heatmap_file(const std::string& path, const Eigen::MatrixXd& a);
void write_heatmap_file(const std::string& path, const std::vector<std::vector<std::string>>& cells);

/// Shortest round-trip decimal representation.
std::string format_double(double x);

}  // namespace mzbias
