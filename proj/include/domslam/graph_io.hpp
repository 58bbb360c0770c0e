#pragma once

#include <filesystem>
#include <istream>
#include <ostream>
#include <string>

#include "domslam/dataset.hpp"
#include "domslam/graph.hpp"

namespace domslam {

/// Line-oriented text format, one record per line, '#' starts a comment:
///
///   VERTEX_POSE id rho phi
///   VERTEX_POINT id x y z [OBJ j] [STEP k] [PID i]
///   VERTEX_MOTION id rho phi OBJ j [STEP k]
///   EDGE_ODOM from to rho phi info(21, upper triangle, row major)
///   EDGE_POINT pose point z(3) info(6)
///   EDGE_MOTION point_k point_k1 motion info(6)
///   FIX pose
///
/// Records reference earlier vertex records only. Numbers are written with
/// 17 significant digits so a graph reads back bit-exactly.
void write_graph(std::ostream& out, const FactorGraph& graph);
std::string format_graph(const FactorGraph& graph);

/// Throws ParseError with the 1-based line of the first bad record.
FactorGraph read_graph(std::istream& in);
FactorGraph parse_graph(const std::string& text);

/// File variants; I/O failures throw Error.
void write_graph_file(const std::filesystem::path& path, const FactorGraph& graph);
FactorGraph read_graph_file(const std::filesystem::path& path);

/// Vertex-only graph of the true poses, point positions (static points
/// without a step, dynamic points per step) and per-step object motions.
FactorGraph ground_truth_graph(const Dataset& dataset);

}  // namespace domslam
