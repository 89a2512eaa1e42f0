#pragma once

// Artifact export: front meshes and grid snapshots as a JSON header plus a
// flat little-endian float64 payload (row-major), rays as CSV.

#include <filesystem>

#include "triplewave/geometry.hpp"
#include "triplewave/solver.hpp"

namespace triplewave {

/// Writes <stem>.json and <stem>.f64. Payload layout: for each (gamma, fiber,
/// s) node in row-major order, the spacetime point followed by the covector
/// (2n doubles per node), then one double jacobian_det per node.
void export_front_mesh(const FrontMesh& mesh, const std::filesystem::path& stem,
                       const std::string& scenario_name);

/// CSV with header s,t,x...,tau,xi... one row per sample.
void export_ray_csv(const Ray& ray, const std::filesystem::path& path);

/// Writes <stem>.json and <stem>.f64; one row-major block per recorded time.
void export_grid_field(const GridField& field, const std::filesystem::path& stem,
                       const std::string& scenario_name);

/// Little-endian float64 writer shared by the exporters.
void write_f64_payload(const std::filesystem::path& path, const std::vector<double>& values);

/// Reads back a payload written by write_f64_payload (used by round-trip tests).
std::vector<double> read_f64_payload(const std::filesystem::path& path);

}  // namespace triplewave
