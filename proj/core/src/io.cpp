#include "triplewave/io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "json.hpp"

namespace triplewave {

namespace {

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw ArgumentError("cannot open " + path.string() + " for writing");
  os << text;
  if (!os) throw NumericError("write failed for " + path.string());
}

}  // namespace

void write_f64_payload(const std::filesystem::path& path, const std::vector<double>& values) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw ArgumentError("cannot open " + path.string() + " for writing");
  static_assert(sizeof(double) == 8);
  for (double v : values) {
    uint64_t bits;
    std::memcpy(&bits, &v, 8);
    if constexpr (std::endian::native == std::endian::big) {
      uint64_t sw = 0;
      for (int b = 0; b < 8; ++b) sw |= ((bits >> (8 * (7 - b))) & 0xffu) << (8 * b);
      bits = sw;
    }
    char buf[8];
    std::memcpy(buf, &bits, 8);
    os.write(buf, 8);
  }
  if (!os) throw NumericError("write failed for " + path.string());
}

std::vector<double> read_f64_payload(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ArgumentError("cannot open " + path.string());
  is.seekg(0, std::ios::end);
  const std::streamoff bytes = is.tellg();
  if (bytes < 0 || bytes % 8 != 0)
    throw ArgumentError("payload " + path.string() + " is not a multiple of 8 bytes");
  is.seekg(0, std::ios::beg);
  std::vector<double> out(static_cast<std::size_t>(bytes / 8));
  for (double& v : out) {
    char buf[8];
    is.read(buf, 8);
    uint64_t bits;
    std::memcpy(&bits, buf, 8);
    if constexpr (std::endian::native == std::endian::big) {
      uint64_t sw = 0;
      for (int b = 0; b < 8; ++b) sw |= ((bits >> (8 * (7 - b))) & 0xffu) << (8 * b);
      bits = sw;
    }
    std::memcpy(&v, &bits, 8);
  }
  if (!is) throw NumericError("read failed for " + path.string());
  return out;
}

void export_front_mesh(const FrontMesh& mesh, const std::filesystem::path& stem,
                       const std::string& scenario_name) {
  nlohmann::json j;
  j["kind"] = "front_mesh";
  j["scenario"] = scenario_name;
  j["n_gamma"] = mesh.n_gamma;
  j["n_fiber"] = mesh.n_fiber;
  j["n_s"] = mesh.n_s;
  j["dim"] = mesh.dim;
  j["s_values"] = mesh.s_values;
  j["jacobian_median"] = mesh.jacobian_median;
  j["caustic_flags"] = mesh.caustic_flag;
  j["node_ok"] = mesh.node_ok;
  j["payload"] = stem.filename().string() + ".f64";
  j["payload_layout"] = "per node: point(dim), covector(dim); then jacobian_det per node";

  std::vector<double> payload;
  payload.reserve(mesh.size() * (2 * mesh.dim + 1));
  for (std::size_t c = 0; c < mesh.size(); ++c) {
    for (int a = 0; a < mesh.dim; ++a) payload.push_back(mesh.points[c][a]);
    for (int a = 0; a < mesh.dim; ++a) payload.push_back(mesh.covectors[c][a]);
  }
  for (std::size_t c = 0; c < mesh.size(); ++c) payload.push_back(mesh.jacobian_det[c]);

  auto json_path = stem;
  json_path += ".json";
  auto f64_path = stem;
  f64_path += ".f64";
  write_text(json_path, j.dump(2) + "\n");
  write_f64_payload(f64_path, payload);
}

void export_ray_csv(const Ray& ray, const std::filesystem::path& path) {
  if (ray.pts.empty()) throw ArgumentError("export_ray_csv: empty ray");
  const int n = static_cast<int>(ray.pts[0].y.size());
  std::ostringstream os;
  os << "s,t";
  for (int a = 1; a < n; ++a) os << ",x" << a;
  os << ",tau";
  for (int a = 1; a < n; ++a) os << ",xi" << a;
  os << "\n";
  os << std::setprecision(17);
  for (std::size_t i = 0; i < ray.pts.size(); ++i) {
    os << ray.s[i];
    for (int a = 0; a < n; ++a) os << ',' << ray.pts[i].y[a];
    for (int a = 0; a < n; ++a) os << ',' << ray.pts[i].eta[a];
    os << "\n";
  }
  write_text(path, os.str());
}

void export_grid_field(const GridField& field, const std::filesystem::path& stem,
                       const std::string& scenario_name) {
  nlohmann::json j;
  j["kind"] = "grid_field";
  j["scenario"] = scenario_name;
  j["dim"] = field.grid.d;
  j["nx"] = std::vector<int>(field.grid.nx.begin(), field.grid.nx.begin() + field.grid.d);
  j["h"] = field.grid.h;
  std::vector<double> lo(field.grid.lo.data(), field.grid.lo.data() + field.grid.d);
  j["lo"] = lo;
  j["times"] = field.times;
  j["energy"] = field.energy;
  j["cfl"] = field.cfl;
  j["dt"] = field.dt;
  j["bc"] = field.bc;
  j["payload"] = stem.filename().string() + ".f64";
  j["payload_layout"] = "one row-major block per recorded time";

  std::vector<double> payload;
  payload.reserve(field.data.size() * field.grid.size());
  for (const auto& block : field.data) payload.insert(payload.end(), block.begin(), block.end());

  auto json_path = stem;
  json_path += ".json";
  auto f64_path = stem;
  f64_path += ".f64";
  write_text(json_path, j.dump(2) + "\n");
  write_f64_payload(f64_path, payload);
}

}  // namespace triplewave
