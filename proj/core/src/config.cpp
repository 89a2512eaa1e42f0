#include "triplewave/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace triplewave {

namespace {

using nlohmann::json;

void require_object(const json& j, const std::string& ptr) {
  if (!j.is_object()) throw ArgumentError("config: expected an object at " + ptr);
}

void reject_unknown(const json& j, const std::string& ptr,
                    std::initializer_list<const char*> keys) {
  for (const auto& item : j.items()) {
    const bool known =
        std::any_of(keys.begin(), keys.end(), [&](const char* k) { return item.key() == k; });
    if (!known) throw ArgumentError("config: unknown key at " + ptr + "/" + item.key());
  }
}

template <typename T>
void read_field(const json& j, const std::string& ptr, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ArgumentError("config: bad value at " + ptr + "/" + key + ": " + e.what());
  }
}

void parse_into(const json& j, const std::string& ptr, GridConfig& c) {
  require_object(j, ptr);
  reject_unknown(j, ptr, {"n", "half_width"});
  read_field(j, ptr, "n", c.n);
  read_field(j, ptr, "half_width", c.half_width);
}

void parse_into(const json& j, const std::string& ptr, ProfileConfig& c) {
  require_object(j, ptr);
  reject_unknown(j, ptr, {"kind", "k", "m", "eps_cells", "width", "amplitude"});
  read_field(j, ptr, "kind", c.kind);
  read_field(j, ptr, "k", c.k);
  read_field(j, ptr, "m", c.m);
  read_field(j, ptr, "eps_cells", c.eps_cells);
  read_field(j, ptr, "width", c.width);
  read_field(j, ptr, "amplitude", c.amplitude);
}

void parse_into(const json& j, const std::string& ptr, CutoffConfig& c) {
  require_object(j, ptr);
  reject_unknown(j, ptr, {"t_on", "ramp", "r_in", "r_out"});
  read_field(j, ptr, "t_on", c.t_on);
  read_field(j, ptr, "ramp", c.ramp);
  read_field(j, ptr, "r_in", c.r_in);
  read_field(j, ptr, "r_out", c.r_out);
}

void parse_into(const json& j, const std::string& ptr, SolveConfig& c) {
  require_object(j, ptr);
  reject_unknown(j, ptr, {"t0", "t_end", "cfl", "record_times", "bc"});
  read_field(j, ptr, "t0", c.t0);
  read_field(j, ptr, "t_end", c.t_end);
  read_field(j, ptr, "cfl", c.cfl);
  read_field(j, ptr, "record_times", c.record_times);
  read_field(j, ptr, "bc", c.bc);
}

void parse_into(const json& j, const std::string& ptr, DetectConfig& c) {
  require_object(j, ptr);
  reject_unknown(j, ptr,
                 {"time", "band_lo_cells", "band_hi_cells", "r_min", "dist_tol_cells", "cover_min",
                  "mask_radius_cells", "gamma_mask_radius_cells", "tube_radius_cells"});
  read_field(j, ptr, "time", c.time);
  read_field(j, ptr, "band_lo_cells", c.band_lo_cells);
  read_field(j, ptr, "band_hi_cells", c.band_hi_cells);
  read_field(j, ptr, "r_min", c.r_min);
  read_field(j, ptr, "dist_tol_cells", c.dist_tol_cells);
  read_field(j, ptr, "cover_min", c.cover_min);
  read_field(j, ptr, "mask_radius_cells", c.mask_radius_cells);
  read_field(j, ptr, "gamma_mask_radius_cells", c.gamma_mask_radius_cells);
  read_field(j, ptr, "tube_radius_cells", c.tube_radius_cells);
}

void parse_into(const json& j, const std::string& ptr, RaysConfig& c) {
  require_object(j, ptr);
  reject_unknown(j, ptr, {"n_gamma", "n_fiber", "s_max", "res"});
  read_field(j, ptr, "n_gamma", c.n_gamma);
  read_field(j, ptr, "n_fiber", c.n_fiber);
  read_field(j, ptr, "s_max", c.s_max);
  read_field(j, ptr, "res", c.res);
}

void parse_into(const json& j, const std::string& ptr, NormsConfig& c) {
  require_object(j, ptr);
  reject_unknown(j, ptr, {"suites", "base_grid", "refinements", "delta"});
  read_field(j, ptr, "suites", c.suites);
  read_field(j, ptr, "base_grid", c.base_grid);
  read_field(j, ptr, "refinements", c.refinements);
  read_field(j, ptr, "delta", c.delta);
}

void parse_into(const json& j, const std::string& ptr, ToleranceConfig& c) {
  require_object(j, ptr);
  reject_unknown(j, ptr, {"tol_eikonal", "rtol_ray", "tol_transversal", "closed_form_max"});
  read_field(j, ptr, "tol_eikonal", c.tol_eikonal);
  read_field(j, ptr, "rtol_ray", c.rtol_ray);
  read_field(j, ptr, "tol_transversal", c.tol_transversal);
  read_field(j, ptr, "closed_form_max", c.closed_form_max);
}

ConormalProfile::Kind profile_kind_from_string(const std::string& s) {
  if (s == "xplus") return ConormalProfile::Kind::xplus;
  if (s == "smoothed_jump") return ConormalProfile::Kind::smoothed_jump;
  if (s == "band_limited") return ConormalProfile::Kind::band_limited;
  throw ArgumentError("config: unknown profile kind '" + s +
                      "' (expected xplus, smoothed_jump, or band_limited)");
}

}  // namespace

RunConfig parse_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ArgumentError(std::string("config: JSON parse failure: ") + e.what());
  }
  require_object(j, "");
  reject_unknown(j, "", {"scenario", "a", "b", "lens_amp", "seed", "threads", "grid", "profile",
                         "cutoff", "solve", "detect", "rays", "norms", "tolerances"});

  RunConfig cfg;
  read_field(j, "", "scenario", cfg.scenario);
  scenario_id_from_string(cfg.scenario);  // validate early, fail-closed
  read_field(j, "", "a", cfg.a);
  read_field(j, "", "b", cfg.b);
  read_field(j, "", "lens_amp", cfg.lens_amp);
  read_field(j, "", "seed", cfg.seed);
  read_field(j, "", "threads", cfg.threads);
  if (cfg.threads < 1) throw ArgumentError("config: bad value at /threads: must be >= 1");
  if (j.contains("grid")) parse_into(j.at("grid"), "/grid", cfg.grid);
  if (j.contains("profile")) parse_into(j.at("profile"), "/profile", cfg.profile);
  if (j.contains("cutoff")) parse_into(j.at("cutoff"), "/cutoff", cfg.cutoff);
  if (j.contains("solve")) parse_into(j.at("solve"), "/solve", cfg.solve);
  if (j.contains("detect")) parse_into(j.at("detect"), "/detect", cfg.detect);
  if (j.contains("rays")) parse_into(j.at("rays"), "/rays", cfg.rays);
  if (j.contains("norms")) parse_into(j.at("norms"), "/norms", cfg.norms);
  if (j.contains("tolerances")) parse_into(j.at("tolerances"), "/tolerances", cfg.tolerances);
  profile_kind_from_string(cfg.profile.kind);  // validate
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ArgumentError("config: cannot open " + path.string());
  std::ostringstream buf;
  buf << is.rdbuf();
  return parse_config(buf.str());
}

std::string to_json_text(const RunConfig& cfg) {
  json j;
  j["scenario"] = cfg.scenario;
  j["a"] = cfg.a;
  j["b"] = cfg.b;
  j["lens_amp"] = cfg.lens_amp;
  j["seed"] = cfg.seed;
  j["threads"] = cfg.threads;
  j["grid"] = {{"n", cfg.grid.n}, {"half_width", cfg.grid.half_width}};
  j["profile"] = {{"kind", cfg.profile.kind},         {"k", cfg.profile.k},
                  {"m", cfg.profile.m},               {"eps_cells", cfg.profile.eps_cells},
                  {"width", cfg.profile.width},       {"amplitude", cfg.profile.amplitude}};
  j["cutoff"] = {{"t_on", cfg.cutoff.t_on},
                 {"ramp", cfg.cutoff.ramp},
                 {"r_in", cfg.cutoff.r_in},
                 {"r_out", cfg.cutoff.r_out}};
  j["solve"] = {{"t0", cfg.solve.t0},
                {"t_end", cfg.solve.t_end},
                {"cfl", cfg.solve.cfl},
                {"record_times", cfg.solve.record_times},
                {"bc", cfg.solve.bc}};
  j["detect"] = {{"time", cfg.detect.time},
                 {"band_lo_cells", cfg.detect.band_lo_cells},
                 {"band_hi_cells", cfg.detect.band_hi_cells},
                 {"r_min", cfg.detect.r_min},
                 {"dist_tol_cells", cfg.detect.dist_tol_cells},
                 {"cover_min", cfg.detect.cover_min},
                 {"mask_radius_cells", cfg.detect.mask_radius_cells},
                 {"gamma_mask_radius_cells", cfg.detect.gamma_mask_radius_cells},
                 {"tube_radius_cells", cfg.detect.tube_radius_cells}};
  j["rays"] = {{"n_gamma", cfg.rays.n_gamma},
               {"n_fiber", cfg.rays.n_fiber},
               {"s_max", cfg.rays.s_max},
               {"res", cfg.rays.res}};
  j["norms"] = {{"suites", cfg.norms.suites},
                {"base_grid", cfg.norms.base_grid},
                {"refinements", cfg.norms.refinements},
                {"delta", cfg.norms.delta}};
  j["tolerances"] = {{"tol_eikonal", cfg.tolerances.tol_eikonal},
                     {"rtol_ray", cfg.tolerances.rtol_ray},
                     {"tol_transversal", cfg.tolerances.tol_transversal},
                     {"closed_form_max", cfg.tolerances.closed_form_max}};
  return j.dump(2) + "\n";
}

ScenarioParams RunConfig::scenario_params() const {
  ScenarioParams p;
  p.a = a;
  p.b = b;
  p.lens_amp = lens_amp;
  return p;
}

Scenario RunConfig::make() const { return make_scenario(scenario, scenario_params()); }

Grid RunConfig::make_grid() const {
  const Scenario sc = make();
  return Grid::square(sc.op.dim() - 1, grid.n, grid.half_width);
}

std::array<ConormalProfile, 3> RunConfig::make_profiles() const {
  ConormalProfile p;
  p.kind = profile_kind_from_string(profile.kind);
  p.k = profile.k;
  p.m = profile.m;
  p.eps = profile.eps_cells * make_grid().h;
  p.width = profile.width;
  p.amplitude = profile.amplitude;
  return {p, p, p};
}

std::function<double(const Vec&)> RunConfig::make_cutoff_fn() const {
  return make_cutoff(cutoff.t_on, cutoff.ramp, cutoff.r_in, cutoff.r_out);
}

}  // namespace triplewave
