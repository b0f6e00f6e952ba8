#include "uavmpc/scenario.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>
#include <type_traits>

#include <json.hpp>

#include "uavmpc/errors.hpp"

namespace uavmpc {

namespace {

using json = nlohmann::json;

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

// Object view that records which keys were read so leftovers can be rejected.
class Section {
public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_, "expected an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  const json* raw(const std::string& key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  std::optional<Section> sub(const std::string& key) {
    const json* v = raw(key);
    if (!v) return std::nullopt;
    return Section(*v, join(path_, key));
  }

  Section require_sub(const std::string& key) {
    auto s = sub(key);
    if (!s) throw ConfigError(join(path_, key), "required");
    return *s;
  }

  void get(const std::string& key, double& out) {
    if (const json* v = raw(key)) out = number(*v, join(path_, key));
  }

  void get(const std::string& key, int& out) {
    if (const json* v = raw(key)) {
      if (!v->is_number_integer()) throw ConfigError(join(path_, key), "expected an integer");
      out = v->get<int>();
    }
  }

  template <typename U>
    requires std::is_unsigned_v<U>
  void get(const std::string& key, U& out) {
    if (const json* v = raw(key)) {
      if (!v->is_number_unsigned()) throw ConfigError(join(path_, key), "expected a non-negative integer");
      out = v->get<U>();
    }
  }

  void get(const std::string& key, Vec3& out) {
    if (const json* v = raw(key)) out = vector<3>(*v, join(path_, key));
  }

  void get(const std::string& key, Eigen::Vector2d& out) {
    if (const json* v = raw(key)) out = vector<2>(*v, join(path_, key));
  }

  void require(const std::string& key, Vec3& out) {
    if (!has(key)) throw ConfigError(join(path_, key), "required");
    get(key, out);
  }

  void finish() const {
    for (const auto& [key, value] : j_.items())
      if (!seen_.count(key)) throw ConfigError(join(path_, key), "unknown key");
  }

  const std::string& path() const { return path_; }

  static double number(const json& v, const std::string& path) {
    if (!v.is_number()) throw ConfigError(path, "expected a number");
    return v.get<double>();
  }

  template <int N>
  static Eigen::Matrix<double, N, 1> vector(const json& v, const std::string& path) {
    if (!v.is_array() || v.size() != N)
      throw ConfigError(path, "expected an array of " + std::to_string(N) + " numbers");
    Eigen::Matrix<double, N, 1> out;
    for (int i = 0; i < N; ++i) out[i] = number(v[i], path + "[" + std::to_string(i) + "]");
    return out;
  }

private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

json to_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }
json to_json(const Eigen::Vector2d& v) { return json::array({v.x(), v.y()}); }

Aabb read_box(Section s) {
  Aabb b;
  s.require("min", b.min);
  s.require("max", b.max);
  s.finish();
  return b;
}

void read_range(Section& s, const std::string& key, double& lo, double& hi) {
  if (const json* v = s.raw(key)) {
    const Eigen::Vector2d r = Section::vector<2>(*v, join(s.path(), key));
    lo = r[0];
    hi = r[1];
  }
}

void read_world(Section s, Scenario& sc) {
  sc.world.bounds = read_box(s.require_sub("bounds"));
  if (const json* cyl = s.raw("cylinders")) {
    if (!cyl->is_array()) throw ConfigError("world.cylinders", "expected an array");
    for (std::size_t i = 0; i < cyl->size(); ++i) {
      Section c((*cyl)[i], "world.cylinders[" + std::to_string(i) + "]");
      Cylinder cy;
      cy.z_min = sc.world.bounds.min.z();
      cy.z_max = sc.world.bounds.max.z();
      if (!c.has("center")) throw ConfigError(join(c.path(), "center"), "required");
      c.get("center", cy.center);
      c.get("radius", cy.radius);
      read_range(c, "z", cy.z_min, cy.z_max);
      c.finish();
      sc.world.cylinders.push_back(cy);
    }
  }
  if (const json* boxes = s.raw("boxes")) {
    if (!boxes->is_array()) throw ConfigError("world.boxes", "expected an array");
    for (std::size_t i = 0; i < boxes->size(); ++i)
      sc.world.boxes.push_back(read_box(Section((*boxes)[i], "world.boxes[" + std::to_string(i) + "]")));
  }
  if (auto g = s.sub("generator")) {
    CylinderFieldSpec spec;
    g->get("count", spec.count);
    read_range(*g, "radius", spec.radius_min, spec.radius_max);
    g->get("region_min", spec.region_min);
    g->get("region_max", spec.region_max);
    g->get("min_gap", spec.min_gap);
    g->get("keep_out", spec.keep_out);
    g->get("vertical_overhang", spec.vertical_overhang);
    g->finish();
    if (spec.count < 0) throw ConfigError("world.generator.count", "must be >= 0");
    if (!(spec.radius_min > 0.0) || spec.radius_max < spec.radius_min)
      throw ConfigError("world.generator.radius", "need 0 < min <= max");
    if ((spec.region_max - spec.region_min).minCoeff() <= 0.0)
      throw ConfigError("world.generator.region_max", "must exceed region_min");
    if (!(spec.min_gap >= 0.0)) throw ConfigError("world.generator.min_gap", "must be >= 0");
    if (!(spec.keep_out >= 0.0)) throw ConfigError("world.generator.keep_out", "must be >= 0");
    if (!(spec.vertical_overhang >= 0.0)) throw ConfigError("world.generator.vertical_overhang", "must be >= 0");
    sc.generator = spec;
  }
  s.finish();
}

Scenario from_json(const json& root) {
  Scenario sc;
  EpisodeSettings& st = sc.settings;
  Section top(root, "");
  read_world(top.require_sub("world"), sc);
  top.require("start", st.start);
  top.require("goal", st.goal);
  if (const json* p = top.raw("planner")) {
    if (*p == "mpc") sc.planner = PlannerKind::mpc;
    else if (*p == "apf") sc.planner = PlannerKind::apf;
    else throw ConfigError("planner", "expected \"mpc\" or \"apf\"");
  }
  top.get("seed", sc.seed);

  if (auto s = top.sub("dynamics")) {
    s->get("tau", st.dynamics.tau);
    if (const json* d = s->raw("d_max"))
      st.dynamics.d_max = d->is_array() ? Section::vector<3>(*d, "dynamics.d_max")
                                        : Vec3::Constant(Section::number(*d, "dynamics.d_max"));
    s->get("v_max", st.dynamics.v_max);
    s->get("a_max", st.dynamics.a_max);
    s->get("u_max", st.dynamics.u_max);
    s->finish();
  }
  if (auto s = top.sub("reference")) {
    s->get("v_ref", st.reference.v_ref);
    s->get("horizon", st.reference.horizon);
    s->finish();
  }
  if (auto s = top.sub("sensor")) {
    s->get("range", st.sensor.range);
    s->get("azimuth_rays", st.sensor.azimuth_rays);
    s->get("elevation_rays", st.sensor.elevation_rays);
    s->get("elevation_fov", st.sensor.elevation_fov);
    s->finish();
  }
  if (auto s = top.sub("mapping")) {
    s->get("resolution", st.mapping.resolution);
    s->get("uav_size", st.mapping.uav_size);
    s->get("obstacle_cap", st.mapping.obstacle_cap);
    s->get("grid_half_height", st.mapping.grid_half_height);
    s->finish();
  }
  if (auto s = top.sub("weights")) {
    s->get("w_t", st.weights.w_t);
    s->get("w_s", st.weights.w_s);
    s->get("w_c", st.weights.w_c);
    s->get("w_j", st.weights.w_j);
    s->get("alpha", st.weights.alpha);
    s->get("r", st.weights.r);
    s->finish();
  }
  st.apf.v_cap = st.reference.v_ref;
  if (auto s = top.sub("apf")) {
    s->get("k_att", st.apf.k_att);
    s->get("k_rep", st.apf.k_rep);
    s->get("rho0", st.apf.rho0);
    s->get("v_cap", st.apf.v_cap);
    s->get("speed_gain", st.apf.speed_gain);
    s->get("velocity_gain", st.apf.velocity_gain);
    s->get("accel_gain", st.apf.accel_gain);
    s->finish();
  }
  if (auto s = top.sub("solver")) {
    s->get("max_iterations", st.solver.max_iterations);
    s->get("cost_tolerance", st.solver.cost_tolerance);
    s->get("constraint_tolerance", st.solver.constraint_tolerance);
    s->get("fd_step", st.solver.fd_step);
    s->finish();
  }
  if (auto s = top.sub("episode")) {
    s->get("goal_tolerance", st.episode.goal_tolerance);
    s->get("time_limit", st.episode.time_limit);
    s->get("stall_window", st.episode.stall_window);
    s->get("stall_progress", st.episode.stall_progress);
    s->finish();
  }
  top.finish();
  return sc;
}

json to_json(const Scenario& sc) {
  const EpisodeSettings& st = sc.settings;
  json world = {{"bounds", {{"min", to_json(sc.world.bounds.min)}, {"max", to_json(sc.world.bounds.max)}}},
                {"cylinders", json::array()},
                {"boxes", json::array()}};
  for (const auto& c : sc.world.cylinders)
    world["cylinders"].push_back(
        {{"center", to_json(c.center)}, {"radius", c.radius}, {"z", json::array({c.z_min, c.z_max})}});
  for (const auto& b : sc.world.boxes)
    world["boxes"].push_back({{"min", to_json(b.min)}, {"max", to_json(b.max)}});
  if (sc.generator) {
    const auto& g = *sc.generator;
    world["generator"] = {{"count", g.count},
                          {"radius", json::array({g.radius_min, g.radius_max})},
                          {"region_min", to_json(g.region_min)},
                          {"region_max", to_json(g.region_max)},
                          {"min_gap", g.min_gap},
                          {"keep_out", g.keep_out},
                          {"vertical_overhang", g.vertical_overhang}};
  }
  return {
      {"world", world},
      {"start", to_json(st.start)},
      {"goal", to_json(st.goal)},
      {"planner", to_string(sc.planner)},
      {"seed", sc.seed},
      {"dynamics",
       {{"tau", st.dynamics.tau},
        {"d_max", to_json(st.dynamics.d_max)},
        {"v_max", st.dynamics.v_max},
        {"a_max", st.dynamics.a_max},
        {"u_max", st.dynamics.u_max}}},
      {"reference", {{"v_ref", st.reference.v_ref}, {"horizon", st.reference.horizon}}},
      {"sensor",
       {{"range", st.sensor.range},
        {"azimuth_rays", st.sensor.azimuth_rays},
        {"elevation_rays", st.sensor.elevation_rays},
        {"elevation_fov", st.sensor.elevation_fov}}},
      {"mapping",
       {{"resolution", st.mapping.resolution},
        {"uav_size", st.mapping.uav_size},
        {"obstacle_cap", st.mapping.obstacle_cap},
        {"grid_half_height", st.mapping.grid_half_height}}},
      {"weights",
       {{"w_t", st.weights.w_t},
        {"w_s", st.weights.w_s},
        {"w_c", st.weights.w_c},
        {"w_j", st.weights.w_j},
        {"alpha", st.weights.alpha},
        {"r", st.weights.r}}},
      {"apf",
       {{"k_att", st.apf.k_att},
        {"k_rep", st.apf.k_rep},
        {"rho0", st.apf.rho0},
        {"v_cap", st.apf.v_cap},
        {"speed_gain", st.apf.speed_gain},
        {"velocity_gain", st.apf.velocity_gain},
        {"accel_gain", st.apf.accel_gain}}},
      {"solver",
       {{"max_iterations", st.solver.max_iterations},
        {"cost_tolerance", st.solver.cost_tolerance},
        {"constraint_tolerance", st.solver.constraint_tolerance},
        {"fd_step", st.solver.fd_step}}},
      {"episode",
       {{"goal_tolerance", st.episode.goal_tolerance},
        {"time_limit", st.episode.time_limit},
        {"stall_window", st.episode.stall_window},
        {"stall_progress", st.episode.stall_progress}}},
  };
}

std::string line_column(std::string_view text, std::size_t byte) {
  byte = std::min(byte, text.size());
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i + 1 < byte; ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return std::to_string(line) + ":" + std::to_string(col);
}

std::string format_number(double v, int precision) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(precision) << v;
  return os.str();
}

}  // namespace

Scenario parse_scenario(std::string_view text) {
  json root;
  try {
    root = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    std::string msg = e.what();
    if (auto pos = msg.find("syntax error"); pos != std::string::npos) msg = msg.substr(pos);
    throw ConfigError("", "line " + line_column(text, e.byte) + ": " + msg);
  }
  Scenario sc = from_json(root);
  validate_scenario(sc);
  return sc;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return parse_scenario(buf.str());
  } catch (const ConfigError& e) {
    throw e.with_context(path.string());
  }
}

std::string dump_scenario(const Scenario& scenario) { return to_json(scenario).dump(2) + "\n"; }

void save_scenario(const Scenario& scenario, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << dump_scenario(scenario);
}

ObstacleWorld materialize_world(const Scenario& scenario) {
  ObstacleWorld world = scenario.world;
  if (scenario.generator)
    add_cylinder_field(world, *scenario.generator, scenario.settings.start, scenario.settings.goal,
                       scenario.seed);
  return world;
}

void validate_scenario(const Scenario& scenario) { scenario.settings.validate(materialize_world(scenario)); }

int exit_code(Outcome outcome) {
  switch (outcome) {
    case Outcome::reached: return 0;
    case Outcome::collided: return 2;
    case Outcome::stalled:
    case Outcome::timeout: return 3;
  }
  return 3;
}

ComparisonRow summarize(const std::string& label, const EpisodeLog& log) {
  return {label, log.planner, log.outcome, compute_metrics(log), log.wall_time};
}

std::string format_comparison_table(const std::vector<ComparisonRow>& rows) {
  const std::vector<std::string> header{"Scenario", "Planner", "Outcome", "Motion time (s)",
                                        "Motion length (m)", "Energy"};
  std::vector<std::vector<std::string>> cells{header};
  for (const auto& r : rows)
    cells.push_back({r.label, std::string(to_string(r.planner)), std::string(to_string(r.outcome)),
                     format_number(r.metrics.motion_time, 1), format_number(r.metrics.motion_length, 4),
                     format_number(r.metrics.energy, 4)});
  std::vector<std::size_t> width(header.size(), 0);
  for (const auto& row : cells)
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  std::ostringstream os;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    for (std::size_t c = 0; c < cells[i].size(); ++c) {
      if (c) os << "  ";
      if (c < 3)
        os << std::left << std::setw(static_cast<int>(width[c])) << cells[i][c];
      else
        os << std::right << std::setw(static_cast<int>(width[c])) << cells[i][c];
    }
    os << '\n';
    if (i == 0) {
      std::size_t total = 2 * (width.size() - 1);
      for (auto w : width) total += w;
      os << std::string(total, '-') << '\n';
    }
  }
  return os.str();
}

void write_comparison_csv(const std::vector<ComparisonRow>& rows, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << std::setprecision(17) << "scenario,planner,outcome,motion_time,motion_length,energy,wall_time\n";
  for (const auto& r : rows)
    out << r.label << ',' << to_string(r.planner) << ',' << to_string(r.outcome) << ','
        << r.metrics.motion_time << ',' << r.metrics.motion_length << ',' << r.metrics.energy << ','
        << r.wall_time << '\n';
}

void write_comparison_json(const std::vector<ComparisonRow>& rows, const std::filesystem::path& path) {
  json arr = json::array();
  for (const auto& r : rows)
    arr.push_back({{"scenario", r.label},
                   {"planner", to_string(r.planner)},
                   {"outcome", to_string(r.outcome)},
                   {"motion_time", r.metrics.motion_time},
                   {"motion_length", r.metrics.motion_length},
                   {"energy", r.metrics.energy},
                   {"wall_time", r.wall_time}});
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << arr.dump(2) << '\n';
}

EpisodeLog run_and_write(const Scenario& scenario, PlannerKind planner, const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());
  const std::string name(to_string(planner));
  // Probe writability before spending time on the episode.
  {
    const auto probe = out_dir / (name + "_summary.json");
    std::ofstream test(probe, std::ios::app);
    if (!test) throw IoError("cannot write to " + out_dir.string());
  }
  const EpisodeLog log = run_episode(materialize_world(scenario), planner, scenario.settings);
  write_log_csv(log, out_dir / (name + "_log.csv"));
  write_summary_json(log, out_dir / (name + "_summary.json"));
  write_plot_csv(log, out_dir / (name + "_plot.csv"));
  return log;
}

}  // namespace uavmpc
