#include "xfft/config.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace xfft {

using nlohmann::json;

ConfigError::ConfigError(const std::string& source, int line, const std::string& message)
    : std::runtime_error(source + ":" + std::to_string(line) + ": " + message), line_(line) {}

namespace {

// Records the line of every value by its path ("/solver/tol", "/phases/0").
// Runs on text that nlohmann already accepted, so it skips error handling.
class LineIndex {
 public:
  explicit LineIndex(const std::string& text) : s_(text) {
    skip_ws();
    value("");
  }

  int line_of(std::string path) const {
    while (true) {
      const auto it = lines_.find(path);
      if (it != lines_.end()) return it->second;
      if (path.empty()) return 1;
      path.erase(path.rfind('/'));
    }
  }

 private:
  void skip_ws() {
    while (i_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[i_]))) {
      if (s_[i_] == '\n') ++line_;
      ++i_;
    }
  }

  std::string string_token() {
    std::string out;
    ++i_;  // opening quote
    while (i_ < s_.size() && s_[i_] != '"') {
      if (s_[i_] == '\\') ++i_;
      out += s_[i_++];
    }
    ++i_;
    return out;
  }

  void value(const std::string& path) {
    lines_.emplace(path, line_);
    const char c = s_[i_];
    if (c == '{') {
      ++i_;
      skip_ws();
      while (s_[i_] != '}') {
        const int key_line = line_;
        const std::string key = path + "/" + string_token();
        skip_ws();
        ++i_;  // ':'
        skip_ws();
        value(key);
        lines_[key] = key_line;
        skip_ws();
        if (s_[i_] == ',') ++i_;
        skip_ws();
      }
      ++i_;
    } else if (c == '[') {
      ++i_;
      skip_ws();
      for (int index = 0; s_[i_] != ']'; ++index) {
        value(path + "/" + std::to_string(index));
        skip_ws();
        if (s_[i_] == ',') ++i_;
        skip_ws();
      }
      ++i_;
    } else if (c == '"') {
      string_token();
    } else {
      while (i_ < s_.size() && s_[i_] != ',' && s_[i_] != '}' && s_[i_] != ']' &&
             !std::isspace(static_cast<unsigned char>(s_[i_])))
        ++i_;
    }
  }

  const std::string& s_;
  std::size_t i_ = 0;
  int line_ = 1;
  std::map<std::string, int> lines_;
};

class Reader {
 public:
  Reader(const std::string& source, const LineIndex& index) : source_(source), index_(index) {}

  [[noreturn]] void fail(const std::string& path, const std::string& message) const {
    throw ConfigError(source_, index_.line_of(path), (path.empty() ? "/" : path) + ": " + message);
  }

  void allow_keys(const json& obj, const std::string& path, std::initializer_list<const char*> keys) const {
    if (!obj.is_object()) fail(path, "expected an object");
    const std::set<std::string> allowed(keys.begin(), keys.end());
    for (const auto& [key, value] : obj.items()) {
      if (!allowed.count(key)) fail(path + "/" + key, "unknown key '" + key + "'");
    }
  }

  const json& require(const json& obj, const std::string& path, const char* key) const {
    if (!obj.contains(key)) fail(path, std::string("missing required key '") + key + "'");
    return obj.at(key);
  }

  double number(const json& v, const std::string& path) const {
    if (!v.is_number()) fail(path, "expected a number");
    return v.get<double>();
  }

  int integer(const json& v, const std::string& path) const {
    if (!v.is_number_integer()) fail(path, "expected an integer");
    return v.get<int>();
  }

  bool boolean(const json& v, const std::string& path) const {
    if (!v.is_boolean()) fail(path, "expected true or false");
    return v.get<bool>();
  }

  std::string string(const json& v, const std::string& path) const {
    if (!v.is_string()) fail(path, "expected a string");
    return v.get<std::string>();
  }

  Vec3 vec3(const json& v, const std::string& path) const {
    if (!v.is_array() || v.size() != 3) fail(path, "expected an array of 3 numbers");
    Vec3 out;
    for (int a = 0; a < 3; ++a) out(a) = number(v[a], path + "/" + std::to_string(a));
    return out;
  }

 private:
  std::string source_;
  const LineIndex& index_;
};

Grid read_grid(const Reader& r, const json& g) {
  r.allow_keys(g, "/grid", {"n", "lengths", "edge"});
  std::array<int, 3> n{};
  const json& jn = r.require(g, "/grid", "n");
  if (jn.is_array()) {
    if (jn.size() != 3) r.fail("/grid/n", "expected an integer or an array of 3 integers");
    for (int a = 0; a < 3; ++a) n[a] = r.integer(jn[a], "/grid/n/" + std::to_string(a));
  } else {
    n.fill(r.integer(jn, "/grid/n"));
  }
  std::array<double, 3> lengths{1.0, 1.0, 1.0};
  if (g.contains("lengths") && g.contains("edge")) r.fail("/grid", "give either 'lengths' or 'edge', not both");
  if (g.contains("lengths")) {
    const Vec3 l = r.vec3(g["lengths"], "/grid/lengths");
    lengths = {l(0), l(1), l(2)};
  } else if (g.contains("edge")) {
    lengths.fill(r.number(g["edge"], "/grid/edge"));
  }
  try {
    return Grid(n, lengths);
  } catch (const std::exception& e) {
    r.fail("/grid", e.what());
  }
}

Shape read_shape(const Reader& r, const json& g, const std::string& path) {
  const std::string type = r.string(r.require(g, path, "type"), path + "/type");
  if (type == "sphere") {
    r.allow_keys(g, path, {"type", "phase", "center", "radius"});
    Sphere s{r.vec3(r.require(g, path, "center"), path + "/center"),
             r.number(r.require(g, path, "radius"), path + "/radius")};
    if (!(s.radius > 0.0)) r.fail(path + "/radius", "radius must be positive");
    return s;
  }
  if (type == "plane") {
    r.allow_keys(g, path, {"type", "phase", "point", "normal"});
    Plane p{r.vec3(r.require(g, path, "point"), path + "/point"),
            r.vec3(r.require(g, path, "normal"), path + "/normal")};
    if (!(p.normal.norm() > 0.0)) r.fail(path + "/normal", "normal must be nonzero");
    return p;
  }
  if (type == "slab") {
    r.allow_keys(g, path, {"type", "phase", "center", "normal", "width"});
    Slab s{r.vec3(r.require(g, path, "center"), path + "/center"),
           r.vec3(r.require(g, path, "normal"), path + "/normal"),
           r.number(r.require(g, path, "width"), path + "/width")};
    if (!(s.normal.norm() > 0.0)) r.fail(path + "/normal", "normal must be nonzero");
    if (!(s.width > 0.0)) r.fail(path + "/width", "width must be positive");
    return s;
  }
  if (type == "sphere_union") {
    r.allow_keys(g, path, {"type", "phase", "spheres"});
    const json& list = r.require(g, path, "spheres");
    if (!list.is_array() || list.empty()) r.fail(path + "/spheres", "expected a non-empty array");
    SphereUnion u;
    for (std::size_t i = 0; i < list.size(); ++i) {
      const std::string p = path + "/spheres/" + std::to_string(i);
      r.allow_keys(list[i], p, {"center", "radius"});
      u.spheres.push_back({r.vec3(r.require(list[i], p, "center"), p + "/center"),
                           r.number(r.require(list[i], p, "radius"), p + "/radius")});
      if (!(u.spheres.back().radius > 0.0)) r.fail(p + "/radius", "radius must be positive");
    }
    return u;
  }
  r.fail(path + "/type", "unknown geometry type '" + type + "' (expected sphere, plane, slab or sphere_union)");
}

int phase_index(const Reader& r, const PhaseAssembly& a, const json& v, const std::string& path) {
  const std::string name = r.string(v, path);
  for (std::size_t i = 0; i < a.phases.size(); ++i)
    if (a.phases[i].name == name) return int(i);
  r.fail(path, "undefined phase '" + name + "'");
}

SolverConfig read_solver(const Reader& r, const json& s) {
  r.allow_keys(s, "/solver", {"scheme", "tol", "maxit", "report_interval", "line_search", "restart_interval"});
  SolverConfig c;
  if (s.contains("scheme")) {
    try {
      c.scheme = parse_scheme(r.string(s["scheme"], "/solver/scheme"));
    } catch (const std::invalid_argument& e) {
      r.fail("/solver/scheme", e.what());
    }
  }
  if (s.contains("tol")) c.tol = r.number(s["tol"], "/solver/tol");
  if (s.contains("maxit")) c.maxit = r.integer(s["maxit"], "/solver/maxit");
  if (s.contains("report_interval")) c.report_interval = r.integer(s["report_interval"], "/solver/report_interval");
  if (s.contains("restart_interval"))
    c.restart_interval = r.integer(s["restart_interval"], "/solver/restart_interval");
  if (s.contains("line_search")) {
    const std::string ls = r.string(s["line_search"], "/solver/line_search");
    if (ls == "fixed")
      c.line_search = LineSearch::Fixed;
    else if (ls == "exact")
      c.line_search = LineSearch::Exact;
    else
      r.fail("/solver/line_search", "expected 'fixed' or 'exact'");
  }
  if (!(c.tol > 0.0)) r.fail("/solver/tol", "tolerance must be positive");
  if (c.maxit < 1) r.fail("/solver/maxit", "maxit must be at least 1");
  return c;
}

OutputOptions read_outputs(const Reader& r, const json& o) {
  r.allow_keys(o, "/outputs", {"fields", "vtk", "log", "study_ns", "metric", "reference"});
  OutputOptions out;
  if (o.contains("fields")) out.fields = r.boolean(o["fields"], "/outputs/fields");
  if (o.contains("vtk")) out.vtk = r.boolean(o["vtk"], "/outputs/vtk");
  if (o.contains("log")) out.log = r.boolean(o["log"], "/outputs/log");
  if (o.contains("study_ns")) {
    const json& ns = o["study_ns"];
    if (!ns.is_array()) r.fail("/outputs/study_ns", "expected an array of integers");
    for (std::size_t i = 0; i < ns.size(); ++i) {
      const int n = r.integer(ns[i], "/outputs/study_ns/" + std::to_string(i));
      if (n < 2) r.fail("/outputs/study_ns/" + std::to_string(i), "resolution must be at least 2");
      if (!out.study_ns.empty() && n <= out.study_ns.back())
        r.fail("/outputs/study_ns/" + std::to_string(i), "resolutions must be strictly increasing");
      out.study_ns.push_back(n);
    }
  }
  if (o.contains("metric")) {
    const std::string m = r.string(o["metric"], "/outputs/metric");
    if (m == "bulk") {
      out.metric = SweepMetric::Bulk;
    } else if (m == "energy") {
      out.metric = SweepMetric::Energy;
    } else if (m.rfind("stress:", 0) == 0 && m.size() == 8 && m[7] >= '0' && m[7] <= '5') {
      out.metric = SweepMetric::StressComponent;
      out.stress_component = m[7] - '0';
    } else {
      r.fail("/outputs/metric", "expected 'bulk', 'energy' or 'stress:K' with K in 0..5");
    }
  }
  if (o.contains("reference")) out.reference = r.number(o["reference"], "/outputs/reference");
  return out;
}

}  // namespace

RunConfig parse_config(const std::string& text, const std::string& source) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    const std::size_t upto = std::min<std::size_t>(e.byte, text.size());
    const int line = 1 + int(std::count(text.begin(), text.begin() + std::ptrdiff_t(upto > 0 ? upto - 1 : 0), '\n'));
    throw ConfigError(source, line, std::string("malformed JSON: ") + e.what());
  }
  const LineIndex index(text);
  const Reader r(source, index);
  r.allow_keys(root, "", {"grid", "phases", "background", "geometry", "discretization", "loading", "solver",
                          "outputs"});

  RunConfig cfg;
  cfg.grid = read_grid(r, r.require(root, "", "grid"));

  const json& phases = r.require(root, "", "phases");
  if (!phases.is_array() || phases.empty()) r.fail("/phases", "expected a non-empty array of phases");
  for (std::size_t i = 0; i < phases.size(); ++i) {
    const std::string p = "/phases/" + std::to_string(i);
    r.allow_keys(phases[i], p, {"name", "young", "poisson"});
    Phase ph{r.string(r.require(phases[i], p, "name"), p + "/name"),
             {r.number(r.require(phases[i], p, "young"), p + "/young"),
              r.number(r.require(phases[i], p, "poisson"), p + "/poisson")}};
    try {
      ph.material.validate();
    } catch (const std::exception& e) {
      r.fail(p, e.what());
    }
    for (const auto& other : cfg.assembly.phases)
      if (other.name == ph.name) r.fail(p + "/name", "duplicate phase name '" + ph.name + "'");
    cfg.assembly.phases.push_back(ph);
  }
  cfg.assembly.background_phase =
      root.contains("background") ? phase_index(r, cfg.assembly, root["background"], "/background") : 0;

  if (root.contains("geometry")) {
    const json& geo = root["geometry"];
    if (!geo.is_array()) r.fail("/geometry", "expected an array of regions");
    for (std::size_t i = 0; i < geo.size(); ++i) {
      const std::string p = "/geometry/" + std::to_string(i);
      if (!geo[i].is_object()) r.fail(p, "expected an object");
      Region region{read_shape(r, geo[i], p), phase_index(r, cfg.assembly, r.require(geo[i], p, "phase"), p + "/phase")};
      cfg.assembly.regions.push_back(std::move(region));
    }
  }
  try {
    cfg.assembly.validate();
  } catch (const std::exception& e) {
    r.fail("/geometry", e.what());
  }

  if (root.contains("discretization")) {
    const std::string d = r.string(root["discretization"], "/discretization");
    if (d == "xfem")
      cfg.discretization.enrich = true;
    else if (d == "p1")
      cfg.discretization.enrich = false;
    else
      r.fail("/discretization", "expected 'xfem' or 'p1'");
  }

  const json& load = r.require(root, "", "loading");
  if (!load.is_array() || load.size() != 6) r.fail("/loading", "expected 6 Mandel strain components");
  for (int k = 0; k < 6; ++k) cfg.loading(k) = r.number(load[k], "/loading/" + std::to_string(k));

  if (root.contains("solver")) cfg.solver = read_solver(r, root["solver"]);
  if (root.contains("outputs")) cfg.outputs = read_outputs(r, root["outputs"]);
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string(), 0, "cannot open file");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str(), path.string());
}

}  // namespace xfft
