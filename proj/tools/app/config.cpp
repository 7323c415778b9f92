#include "config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace trajkit::app {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

struct Piece {
  std::string text;
  std::size_t offset = 0;  // offset of text inside the entry value
};

// Splits on `sep`, trimming each piece and remembering where it started.
std::vector<Piece> split(const std::string& s, char sep, std::size_t base = 0) {
  std::vector<Piece> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    const std::string raw = s.substr(start, pos == std::string::npos ? std::string::npos : pos - start);
    const auto lead = raw.find_first_not_of(" \t");
    out.push_back({trim(raw), base + start + (lead == std::string::npos ? 0 : lead)});
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::map<std::string, std::set<std::string>> keys = {
      {"scenario", {}},  // any key: name plus scenario parameters
      {"params", {}},    // any key
      {"chart", {"builtin", "dim", "coords", "metric", "signature"}},
      {"forces", {"F", "X", "V", "time"}},
      {"initial", {"position", "velocity", "t0"}},
      {"horizon", {"t_min", "t_max"}},
      {"integration", {"rel_tol", "abs_tol", "samples", "speed_ceiling", "min_step_scale"}},
      {"analysis", {"p0", "radius", "T", "shells", "directions", "times"}},
      {"output", {"dir"}},
  };
  return keys;
}

class Builder {
 public:
  Builder(const ConfigFile* file, const Overrides& ov) : file_(file), ov_(ov) {}

  RunConfig build() {
    check_keys();
    read_params();
    RunConfig rc;

    std::optional<std::string> scenario = ov_.scenario;
    if (!scenario && file_) {
      if (const Entry* e = file_->find("scenario", "name")) scenario = e->value;
    }
    const bool explicit_parts = file_ && (file_->has_section("chart") || file_->has_section("forces"));
    if (scenario && explicit_parts) {
      const Entry* at = file_->find("scenario", "name");
      if (!at) at = first_entry("chart");
      if (!at) at = first_entry("forces");
      if (at) file_->fail(*at, "give either a scenario or an explicit [chart]/[forces], not both");
      throw ConfigError(file_->source(), 0, 0,
                        "give either a scenario or an explicit [chart]/[forces], not both");
    }
    if (!scenario && !explicit_parts) {
      throw ConfigError(file_ ? file_->source() : "<command line>", 0, 0,
                        "no scenario and no [chart]/[forces] given");
    }

    if (scenario) {
      scenarios::Params params;
      if (file_)
        if (const auto* sec = file_->section("scenario"))
          for (const auto& [k, e] : *sec)
            if (k != "name") params[k] = e.value;
      for (const auto& [k, v] : ov_.params) params[k] = v;
      rc.problem = scenarios::builtin(*scenario, params);
      rc.label = *scenario;
    } else {
      rc.problem = explicit_problem();
      rc.label = "custom";
    }
    TrajectoryProblem& p = *rc.problem;
    apply_initial(p);
    apply_horizon(p);
    apply_integration(p);
    p.validate();
    rc.analysis = analysis_settings(p);
    if (file_)
      if (const Entry* e = file_->find("output", "dir")) rc.out_dir = e->value;
    if (ov_.out_dir) rc.out_dir = *ov_.out_dir;
    return rc;
  }

 private:
  const Entry* first_entry(const std::string& section) const {
    const auto* sec = file_ ? file_->section(section) : nullptr;
    return sec && !sec->empty() ? &sec->begin()->second : nullptr;
  }

  void check_keys() const {
    if (!file_) return;
    for (const auto& [name, keys] : known_keys()) {
      const auto* sec = file_->section(name);
      if (!sec || keys.empty()) continue;
      for (const auto& [k, e] : *sec) {
        if (!keys.count(k)) {
          std::string list;
          for (const auto& a : keys) list += (list.empty() ? "" : ", ") + a;
          file_->fail(e, "unknown key '" + k + "' in [" + name + "] (accepted: " + list + ")");
        }
      }
    }
  }

  double constant(const Entry& e, const std::string& text, std::size_t offset) const {
    try {
      expr::ParseOptions opt;
      opt.variables = std::vector<std::string>{};
      opt.parameters = numeric_;
      const double v = expr::parse(text, opt).evaluate({});
      if (!std::isfinite(v)) file_->fail(e, "value is not finite", offset);
      return v;
    } catch (const expr::SyntaxError& ex) {
      file_->fail(e, ex.what(), offset + ex.position());
    } catch (const expr::UnknownIdentifierError& ex) {
      file_->fail(e, ex.what(), offset + ex.position());
    } catch (const ConfigError&) {
      throw;
    } catch (const Error& ex) {
      file_->fail(e, ex.what(), offset);
    }
  }

  double number(const Entry& e) const { return constant(e, e.value, 0); }

  Vector vector_of(const Entry& e) const {
    const auto parts = split(e.value, ',');
    Vector v(static_cast<int>(parts.size()));
    for (std::size_t i = 0; i < parts.size(); ++i)
      v[static_cast<int>(i)] = constant(e, parts[i].text, parts[i].offset);
    return v;
  }

  void read_params() {
    if (file_)
      if (const auto* sec = file_->section("params"))
        for (const auto& [k, e] : *sec) numeric_[k] = number(e);
    if (!ov_.scenario && !(file_ && file_->find("scenario", "name"))) {
      for (const auto& [k, v] : ov_.params) {
        expr::ParseOptions opt;
        opt.variables = std::vector<std::string>{};
        try {
          numeric_[k] = expr::parse(v, opt).evaluate({});
        } catch (const Error& ex) {
          throw ConfigError("<command line>", 0, 0,
                            "--param " + k + ": value must be a number: " + ex.what());
        }
      }
    }
  }

  expr::Expression expression(const Entry& e, const Piece& piece,
                              const std::vector<std::string>& vars) const {
    try {
      expr::ParseOptions opt;
      opt.variables = vars;
      opt.parameters = numeric_;
      return expr::parse(piece.text, opt);
    } catch (const expr::SyntaxError& ex) {
      file_->fail(e, ex.what(), piece.offset + ex.position());
    } catch (const expr::UnknownIdentifierError& ex) {
      file_->fail(e, ex.what(), piece.offset + ex.position());
    }
  }

  ExprMatrix matrix(const Entry& e, int n, const std::vector<std::string>& vars,
                    const std::string& what) const {
    const auto rows = split(e.value, ';');
    if (static_cast<int>(rows.size()) != n)
      file_->fail(e, what + " needs " + std::to_string(n) + " rows separated by ';', got " +
                         std::to_string(rows.size()));
    ExprMatrix m;
    for (const auto& row : rows) {
      const auto cells = split(row.text, ',', row.offset);
      if (static_cast<int>(cells.size()) != n)
        file_->fail(e, what + " row needs " + std::to_string(n) + " entries, got " +
                           std::to_string(cells.size()),
                    row.offset);
      ExprVector r;
      for (const auto& c : cells) r.push_back(expression(e, c, vars));
      m.push_back(std::move(r));
    }
    return m;
  }

  TrajectoryProblem explicit_problem() const {
    const Entry* builtin = file_->find("chart", "builtin");
    std::optional<ManifoldChart> chart;
    if (builtin) {
      const std::string& b = builtin->value;
      if (b == "euclidean") {
        int dim = 0;
        if (const Entry* d = file_->find("chart", "dim")) dim = static_cast<int>(number(*d));
        if (const Entry* c = file_->find("chart", "coords")) {
          const auto names = split(c->value, ',');
          if (dim == 0) dim = static_cast<int>(names.size());
        }
        if (dim <= 0) file_->fail(*builtin, "euclidean chart needs dim or coords");
        if (const Entry* c = file_->find("chart", "coords")) {
          std::vector<std::string> names;
          for (const auto& piece : split(c->value, ',')) names.push_back(piece.text);
          if (static_cast<int>(names.size()) != dim) file_->fail(*c, "coords do not match dim");
          ExprMatrix g(dim, ExprVector(dim, expr::Expression::constant(0.0)));
          for (int i = 0; i < dim; ++i) g[i][i] = expr::Expression::constant(1.0);
          chart.emplace(names, std::move(g));
        } else {
          chart = charts::euclidean(dim);
        }
      } else if (b == "polar") {
        chart = charts::polar();
      } else if (b == "hyperbolic") {
        chart = charts::hyperbolic();
      } else {
        file_->fail(*builtin, "unknown builtin chart '" + b + "' (accepted: euclidean, polar, hyperbolic)");
      }
    } else {
      const Entry* c = file_->find("chart", "coords");
      const Entry* m = file_->find("chart", "metric");
      if (!c || !m) {
        const Entry* at = c ? c : m ? m : first_entry("chart");
        const std::string msg = "[chart] needs either builtin or both coords and metric";
        if (at) file_->fail(*at, msg);
        throw ConfigError(file_->source(), 0, 0, msg);
      }
      std::vector<std::string> coords;
      for (const auto& piece : split(c->value, ',')) {
        if (piece.text.empty()) file_->fail(*c, "empty coordinate name", piece.offset);
        coords.push_back(piece.text);
      }
      Signature sig = Signature::Riemannian;
      if (const Entry* s = file_->find("chart", "signature")) {
        if (s->value == "riemannian")
          sig = Signature::Riemannian;
        else if (s->value == "pseudo-riemannian" || s->value == "lorentzian")
          sig = Signature::PseudoRiemannian;
        else
          file_->fail(*s, "signature must be riemannian or pseudo-riemannian");
      }
      ExprMatrix g = matrix(*m, static_cast<int>(coords.size()), coords, "metric");
      try {
        chart.emplace(coords, std::move(g), sig);
      } catch (const Error& ex) {
        file_->fail(*m, ex.what());
      }
    }

    std::string time = "t";
    if (const Entry* t = file_->find("forces", "time")) time = t->value;
    const auto& coords = chart->coordinates();
    std::vector<std::string> vars = coords;
    vars.push_back(time);
    const int n = chart->dim();

    ForceSystem::Fields fields;
    if (const Entry* F = file_->find("forces", "F")) fields.F = matrix(*F, n, vars, "F");
    if (const Entry* X = file_->find("forces", "X")) {
      const auto parts = split(X->value, ',');
      if (static_cast<int>(parts.size()) != n)
        file_->fail(*X, "X needs " + std::to_string(n) + " components, got " +
                            std::to_string(parts.size()));
      ExprVector xs;
      for (const auto& piece : parts) xs.push_back(expression(*X, piece, vars));
      fields.X = std::move(xs);
    }
    if (const Entry* V = file_->find("forces", "V")) {
      if (fields.X) file_->fail(*V, "give X or V, not both");
      fields.V = expression(*V, Piece{V->value, 0}, vars);
    }

    std::optional<ForceSystem> fs;
    try {
      fs.emplace(coords, time, std::move(fields));
    } catch (const Error& ex) {
      const Entry* at = file_->find("forces", "time");
      if (!at) at = first_entry("forces");
      if (at) file_->fail(*at, ex.what());
      throw ConfigError(file_->source(), 0, 0, ex.what());
    }

    const Entry* pos = file_->find("initial", "position");
    const Entry* vel = file_->find("initial", "velocity");
    if (!pos || !vel)
      throw ConfigError(file_->source(), 0, 0, "[initial] needs position and velocity");
    Vector p = vector_of(*pos), v = vector_of(*vel);
    if (p.size() != n) file_->fail(*pos, "position needs " + std::to_string(n) + " components");
    if (v.size() != n) file_->fail(*vel, "velocity needs " + std::to_string(n) + " components");
    TrajectoryProblem problem{*chart, *fs, p, v};
    problem.t0 = 0.0;
    problem.t_min = 0.0;
    problem.t_max = 10.0;
    problem.name = "custom";
    return problem;
  }

  void apply_initial(TrajectoryProblem& p) const {
    if (!file_) return;
    const int n = p.chart.dim();
    if (const Entry* e = file_->find("initial", "position")) {
      p.position = vector_of(*e);
      if (p.position.size() != n) file_->fail(*e, "position needs " + std::to_string(n) + " components");
    }
    if (const Entry* e = file_->find("initial", "velocity")) {
      p.velocity = vector_of(*e);
      if (p.velocity.size() != n) file_->fail(*e, "velocity needs " + std::to_string(n) + " components");
    }
    if (const Entry* e = file_->find("initial", "t0")) {
      const double t0 = number(*e);
      const double shift = t0 - p.t0;
      p.t0 = t0;
      if (!file_->has_section("horizon")) {
        p.t_min += shift;
        p.t_max += shift;
      }
    }
  }

  void apply_horizon(TrajectoryProblem& p) const {
    if (file_) {
      if (const Entry* e = file_->find("horizon", "t_min")) p.t_min = number(*e);
      if (const Entry* e = file_->find("horizon", "t_max")) p.t_max = number(*e);
      const Entry* at = file_->find("horizon", "t_max");
      if (!at) at = file_->find("horizon", "t_min");
      if (at && !(p.t_min <= p.t0 && p.t0 <= p.t_max))
        file_->fail(*at, "horizon must contain t0");
    }
    if (ov_.horizon) {
      p.t_min = ov_.horizon->first;
      p.t_max = ov_.horizon->second;
      if (!(p.t_min <= p.t0 && p.t0 <= p.t_max))
        throw ConfigError("<command line>", 0, 0, "--horizon must contain t0");
    }
  }

  void apply_integration(TrajectoryProblem& p) const {
    if (file_) {
      if (const Entry* e = file_->find("integration", "rel_tol")) p.tol.rel = number(*e);
      if (const Entry* e = file_->find("integration", "abs_tol")) p.tol.abs = number(*e);
      if (const Entry* e = file_->find("integration", "samples")) {
        const double s = number(*e);
        if (!(s >= 2)) file_->fail(*e, "samples must be at least 2");
        p.samples = static_cast<std::size_t>(s);
      }
      if (const Entry* e = file_->find("integration", "speed_ceiling"))
        p.blowup.speed_ceiling = number(*e);
      if (const Entry* e = file_->find("integration", "min_step_scale"))
        p.blowup.min_step_scale = number(*e);
    }
    if (ov_.tolerances) {
      p.tol.rel = ov_.tolerances->first;
      p.tol.abs = ov_.tolerances->second;
    }
  }

  AnalysisSettings analysis_settings(const TrajectoryProblem& p) const {
    AnalysisSettings a;
    if (file_) {
      if (const Entry* e = file_->find("analysis", "p0")) {
        a.p0 = vector_of(*e);
        if (a.p0->size() != p.chart.dim()) file_->fail(*e, "p0 has the wrong dimension");
      }
      if (const Entry* e = file_->find("analysis", "radius")) a.radius = number(*e);
      if (const Entry* e = file_->find("analysis", "T")) a.T = number(*e);
      if (const Entry* e = file_->find("analysis", "shells")) a.grid.shells = static_cast<int>(number(*e));
      if (const Entry* e = file_->find("analysis", "directions"))
        a.grid.directions = static_cast<int>(number(*e));
      if (const Entry* e = file_->find("analysis", "times")) a.grid.times = static_cast<int>(number(*e));
    }
    if (ov_.radius) a.radius = *ov_.radius;
    if (ov_.T) a.T = *ov_.T;
    if (ov_.refine) a.grid = a.grid.refined();
    return a;
  }

  const ConfigFile* file_;
  const Overrides& ov_;
  std::map<std::string, double, std::less<>> numeric_;
};

}  // namespace

ConfigError::ConfigError(std::string source, int line, int column, std::string message)
    : Error([&] {
        std::ostringstream os;
        os << source;
        if (line > 0) os << ":" << line << ":" << column;
        os << ": error: " << message;
        return os.str();
      }()),
      line_(line),
      column_(column),
      message_(std::move(message)) {}

ConfigFile ConfigFile::parse(const std::string& text, const std::string& source) {
  ConfigFile cf;
  cf.source_ = source;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  std::string current;
  bool in_section = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos) continue;
    if (line[first] == '#' || line[first] == ';') continue;
    const int col = static_cast<int>(first) + 1;
    if (line[first] == '[') {
      const auto close = line.find(']', first);
      if (close == std::string::npos)
        throw ConfigError(source, lineno, static_cast<int>(line.size()) + 1, "expected ']'");
      const std::string rest = trim(line.substr(close + 1));
      if (!rest.empty() && rest[0] != '#')
        throw ConfigError(source, lineno, static_cast<int>(close) + 2, "unexpected text after section header");
      current = trim(line.substr(first + 1, close - first - 1));
      if (!known_keys().count(current)) {
        std::string list;
        for (const auto& [k, _] : known_keys()) list += (list.empty() ? "" : ", ") + k;
        throw ConfigError(source, lineno, col + 1,
                          "unknown section [" + current + "] (accepted: " + list + ")");
      }
      if (cf.sections_.count(current))
        throw ConfigError(source, lineno, col, "duplicate section [" + current + "]");
      cf.sections_[current];
      in_section = true;
      continue;
    }
    const auto eq = line.find('=', first);
    if (eq == std::string::npos) throw ConfigError(source, lineno, col, "expected 'key = value'");
    if (!in_section) throw ConfigError(source, lineno, col, "key outside of a section");
    const std::string key = trim(line.substr(first, eq - first));
    if (key.empty()) throw ConfigError(source, lineno, col, "empty key");
    std::string value = line.substr(eq + 1);
    const auto hash = value.find('#');
    if (hash != std::string::npos) value = value.substr(0, hash);
    const auto vfirst = value.find_first_not_of(" \t");
    const int vcol = static_cast<int>(eq) + 2 + static_cast<int>(vfirst == std::string::npos ? 0 : vfirst);
    value = trim(value);
    if (value.empty()) throw ConfigError(source, lineno, vcol, "empty value for '" + key + "'");
    auto& sec = cf.sections_[current];
    if (sec.count(key)) throw ConfigError(source, lineno, col, "duplicate key '" + key + "'");
    sec[key] = Entry{value, lineno, vcol};
  }
  return cf;
}

ConfigFile ConfigFile::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path, 0, 0, "cannot open config file");
  std::ostringstream os;
  os << in.rdbuf();
  return parse(os.str(), path);
}

const std::map<std::string, Entry>* ConfigFile::section(const std::string& name) const {
  auto it = sections_.find(name);
  return it == sections_.end() ? nullptr : &it->second;
}

const Entry* ConfigFile::find(const std::string& section, const std::string& key) const {
  const auto* sec = this->section(section);
  if (!sec) return nullptr;
  auto it = sec->find(key);
  return it == sec->end() ? nullptr : &it->second;
}

void ConfigFile::fail(const Entry& at, const std::string& message, std::size_t offset) const {
  throw ConfigError(source_, at.line, at.column + static_cast<int>(offset), message);
}

RunConfig build_config(const ConfigFile* file, const Overrides& overrides) {
  return Builder(file, overrides).build();
}

std::pair<double, double> parse_pair(const std::string& text) {
  const auto comma = text.find(',');
  if (comma == std::string::npos) throw std::invalid_argument("expected 'a,b'");
  std::size_t used = 0;
  const std::string a = trim(text.substr(0, comma)), b = trim(text.substr(comma + 1));
  const double x = std::stod(a, &used);
  if (used != a.size()) throw std::invalid_argument("bad number '" + a + "'");
  const double y = std::stod(b, &used);
  if (used != b.size()) throw std::invalid_argument("bad number '" + b + "'");
  return {x, y};
}

}  // namespace trajkit::app
