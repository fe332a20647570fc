#include "madseq/io.hpp"

#include <charconv>
#include <chrono>
#include <ctime>
#include <fstream>
#include <set>
#include <sstream>

#include "madseq/error.hpp"

namespace madseq {

namespace {

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(line);
  while (std::getline(is, cur, ',')) out.push_back(trim(cur));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

template <class T>
T get(const Json& j, const char* key) {
  if (!j.contains(key)) throw ConfigError(std::string("missing key '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const Json::exception&) {
    throw ConfigError(std::string("key '") + key + "' has the wrong type");
  }
}

const char* kind_name(CoordKind k) { return k == CoordKind::Count ? "count" : "binary"; }

CoordKind parse_kind(const std::string& s) {
  if (s == "count") return CoordKind::Count;
  if (s == "binary") return CoordKind::Binary;
  throw ConfigError("unknown column kind '" + s + "'");
}

}  // namespace

void DatasetSchema::validate() const {
  if (columns.empty()) throw ConfigError("schema has no columns");
  std::set<std::string> names;
  bool response = false;
  for (const auto& c : columns) {
    if (c.name.empty()) throw ConfigError("schema column names must be nonempty");
    if (!names.insert(c.name).second) throw ConfigError("duplicate schema column '" + c.name + "'");
    if (c.kind == CoordKind::Count && c.ymax < 0) throw ConfigError("column '" + c.name + "' needs ymax >= 0");
    response = response || c.role == ColumnRole::Response;
  }
  if (!response) throw ConfigError("schema needs at least one response column");
}

SupportGrid DatasetSchema::grid() const {
  validate();
  std::vector<Coord> coords;
  for (const auto& c : columns) coords.push_back(c.kind == CoordKind::Binary ? Coord::binary() : Coord::count(c.ymax));
  return make_grid(coords);
}

std::vector<std::size_t> DatasetSchema::responses() const {
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < columns.size(); ++j)
    if (columns[j].role == ColumnRole::Response) out.push_back(j);
  return out;
}

DatasetSchema schema_from_json(const Json& j) {
  DatasetSchema s;
  const Json& cols = j.contains("columns") ? j.at("columns") : j;
  if (!cols.is_array()) throw ConfigError("schema columns must be an array");
  for (const auto& c : cols) {
    ColumnSpec spec;
    spec.name = get<std::string>(c, "name");
    spec.kind = parse_kind(c.value("kind", std::string("count")));
    spec.ymax = spec.kind == CoordKind::Binary ? 1 : c.value("ymax", std::int64_t{100});
    const std::string role = c.value("role", std::string("response"));
    if (role != "response" && role != "covariate") throw ConfigError("unknown column role '" + role + "'");
    spec.role = role == "response" ? ColumnRole::Response : ColumnRole::Covariate;
    s.columns.push_back(std::move(spec));
  }
  s.validate();
  return s;
}

Json schema_to_json(const DatasetSchema& s) {
  Json cols = Json::array();
  for (const auto& c : s.columns) {
    Json jc{{"name", c.name}, {"kind", kind_name(c.kind)}, {"role", c.role == ColumnRole::Response ? "response" : "covariate"}};
    if (c.kind == CoordKind::Count) jc["ymax"] = c.ymax;
    cols.push_back(std::move(jc));
  }
  return Json{{"columns", cols}};
}

DatasetSchema scenario_schema(const ScenarioSpec& spec) {
  DatasetSchema s;
  const std::int64_t ymax = effective_ymax(spec);
  auto binaries = [&] {
    for (int j = 1; j <= 10; ++j) s.columns.push_back({"x" + std::to_string(j), CoordKind::Binary, 1, ColumnRole::Covariate});
  };
  switch (spec.kind) {
    case ScenarioKind::Illustrative: s.columns.push_back({"y", CoordKind::Count, ymax, ColumnRole::Response}); break;
    case ScenarioKind::Regression:
      s.columns.push_back({"y", CoordKind::Count, ymax, ColumnRole::Response});
      binaries();
      break;
    case ScenarioKind::Classification:
      s.columns.push_back({"y", CoordKind::Binary, 1, ColumnRole::Response});
      binaries();
      break;
    case ScenarioKind::CopulaOrder:
      s.columns.push_back({"x1", CoordKind::Count, spec.count_max, ColumnRole::Covariate});
      s.columns.push_back({"x2", CoordKind::Count, spec.count_max, ColumnRole::Covariate});
      s.columns.push_back({"y", CoordKind::Binary, 1, ColumnRole::Response});
      break;
  }
  return s;
}

Dataset parse_dataset(std::istream& in, const DatasetSchema& schema) {
  schema.validate();
  std::string line;
  if (!std::getline(in, line)) throw DataError("dataset is empty; a header row is required");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  const auto header = split_csv(line);
  std::vector<std::size_t> target(header.size());
  std::vector<bool> seen(schema.columns.size(), false);
  for (std::size_t h = 0; h < header.size(); ++h) {
    std::size_t j = 0;
    while (j < schema.columns.size() && schema.columns[j].name != header[h]) ++j;
    if (j == schema.columns.size()) throw DataError("unknown column \"" + header[h] + "\"");
    if (seen[j]) throw DataError("column \"" + header[h] + "\" appears twice");
    seen[j] = true;
    target[h] = j;
  }
  for (std::size_t j = 0; j < seen.size(); ++j)
    if (!seen[j]) throw DataError("missing column \"" + schema.columns[j].name + "\"");

  Dataset out;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    ++row;
    const auto fields = split_csv(line);
    if (fields.size() != header.size())
      throw DataError("row " + std::to_string(row) + ": expected " + std::to_string(header.size()) + " fields, found " +
                      std::to_string(fields.size()));
    Point p(schema.columns.size());
    for (std::size_t h = 0; h < fields.size(); ++h) {
      const auto& col = schema.columns[target[h]];
      const std::string where = "row " + std::to_string(row) + ", column \"" + col.name + "\"";
      const std::string& f = fields[h];
      if (f.empty()) throw DataError("missing value at " + where);
      std::int64_t v = 0;
      const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
      if (ec != std::errc() || ptr != f.data() + f.size())
        throw DataError("type error at " + where + ": '" + f + "' is not an integer");
      if (col.kind == CoordKind::Binary && v != 0 && v != 1)
        throw DataError("type error at " + where + ": binary value must be 0 or 1, found " + f);
      if (col.kind == CoordKind::Count && (v < 0 || v > col.ymax))
        throw DataError("range error at " + where + ": " + f + " is outside [0, " + std::to_string(col.ymax) + "]");
      p[target[h]] = v;
    }
    out.push_back(std::move(p));
  }
  return out;
}

Dataset parse_dataset_file(const std::string& path, const DatasetSchema& schema) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open dataset '" + path + "'");
  return parse_dataset(in, schema);
}

void write_dataset_csv(std::ostream& out, const DatasetSchema& schema, const Dataset& data) {
  for (std::size_t j = 0; j < schema.columns.size(); ++j) out << (j ? "," : "") << schema.columns[j].name;
  out << '\n';
  for (const auto& p : data) {
    for (std::size_t j = 0; j < p.size(); ++j) out << (j ? "," : "") << p[j];
    out << '\n';
  }
}

Json grid_to_json(const SupportGrid& g) {
  Json a = Json::array();
  for (const auto& c : g.coords()) {
    Json jc{{"kind", kind_name(c.kind)}};
    if (c.kind == CoordKind::Count) jc["max"] = c.max;
    a.push_back(std::move(jc));
  }
  return a;
}

SupportGrid grid_from_json(const Json& j) {
  if (!j.is_array()) throw ConfigError("grid must be an array of coordinates");
  std::vector<Coord> coords;
  for (const auto& c : j) {
    const CoordKind k = parse_kind(get<std::string>(c, "kind"));
    coords.push_back(k == CoordKind::Binary ? Coord::binary() : Coord::count(get<std::int64_t>(c, "max")));
  }
  return make_grid(coords);
}

Json kernel_to_json(const CoordKernel& k) {
  return std::visit(
      [](const auto& v) -> Json {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, UniformWindow>) return {{"type", "uniform_window"}, {"m", v.m}};
        if constexpr (std::is_same_v<T, RoundedGaussian>) return {{"type", "rounded_gaussian"}, {"sigma", v.sigma}};
        if constexpr (std::is_same_v<T, BinaryFlip>) return {{"type", "binary_flip"}, {"delta", v.delta}};
        if constexpr (std::is_same_v<T, PointMass>) return {{"type", "point_mass"}};
      },
      k);
}

CoordKernel kernel_from_json(const Json& j) {
  const auto type = get<std::string>(j, "type");
  if (type == "uniform_window") return UniformWindow{get<std::int64_t>(j, "m")};
  if (type == "rounded_gaussian") return RoundedGaussian{get<double>(j, "sigma")};
  if (type == "binary_flip") return BinaryFlip{j.value("delta", 0.25)};
  if (type == "point_mass") return PointMass{};
  throw ConfigError("unknown kernel type '" + type + "'");
}

Json schedule_to_json(const WeightSchedule& s) {
  switch (s.variant()) {
    case WeightSchedule::Variant::PowerLaw: return {{"variant", "power_law"}, {"alpha", s.alpha()}, {"lambda", s.lambda()}};
    case WeightSchedule::Variant::Dpm: return {{"variant", "dpm"}};
    case WeightSchedule::Variant::Adaptive:
      return {{"variant", "adaptive"}, {"alpha", s.alpha()}, {"lambda", s.lambda()}, {"n_star", s.n_star()}};
  }
  return {};
}

WeightSchedule schedule_from_json(const Json& j, double default_n_star) {
  const auto v = j.value("variant", std::string("power_law"));
  if (v == "power_law") return WeightSchedule::power_law(j.value("alpha", 1.0), j.value("lambda", 1.0));
  if (v == "dpm") return WeightSchedule::dpm();
  if (v == "adaptive")
    return WeightSchedule::adaptive(j.value("alpha", 1.0), j.value("lambda", 0.75), j.value("n_star", default_n_star));
  throw ConfigError("unknown weight variant '" + v + "'");
}

Json method_to_json(const Method& m) {
  if (const auto* mad = std::get_if<MadMethod>(&m)) {
    Json k = Json::array();
    for (const auto& c : mad->kernel.coords) k.push_back(kernel_to_json(c));
    return {{"method", "mad"}, {"kernel", k}, {"weights", schedule_to_json(mad->schedule)}};
  }
  if (const auto* dp = std::get_if<DpMethod>(&m)) return {{"method", "dp"}, {"alpha", dp->alpha}};
  const auto& c = std::get<CopulaMethod>(m).config;
  return {{"method", "copula"}, {"rho", c.rho}, {"weights", schedule_to_json(c.schedule)}, {"chain_order", c.chain_order}};
}

Method method_from_json(const Json& j) {
  const auto name = j.value("method", std::string("mad"));
  if (name == "mad") {
    MadMethod m;
    if (j.contains("kernel"))
      for (const auto& k : j.at("kernel")) m.kernel.coords.push_back(kernel_from_json(k));
    if (j.contains("weights")) m.schedule = schedule_from_json(j.at("weights"));
    return m;
  }
  if (name == "dp") return DpMethod{j.value("alpha", 1.0)};
  if (name == "copula") {
    CopulaMethod m;
    m.config.rho = j.value("rho", 0.5);
    if (j.contains("weights")) m.config.schedule = schedule_from_json(j.at("weights"));
    m.config.chain_order = j.value("chain_order", std::vector<std::size_t>{});
    return m;
  }
  throw ConfigError("unknown method '" + name + "'");
}

Json fit_to_json(const FitRecord& r) {
  Json j;
  j["format"] = "madseq-fit";
  j["version"] = kVersion;
  j["method"] = method_to_json(r.method);
  j["log_likelihood"] = r.mean_log_likelihood;
  j["log_likelihoods"] = r.log_likelihoods;
  j["permutations"] = r.permutations;
  j["seed"] = r.seed;
  if (r.schema) j["schema"] = schema_to_json(*r.schema);
  if (const auto* mad = std::get_if<MadState>(&r.state)) {
    Json k = Json::array();
    for (const auto& c : mad->kernel.coords) k.push_back(kernel_to_json(c));
    j["grid"] = grid_to_json(mad->pmf.grid());
    j["state"] = {{"kind", "mad"},
                  {"n", mad->n},
                  {"kernel", k},
                  {"weights", schedule_to_json(mad->schedule)},
                  {"probs", std::vector<double>(mad->pmf.probs().begin(), mad->pmf.probs().end())}};
  } else {
    const auto& c = std::get<CopulaState>(r.state);
    j["grid"] = grid_to_json(c.grid());
    j["state"] = {{"kind", "copula"},
                  {"n", c.n()},
                  {"rho", c.config().rho},
                  {"weights", schedule_to_json(c.config().schedule)},
                  {"chain_order", c.config().chain_order},
                  {"factors", c.factors()}};
  }
  return j;
}

FitRecord fit_from_json(const Json& j) {
  if (j.value("format", std::string()) != "madseq-fit") throw ConfigError("not a fit file");
  FitRecord r{method_from_json(get<Json>(j, "method")), MadState{}, 0.0, {}, 1, 1, std::nullopt};
  r.mean_log_likelihood = get<double>(j, "log_likelihood");
  r.log_likelihoods = j.value("log_likelihoods", std::vector<double>{});
  r.permutations = j.value("permutations", std::size_t{1});
  r.seed = j.value("seed", std::uint64_t{1});
  if (j.contains("schema")) r.schema = schema_from_json(j.at("schema"));
  const SupportGrid grid = grid_from_json(get<Json>(j, "grid"));
  const Json& s = get<Json>(j, "state");
  const auto kind = get<std::string>(s, "kind");
  if (kind == "mad") {
    MadState m;
    m.pmf = Pmf(grid, get<std::vector<double>>(s, "probs"));
    m.n = get<std::int64_t>(s, "n");
    for (const auto& k : get<Json>(s, "kernel")) m.kernel.coords.push_back(kernel_from_json(k));
    m.schedule = schedule_from_json(get<Json>(s, "weights"));
    validate_kernel(m.kernel, grid);
    r.state = std::move(m);
  } else if (kind == "copula") {
    CopulaConfig cfg;
    cfg.rho = get<double>(s, "rho");
    cfg.schedule = schedule_from_json(get<Json>(s, "weights"));
    cfg.chain_order = get<std::vector<std::size_t>>(s, "chain_order");
    r.state = CopulaState::from_factors(grid, cfg, get<std::int64_t>(s, "n"),
                                        get<std::vector<std::vector<double>>>(s, "factors"));
  } else {
    throw ConfigError("unknown state kind '" + kind + "'");
  }
  return r;
}

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError("invalid JSON in '" + path + "': " + e.what());
  }
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write '" + path + "'");
  out << text;
  if (!out) throw DataError("failed writing '" + path + "'");
}

std::string config_digest(const Json& config) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : config.dump()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  static const char* hex = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i, h >>= 4) out[i] = hex[h & 0xF];
  return out;
}

Json manifest_to_json(const RunManifest& m) {
  return {{"command", m.command},         {"args", m.args},           {"config", m.config},
          {"config_digest", config_digest(m.config)}, {"seed", m.seed}, {"started_at", m.started_at},
          {"finished_at", m.finished_at}, {"version", kVersion}};
}

std::string utc_timestamp() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_manifest(const std::string& output_path, const RunManifest& m) {
  write_text_file(output_path + ".manifest.json", manifest_to_json(m).dump(2) + "\n");
}

}  // namespace madseq
