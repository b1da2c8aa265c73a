#include "mfh/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

#include "mfh/error.hpp"
#include "mfh/io.hpp"

namespace mfh {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

KeySpec real(std::string name, std::string def, double lo, double hi, bool lo_open, bool hi_open, std::string help) {
  return {std::move(name), KeyType::Real, std::move(def), lo, hi, lo_open, hi_open, {}, std::move(help)};
}
KeySpec integer(std::string name, std::string def, double lo, double hi, std::string help) {
  return {std::move(name), KeyType::Int, std::move(def), lo, hi, false, false, {}, std::move(help)};
}
KeySpec boolean(std::string name, std::string def, std::string help) {
  return {std::move(name), KeyType::Bool, std::move(def), 0, 0, false, false, {"true", "false"}, std::move(help)};
}
KeySpec text(std::string name, std::string def, std::vector<std::string> choices, std::string help) {
  return {std::move(name), KeyType::Text, std::move(def), 0, 0, false, false, std::move(choices), std::move(help)};
}
KeySpec reals(std::string name, std::string def, double lo, double hi, bool lo_open, bool hi_open, std::string help) {
  return {std::move(name), KeyType::RealList, std::move(def), lo, hi, lo_open, hi_open, {}, std::move(help)};
}

void append(std::vector<KeySpec>& to, const std::vector<KeySpec>& from) { to.insert(to.end(), from.begin(), from.end()); }

std::vector<KeySpec> common_keys() {
  return {text("out_dir", "out", {}, "directory receiving every output file"),
          integer("threads", "0", 0, 4096, "worker threads; 0 uses HERMITE_THREADS or all cores"),
          integer("seed", "1212502605", 0, 9007199254740992.0, "master seed")};
}

std::vector<KeySpec> path_keys() {
  return {integer("d", "1", 1, 4, "chaos order"),
          text("hurst", "constant", {"constant", "sinusoidal", "affine"}, "Hurst function family"),
          real("h", "0.75", 0.5, 1.0, true, true, "constant value, sinusoid mean or affine intercept"),
          real("h_amp", "0.15", 0.0, 0.5, false, true, "sinusoid amplitude"),
          real("h_freq", "6.283185307179586", 0.0, 1000.0, false, false, "sinusoid angular frequency"),
          real("h_slope", "0.0", -1.0, 1.0, false, false, "affine slope"),
          real("h_lo", "0.55", 0.5, 1.0, true, true, "affine clamp below"),
          real("h_hi", "0.95", 0.5, 1.0, true, true, "affine clamp above"),
          integer("n_grid", "1024", 2, 65536, "driver cells per unit time"),
          real("x_min", "-8", -1e6, 0.0, false, true, "left end of the uniform driver region"),
          integer("j", "10", 1, 16, "output times k 2^-j on [0, 1]"),
          boolean("desk_caps", "true", "cap n_grid per chaos order")};
}

std::vector<KeySpec> build(const std::string& sub) {
  std::vector<KeySpec> k = common_keys();
  if (sub == "simulate") {
    append(k, path_keys());
    append(k, {integer("replicas", "1", 1, 1000000, "independent paths written"),
               text("stem", "path", {}, "output file stem")});
  } else if (sub == "field") {
    append(k, {integer("d", "1", 1, 4, "chaos order"), real("h_min", "0.6", 0.5, 1.0, true, true, "first h"),
               real("h_max", "0.9", 0.5, 1.0, true, true, "last h"), integer("n_h", "4", 1, 256, "h grid size"),
               integer("n_grid", "1024", 2, 65536, "driver cells per unit time"),
               real("x_min", "-8", -1e6, 0.0, false, true, "left end of the uniform driver region"),
               integer("j", "6", 1, 16, "output times k 2^-j on [0, 1]"),
               integer("replica", "0", 0, 1e12, "replica index"), boolean("desk_caps", "true", "cap n_grid per order"),
               text("stem", "field", {}, "output file stem")});
  } else if (sub == "spectral") {
    append(k, {real("t", "1", 0.0, 16.0, true, false, "first time"), real("u", "0", 0.0, 16.0, false, false, "second time"),
               real("h", "0.75", 0.5, 1.0, true, true, "Hurst index at t"),
               real("h2", "0.75", 0.5, 1.0, true, true, "Hurst index at u"),
               integer("n_uniform", "256", 8, 4096, "uniform cells near the top of the support"),
               text("stem", "spectral", {}, "output file stem")});
  } else if (sub == "estimate") {
    append(k, path_keys());
    append(k, {text("input", "", {}, "path stem to read; empty simulates one from the path keys"),
               text("method", "holder", {"holder", "uniform", "modulus", "lil", "lass"}, "estimator"),
               integer("j_min", "4", 0, 20, "coarsest scale"), integer("j_max", "10", 1, 20, "finest scale"),
               real("t0", "0.5", 0.0, 1.0, false, false, "base point"),
               real("h_norm", "0.75", 0.5, 1.0, true, true, "normalising exponent for modulus and lil"),
               integer("replicas", "200", 2, 1000000, "lass replicas"),
               reals("eps", "0.25,0.0625,0.015625", 0.0, 1.0, true, false, "lass zoom factors"),
               reals("t_grid", "0.25,0.5,0.75,1", 0.0, 1.0, true, false, "lass rescaled times"),
               real("control_shift", "0.1", -0.4, 0.4, false, false, "lass control offset in h"),
               text("stem", "estimate", {}, "output file stem")});
  } else if (sub == "dims") {
    append(k, path_keys());
    append(k, {text("input", "", {}, "path stem to read; empty simulates one from the path keys"),
               integer("eps_j_lo", "4", 0, 20, "largest box 2^-eps_j_lo"),
               integer("eps_j_hi", "9", 1, 20, "smallest box 2^-eps_j_hi"),
               text("stem", "dims", {}, "output file stem")});
  } else if (sub == "smallball") {
    append(k, {integer("d", "2", 2, 3, "chaos order"), real("h", "0.75", 0.5, 1.0, true, true, "Hurst index"),
               integer("samples", "100000", 100, 100000000, "Monte Carlo samples"),
               integer("n_grid", "128", 2, 65536, "driver cells (d = 3)"),
               real("x_min", "-8", -1e6, 0.0, false, true, "left end of the uniform driver region"),
               integer("n_uniform", "256", 8, 4096, "spectral resolution (d = 2)"),
               integer("x_points", "24", 4, 200, "points on the x grid"),
               text("stem", "smallball", {}, "output file stem")});
  } else if (sub == "verify") {
    append(k, {text("experiment", "all", {}, "experiment name or all"),
               boolean("wall_time", "false", "include wall time in the JSON verdict")});
  } else if (sub == "sweep") {
    append(k, {text("experiment", "decomposition-norm", {}, "experiment template"),
               text("param", "M", {}, "config key to vary"),
               reals("values", "1,2,4,8,16", -1e300, 1e300, false, false, "values of the parameter"),
               text("stem", "sweep", {}, "output file stem")});
  } else if (sub == "plot") {
    append(k, {text("input", "", {}, "CSV file to plot"), integer("x_col", "0", 0, 1000, "abscissa column"),
               integer("y_col", "1", 0, 1000, "ordinate column"), boolean("log_x", "false", "log2 abscissa"),
               boolean("log_y", "false", "log2 ordinate"), boolean("fit", "false", "overlay least-squares line"),
               text("title", "", {}, "plot title"), text("stem", "plot", {}, "output file stem")});
  } else {
    throw ValidationError("unknown subcommand '" + sub + "'");
  }
  return k;
}

bool parse_real(const std::string& s, double& out) {
  const char* b = s.data();
  const char* e = b + s.size();
  auto [p, ec] = std::from_chars(b, e, out);
  return ec == std::errc() && p == e && std::isfinite(out);
}

bool in_range(const KeySpec& k, double v) {
  const bool lo_ok = k.lo_open ? v > k.lo : v >= k.lo;
  const bool hi_ok = k.hi_open ? v < k.hi : v <= k.hi;
  return lo_ok && hi_ok;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  return out;
}

void check(const KeySpec& k, const std::string& v) {
  auto bad_type = [&](const char* what) {
    throw ValidationError("key '" + k.name + "': '" + v + "' is not " + what + "; accepted " + k.range_text());
  };
  auto range = [&](double x) {
    if (!in_range(k, x))
      throw RangeError("key '" + k.name + "': " + format_double(x) + " is outside " + k.range_text());
  };
  switch (k.type) {
    case KeyType::Real: {
      double x;
      if (!parse_real(v, x)) bad_type("a number");
      range(x);
      break;
    }
    case KeyType::Int: {
      double x;
      if (!parse_real(v, x) || x != std::floor(x)) bad_type("an integer");
      range(x);
      break;
    }
    case KeyType::Bool:
      if (v != "true" && v != "false") bad_type("true or false");
      break;
    case KeyType::Text:
      if (!k.choices.empty() && std::find(k.choices.begin(), k.choices.end(), v) == k.choices.end())
        bad_type("an accepted value");
      break;
    case KeyType::RealList: {
      const auto items = split_list(v);
      if (items.empty()) bad_type("a comma-separated list of numbers");
      for (const auto& it : items) {
        double x;
        if (!parse_real(it, x)) bad_type("a comma-separated list of numbers");
        range(x);
      }
      break;
    }
  }
}

}  // namespace

std::string KeySpec::range_text() const {
  switch (type) {
    case KeyType::Bool: return "true|false";
    case KeyType::Text: {
      if (choices.empty()) return "text";
      std::string s = "one of ";
      for (std::size_t i = 0; i < choices.size(); ++i) s += (i ? "|" : "") + choices[i];
      return s;
    }
    default: {
      std::string s = std::string(lo_open ? "(" : "[") + format_double(lo) + ", " + format_double(hi) + (hi_open ? ")" : "]");
      return type == KeyType::RealList ? "list in " + s : s;
    }
  }
}

std::vector<std::string> subcommand_names() {
  return {"simulate", "field", "spectral", "estimate", "dims", "smallball", "verify", "sweep", "plot"};
}

const std::vector<KeySpec>& keys_for(const std::string& subcommand) {
  static std::map<std::string, std::vector<KeySpec>> cache = [] {
    std::map<std::string, std::vector<KeySpec>> m;
    for (const auto& s : subcommand_names()) m[s] = build(s);
    return m;
  }();
  const auto it = cache.find(subcommand);
  if (it == cache.end()) throw ValidationError("unknown subcommand '" + subcommand + "'");
  return it->second;
}

std::map<std::string, std::string> parse_key_values(const std::string& text) {
  std::map<std::string, std::string> out;
  std::istringstream in(text);
  std::string line;
  int no = 0;
  while (std::getline(in, line)) {
    ++no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ValidationError("config line " + std::to_string(no) + ": expected 'key = value', got '" + line + "'");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ValidationError("config line " + std::to_string(no) + ": missing key");
    out[key] = trim(line.substr(eq + 1));
  }
  return out;
}

RunConfig parse_config(const std::string& subcommand, const std::map<std::string, std::string>& file_values,
                       const std::map<std::string, std::string>& flag_values) {
  const auto& specs = keys_for(subcommand);
  auto known = [&](const std::string& key) {
    for (const auto& k : specs)
      if (k.name == key) return;
    std::string names;
    for (const auto& k : specs) names += (names.empty() ? "" : ", ") + k.name;
    throw ValidationError("unknown key '" + key + "' for " + subcommand + " (accepted: " + names + ")");
  };
  for (const auto& [k, v] : file_values) known(k);
  for (const auto& [k, v] : flag_values) known(k);

  RunConfig cfg;
  cfg.subcommand = subcommand;
  for (const auto& k : specs) {
    std::string v = k.default_value;
    if (auto it = file_values.find(k.name); it != file_values.end()) v = it->second;
    if (auto it = flag_values.find(k.name); it != flag_values.end()) v = it->second;
    if (!(k.type == KeyType::Text && v.empty())) check(k, v);
    cfg.values[k.name] = v;
  }
  cfg.out_dir = cfg.text("out_dir");
  cfg.threads = static_cast<int>(cfg.integer("threads"));
  cfg.seed = static_cast<std::uint64_t>(cfg.integer("seed"));
  return cfg;
}

RunConfig parse_config_file(const std::string& subcommand, const std::filesystem::path& file,
                            const std::map<std::string, std::string>& flag_values) {
  return parse_config(subcommand, parse_key_values(read_text(file)), flag_values);
}

double RunConfig::real(const std::string& key) const {
  double x = 0.0;
  parse_real(text(key), x);
  return x;
}

long long RunConfig::integer(const std::string& key) const { return static_cast<long long>(real(key)); }

bool RunConfig::flag(const std::string& key) const { return text(key) == "true"; }

const std::string& RunConfig::text(const std::string& key) const {
  const auto it = values.find(key);
  if (it == values.end()) throw ValidationError("key '" + key + "' is not defined for " + subcommand);
  return it->second;
}

std::vector<double> RunConfig::reals(const std::string& key) const {
  std::vector<double> out;
  for (const auto& s : split_list(text(key))) {
    double x = 0.0;
    parse_real(s, x);
    out.push_back(x);
  }
  return out;
}

std::string RunConfig::dump() const {
  std::string s = "# " + subcommand + "\n";
  for (const auto& k : keys_for(subcommand)) s += k.name + " = " + values.at(k.name) + "\n";
  return s;
}

}  // namespace mfh
