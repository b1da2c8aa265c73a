#include "mfh/serialize.hpp"

#include "mfh/error.hpp"

namespace mfh {

using nlohmann::json;

json hurst_to_json(const HurstFunction& h) {
  return {{"kind", to_string(h.kind())}, {"params", h.params()}};
}

HurstFunction hurst_from_json(const json& j) {
  try {
    return make_hurst(hurst_kind_from_string(j.at("kind").get<std::string>()),
                      j.at("params").get<std::vector<double>>());
  } catch (const json::exception& e) {
    throw ValidationError(std::string("bad hurst record: ") + e.what());
  }
}

json disc_to_json(const DiscretizationParams& d) {
  return {{"n_grid", d.n_grid},           {"x_min", d.x_min},
          {"t_max", d.t_max},             {"far_extent", d.far_extent},
          {"far_ratio", d.far_ratio},     {"diag_policy", "exclude-diagonal"},
          {"seed", d.seed},               {"n_paths", d.n_paths},
          {"h_nodes", d.h_nodes},         {"work_budget", d.work_budget},
          {"desk_caps", d.desk_caps}};
}

DiscretizationParams disc_from_json(const json& j) {
  DiscretizationParams d;
  try {
    d.n_grid = j.at("n_grid").get<int>();
    d.x_min = j.at("x_min").get<double>();
    d.t_max = j.at("t_max").get<double>();
    d.far_extent = j.at("far_extent").get<double>();
    d.far_ratio = j.at("far_ratio").get<double>();
    d.seed = j.at("seed").get<std::uint64_t>();
    d.n_paths = j.at("n_paths").get<int>();
    d.h_nodes = j.at("h_nodes").get<int>();
    d.work_budget = j.at("work_budget").get<double>();
    d.desk_caps = j.at("desk_caps").get<bool>();
  } catch (const json::exception& e) {
    throw ValidationError(std::string("bad discretization record: ") + e.what());
  }
  return d;
}

json meta_to_json(const PathMeta& m) {
  return {{"d", m.d},
          {"hurst", hurst_to_json(m.hurst)},
          {"disc", disc_to_json(m.disc)},
          {"seed", m.seed},
          {"replica", m.replica}};
}

PathMeta meta_from_json(const json& j) {
  PathMeta m;
  try {
    m.d = j.at("d").get<int>();
    m.hurst = hurst_from_json(j.at("hurst"));
    m.disc = disc_from_json(j.at("disc"));
    m.seed = j.at("seed").get<std::uint64_t>();
    m.replica = j.value("replica", std::uint64_t{0});
  } catch (const json::exception& e) {
    throw ValidationError(std::string("bad path meta: ") + e.what());
  }
  return m;
}

json report_to_json(const EstimatorReport& r) {
  return {{"slope", r.slope},
          {"intercept", r.intercept},
          {"stderr", r.stderr_},
          {"r_squared", r.r_squared},
          {"fit_range", {r.fit_range.first, r.fit_range.second}},
          {"n_points", r.n_points}};
}

}  // namespace mfh
