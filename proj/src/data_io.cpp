#include "tukey/data_io.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace tukey::io {

namespace {

using nlohmann::json;

std::string meta_path(const std::string& path) { return path + ".meta.json"; }

[[noreturn]] void fail(const std::string& what) { throw std::runtime_error(what); }

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail("cannot write " + path);
  out << content;
  if (!out) fail("write failed for " + path);
}

json parse_json(const std::string& path) {
  try {
    return json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    fail(path + ": " + e.what());
  }
}

void require_schema_version(const json& j, const std::string& path) {
  if (!j.contains("schema_version") || !j["schema_version"].is_number_integer() ||
      j["schema_version"].get<int>() != 1) {
    fail(path + ": schema_version must be the integer 1");
  }
}

void reject_unknown_keys(const json& j, const std::set<std::string>& allowed,
                         const std::string& where) {
  for (const auto& [key, value] : j.items()) {
    if (allowed.find(key) == allowed.end()) fail(where + ": unknown key \"" + key + "\"");
  }
}

double get_number(const json& j, const std::string& key, const std::string& where) {
  if (!j.contains(key)) fail(where + ": missing key \"" + key + "\"");
  if (!j[key].is_number()) fail(where + "." + key + ": expected a number");
  return j[key].get<double>();
}

double get_number_or(const json& j, const std::string& key, double fallback,
                     const std::string& where) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number()) fail(where + "." + key + ": expected a number");
  return j[key].get<double>();
}

MixtureModel parse_observed(const json& j, const std::string& where) {
  reject_unknown_keys(j, {"lambda", "components", "atoms"}, where);
  MixtureModel model;
  model.lambda = get_number(j, "lambda", where);
  if (j.contains("components")) {
    if (!j["components"].is_array()) fail(where + ".components: expected an array");
    for (std::size_t k = 0; k < j["components"].size(); ++k) {
      const json& c = j["components"][k];
      const std::string cw = where + ".components[" + std::to_string(k) + "]";
      reject_unknown_keys(c, {"weight", "mean", "sd"}, cw);
      const double sd = get_number(c, "sd", cw);
      if (!(sd > 0.0)) fail(cw + ".sd: must be positive");
      model.components.push_back(
          {get_number(c, "weight", cw), natural_from_moments(get_number(c, "mean", cw), sd * sd)});
    }
  }
  if (j.contains("atoms")) {
    if (!j["atoms"].is_array()) fail(where + ".atoms: expected an array");
    for (std::size_t m = 0; m < j["atoms"].size(); ++m) {
      const json& a = j["atoms"][m];
      const std::string aw = where + ".atoms[" + std::to_string(m) + "]";
      reject_unknown_keys(a, {"prob", "location"}, aw);
      model.atoms.push_back({get_number(a, "prob", aw), get_number(a, "location", aw)});
    }
  }
  return model;
}

MechanismSpec parse_mechanism_spec(const json& j, const std::string& where, bool* has_b0) {
  if (!j.contains("type") || !j["type"].is_string()) fail(where + ": missing mechanism type");
  const std::string type = j["type"].get<std::string>();
  *has_b0 = j.contains("b0");
  if (type == "linear") {
    reject_unknown_keys(j, {"type", "b0", "b1"}, where);
    return LinearLogit{get_number_or(j, "b0", 0.0, where), get_number(j, "b1", where)};
  }
  if (type == "quadratic") {
    reject_unknown_keys(j, {"type", "b0", "b1", "b2"}, where);
    return QuadraticLogit{get_number_or(j, "b0", 0.0, where), get_number(j, "b1", where),
                          get_number(j, "b2", where)};
  }
  if (type == "asymptote") {
    reject_unknown_keys(j, {"type", "b0", "b1", "kappa"}, where);
    return AsymptoteLogit{get_number_or(j, "b0", 0.0, where), get_number(j, "b1", where),
                          get_number(j, "kappa", where)};
  }
  fail(where + ".type: unknown mechanism type \"" + type + "\"");
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& text, const std::string& context) {
  double v = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  const auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc{} || res.ptr != last) fail(context + ": malformed number \"" + text + "\"");
  if (!std::isfinite(v)) fail(context + ": non-finite value \"" + text + "\"");
  return v;
}

Dataset read_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) fail(path + ": empty file");
  if (line == "value,observed\r") line.pop_back();
  if (line != "value,observed") fail(path + ":1: expected header \"value,observed\"");

  Dataset data;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) fail(path + ":" + std::to_string(line_no) + ": missing comma");
    const std::string value = line.substr(0, comma);
    const std::string observed = line.substr(comma + 1);
    const std::string where = path + ":" + std::to_string(line_no);
    if (observed == "1") {
      if (value.empty()) fail(where + ": observed row without a value");
      data.records.push_back({parse_double(value, where), true});
    } else if (observed == "0") {
      if (!value.empty()) fail(where + ": missing row carries a value");
      data.records.push_back({std::nullopt, false});
    } else {
      fail(where + ": observed must be 0 or 1");
    }
  }

  const std::size_t missing_rows = data.n_missing();
  if (std::filesystem::exists(meta_path(path))) {
    const json meta = parse_json(meta_path(path));
    require_schema_version(meta, meta_path(path));
    reject_unknown_keys(meta, {"schema_version", "n_missing"}, meta_path(path));
    if (!meta.contains("n_missing")) fail(meta_path(path) + ": missing key \"n_missing\"");
    if (meta["n_missing"].is_null()) {
      if (missing_rows > 0) {
        fail(meta_path(path) + ": n_missing is null but the file contains missing rows");
      }
      data.n_missing_known = false;
    } else {
      if (!meta["n_missing"].is_number_integer()) {
        fail(meta_path(path) + ": n_missing must be an integer or null");
      }
      const auto n = meta["n_missing"].get<long long>();
      if (n < 0) fail(meta_path(path) + ": n_missing must be non-negative");
      if (missing_rows > 0 && static_cast<std::size_t>(n) != missing_rows) {
        fail(meta_path(path) + ": n_missing disagrees with the file's missing rows");
      }
      for (std::size_t i = missing_rows; i < static_cast<std::size_t>(n); ++i) {
        data.records.push_back({std::nullopt, false});
      }
      data.n_missing_known = true;
    }
  } else {
    data.n_missing_known = missing_rows > 0;
  }
  return data;
}

void write_dataset(const Dataset& data, const std::string& path) {
  std::string out = "value,observed\n";
  for (const auto& r : data.records) {
    if (r.observed) {
      out += format_double(*r.value);
      out += ",1\n";
    } else {
      out += ",0\n";
    }
  }
  write_file(path, out);

  json meta;
  meta["schema_version"] = 1;
  if (data.n_missing_known) {
    meta["n_missing"] = data.n_missing();
  } else {
    meta["n_missing"] = nullptr;
  }
  write_file(meta_path(path), meta.dump(2) + "\n");
}

SimConfig read_sim_config(const std::string& path) {
  const json j = parse_json(path);
  require_schema_version(j, path);
  reject_unknown_keys(j, {"schema_version", "process", "n", "seed", "record_missing_values"},
                      path);
  if (!j.contains("process") || !j["process"].is_object()) fail(path + ": missing process block");
  const json& p = j["process"];
  if (!p.contains("type") || !p["type"].is_string()) fail(path + ".process: missing type");

  SimConfig config;
  const std::string type = p["type"].get<std::string>();
  if (type == "tukey") {
    reject_unknown_keys(p, {"type", "observed", "mechanism", "q"}, path + ".process");
    if (!p.contains("observed")) fail(path + ".process: missing observed block");
    if (!p.contains("mechanism")) fail(path + ".process: missing mechanism block");
    TukeyModel model;
    model.obs = parse_observed(p["observed"], path + ".process.observed");
    bool has_b0 = false;
    const MechanismSpec spec =
        parse_mechanism_spec(p["mechanism"], path + ".process.mechanism", &has_b0);
    try {
      model.mech = canonicalize(spec);
    } catch (const std::invalid_argument& e) {
      fail(path + ".process.mechanism: " + e.what());
    }
    model.q = get_number(p, "q", path + ".process");
    if (!has_b0) {
      if (!(model.q > 0.0 && model.q < 1.0)) fail(path + ".process.q: must lie in (0, 1)");
      model.mech.alpha0 = solve_intercept(model.obs, model.mech, model.q);
    }
    config.process = model;
  } else if (type == "selection_normal") {
    reject_unknown_keys(p, {"type", "mu", "sigma", "b0", "b1"}, path + ".process");
    SelectionNormalProcess sel;
    sel.mu = get_number(p, "mu", path + ".process");
    sel.sigma = get_number(p, "sigma", path + ".process");
    sel.b0 = get_number(p, "b0", path + ".process");
    sel.b1 = get_number(p, "b1", path + ".process");
    if (!(sel.sigma > 0.0)) fail(path + ".process.sigma: must be positive");
    config.process = sel;
  } else {
    fail(path + ".process.type: unknown process \"" + type + "\"");
  }

  if (!j.contains("n") || !j["n"].is_number_unsigned()) fail(path + ".n: expected a count");
  config.n = j["n"].get<std::size_t>();
  if (!j.contains("seed") || !j["seed"].is_number_unsigned()) {
    fail(path + ".seed: expected a non-negative integer (stochastic runs never self-seed)");
  }
  config.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("record_missing_values")) {
    if (!j["record_missing_values"].is_boolean()) {
      fail(path + ".record_missing_values: expected a boolean");
    }
    config.record_missing_values = j["record_missing_values"].get<bool>();
  }
  return config;
}

PriorConfig read_prior_config(const std::string& path) {
  const json j = parse_json(path);
  require_schema_version(j, path);
  reject_unknown_keys(j, {"schema_version", "mixture", "mechanism"}, path);
  PriorConfig config;

  if (j.contains("mixture")) {
    const json& m = j["mixture"];
    const std::string where = path + ".mixture";
    reject_unknown_keys(m,
                        {"K", "atom_locations", "mean_prior_sd", "sd_prior_upper",
                         "weights_dirichlet", "atoms_dirichlet", "lambda_beta"},
                        where);
    if (m.contains("K")) {
      if (!m["K"].is_number_integer() || m["K"].get<int>() < 1) {
        fail(where + ".K: expected an integer >= 1");
      }
      config.mixture.K = m["K"].get<int>();
    }
    if (m.contains("atom_locations")) {
      if (!m["atom_locations"].is_array()) fail(where + ".atom_locations: expected an array");
      for (const auto& loc : m["atom_locations"]) {
        if (!loc.is_number()) fail(where + ".atom_locations: expected numbers");
        config.mixture.atom_locations.push_back(loc.get<double>());
      }
    }
    config.mixture.mean_prior_sd = get_number_or(m, "mean_prior_sd", 10.0, where);
    config.mixture.sd_prior_upper = get_number_or(m, "sd_prior_upper", 2.0, where);
    config.mixture.weights_dirichlet = get_number_or(m, "weights_dirichlet", 1.0, where);
    config.mixture.atoms_dirichlet = get_number_or(m, "atoms_dirichlet", 1.0, where);
    if (m.contains("lambda_beta")) {
      if (!m["lambda_beta"].is_array() || m["lambda_beta"].size() != 2) {
        fail(where + ".lambda_beta: expected [a, b]");
      }
      config.mixture.lambda_beta_a = m["lambda_beta"][0].get<double>();
      config.mixture.lambda_beta_b = m["lambda_beta"][1].get<double>();
    }
    if (!(config.mixture.sd_prior_upper > 0.0)) fail(where + ".sd_prior_upper: must be positive");
    if (!(config.mixture.mean_prior_sd > 0.0)) fail(where + ".mean_prior_sd: must be positive");
    if (!(config.mixture.weights_dirichlet > 0.0) || !(config.mixture.atoms_dirichlet > 0.0)) {
      fail(where + ": Dirichlet concentrations must be positive");
    }
  }

  if (!j.contains("mechanism") || !j["mechanism"].is_object()) {
    fail(path + ": missing mechanism block");
  }
  const json& mech = j["mechanism"];
  const std::string where = path + ".mechanism";
  if (!mech.contains("type") || !mech["type"].is_string()) fail(where + ": missing type");
  const std::string type = mech["type"].get<std::string>();
  if (type == "quadratic") {
    reject_unknown_keys(mech, {"type", "b1_prior", "b2_prior"}, where);
    QuadraticSlopePrior q;
    if (mech.contains("b1_prior")) {
      reject_unknown_keys(mech["b1_prior"], {"mean", "sd"}, where + ".b1_prior");
      q.b1_mean = get_number_or(mech["b1_prior"], "mean", q.b1_mean, where + ".b1_prior");
      q.b1_sd = get_number_or(mech["b1_prior"], "sd", q.b1_sd, where + ".b1_prior");
      if (!(q.b1_sd > 0.0)) fail(where + ".b1_prior.sd: must be positive");
    }
    if (mech.contains("b2_prior")) {
      reject_unknown_keys(mech["b2_prior"], {"scale", "beta"}, where + ".b2_prior");
      q.b2_scale = get_number_or(mech["b2_prior"], "scale", q.b2_scale, where + ".b2_prior");
      if (!(q.b2_scale > 0.0)) fail(where + ".b2_prior.scale: must be positive");
      if (mech["b2_prior"].contains("beta")) {
        const json& b = mech["b2_prior"]["beta"];
        if (!b.is_array() || b.size() != 2) fail(where + ".b2_prior.beta: expected [a, b]");
        q.b2_beta_a = b[0].get<double>();
        q.b2_beta_b = b[1].get<double>();
      }
    }
    config.mechanism = q;
  } else if (type == "asymptote") {
    reject_unknown_keys(mech, {"type", "b1_beta", "kappa_beta"}, where);
    AsymptoteSlopePrior a;
    if (mech.contains("b1_beta")) {
      const json& b = mech["b1_beta"];
      if (!b.is_array() || b.size() != 2) fail(where + ".b1_beta: expected [a, b]");
      a.b1_beta_a = b[0].get<double>();
      a.b1_beta_b = b[1].get<double>();
    }
    if (mech.contains("kappa_beta")) {
      const json& b = mech["kappa_beta"];
      if (!b.is_array() || b.size() != 2) fail(where + ".kappa_beta: expected [a, b]");
      a.kappa_beta_a = b[0].get<double>();
      a.kappa_beta_b = b[1].get<double>();
    }
    config.mechanism = a;
  } else if (type == "point") {
    reject_unknown_keys(mech, {"type", "b1", "b2"}, where);
    PointSlopePrior p;
    p.b1 = get_number_or(mech, "b1", 0.0, where);
    p.b2 = get_number_or(mech, "b2", 0.0, where);
    if (p.b2 < 0.0) fail(where + ".b2: must be non-negative");
    config.mechanism = p;
  } else if (type == "known") {
    reject_unknown_keys(mech, {"type", "mechanism"}, where);
    if (!mech.contains("mechanism")) fail(where + ": missing inner mechanism");
    bool has_b0 = false;
    const MechanismSpec spec =
        parse_mechanism_spec(mech["mechanism"], where + ".mechanism", &has_b0);
    if (!has_b0) fail(where + ".mechanism: a known mechanism needs an explicit b0");
    try {
      config.mechanism = KnownMechanism{canonicalize(spec)};
    } catch (const std::invalid_argument& e) {
      fail(where + ".mechanism: " + e.what());
    }
  } else {
    fail(where + ".type: unknown mechanism prior \"" + type + "\"");
  }
  return config;
}

McmcConfig read_mcmc_config(const std::string& path) {
  const json j = parse_json(path);
  require_schema_version(j, path);
  reject_unknown_keys(j, {"schema_version", "chains", "iterations", "burnin", "thin", "seed"},
                      path);
  McmcConfig config;
  if (j.contains("chains")) config.chains = j["chains"].get<int>();
  if (j.contains("iterations")) config.iterations = j["iterations"].get<int>();
  if (j.contains("burnin")) config.burnin = j["burnin"].get<int>();
  if (j.contains("thin")) config.thin = j["thin"].get<int>();
  if (j.contains("seed")) config.seed = j["seed"].get<std::uint64_t>();
  if (config.chains < 1 || config.iterations < 1 || config.thin < 1 || config.burnin < 0 ||
      config.burnin >= config.iterations) {
    fail(path + ": need chains >= 1, iterations >= 1, thin >= 1, 0 <= burnin < iterations");
  }
  return config;
}

TruthRecord read_truth(const std::string& path) {
  const json j = parse_json(path);
  require_schema_version(j, path);
  reject_unknown_keys(
      j, {"schema_version", "params", "complete_mean", "complete_sd", "q", "masked_values"},
      path);
  TruthRecord truth;
  truth.complete_mean = get_number(j, "complete_mean", path);
  truth.complete_sd = get_number(j, "complete_sd", path);
  truth.q = get_number(j, "q", path);
  if (j.contains("params")) {
    for (const auto& [key, value] : j["params"].items()) {
      truth.params.emplace_back(key, value.get<double>());
    }
  }
  if (j.contains("masked_values") && !j["masked_values"].is_null()) {
    truth.masked_values.emplace();
    for (const auto& v : j["masked_values"]) truth.masked_values->push_back(v.get<double>());
  }
  return truth;
}

void write_truth(const TruthRecord& truth, const std::string& path) {
  json j;
  j["schema_version"] = 1;
  json params = json::object();
  for (const auto& [name, value] : truth.params) params[name] = value;
  j["params"] = params;
  j["complete_mean"] = truth.complete_mean;
  j["complete_sd"] = truth.complete_sd;
  j["q"] = truth.q;
  if (truth.masked_values.has_value()) {
    j["masked_values"] = *truth.masked_values;
  } else {
    j["masked_values"] = nullptr;
  }
  write_file(path, j.dump(2) + "\n");
}

PosteriorDraws read_draws(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) fail(path + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();

  std::vector<std::string> names;
  std::stringstream header(line);
  std::string field;
  while (std::getline(header, field, ',')) names.push_back(field);
  if (names.size() < 2 || names[0] != "chain" || names[1] != "iteration") {
    fail(path + ":1: header must start with \"chain,iteration\"");
  }

  PosteriorDraws draws;
  for (std::size_t i = 2; i < names.size(); ++i) draws.columns[names[i]] = {};
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::stringstream row(line);
    std::vector<std::string> fields;
    while (std::getline(row, field, ',')) fields.push_back(field);
    if (fields.size() != names.size()) {
      fail(path + ":" + std::to_string(line_no) + ": expected " + std::to_string(names.size()) +
           " fields");
    }
    const std::string where = path + ":" + std::to_string(line_no);
    draws.chain.push_back(static_cast<int>(parse_double(fields[0], where)));
    draws.iteration.push_back(static_cast<int>(parse_double(fields[1], where)));
    for (std::size_t i = 2; i < names.size(); ++i) {
      draws.columns[names[i]].push_back(parse_double(fields[i], where));
    }
  }
  return draws;
}

void write_draws(const PosteriorDraws& draws, const std::string& path) {
  std::string out = "chain,iteration";
  for (const auto& [name, values] : draws.columns) {  // std::map: sorted names
    out += ",";
    out += name;
  }
  out += "\n";
  for (std::size_t row = 0; row < draws.size(); ++row) {
    out += std::to_string(draws.chain[row]);
    out += ",";
    out += std::to_string(draws.iteration[row]);
    for (const auto& [name, values] : draws.columns) {
      out += ",";
      out += format_double(values[row]);
    }
    out += "\n";
  }
  write_file(path, out);
}

void write_summary(const std::vector<SummaryRow>& estimands,
                   const std::vector<SummaryRow>& parameters, const std::string& path) {
  json j;
  j["schema_version"] = 1;
  auto block = [](const std::vector<SummaryRow>& rows) {
    json out = json::object();
    for (const auto& row : rows) {
      out[row.name] = {{"median", row.median},
                       {"ci95", {row.lo95, row.hi95}},
                       {"rhat", row.rhat}};
    }
    return out;
  };
  j["estimands"] = block(estimands);
  j["parameters"] = block(parameters);
  write_file(path, j.dump(2) + "\n");
}

}  // namespace tukey::io
