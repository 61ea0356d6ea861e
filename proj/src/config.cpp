#include "feedback/config.hpp"

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include <toml.hpp>

#include "feedback/error.hpp"
#include "feedback/limits.hpp"

namespace feedback {

namespace {

const std::set<std::string> kScenarioKeys{
    "name",        "engine",         "regions",          "priors",           "rates",
    "incident_mode", "w_d",          "w_r",              "correction",       "gating",
    "horizon_days", "reps",          "master_seed",      "decay",            "decay_mode",
    "training_window_days", "warmup_days", "em_max_iters", "em_rel_tolerance", "em_abs_tolerance",
    "em_theta0",   "em_omega0",      "em_warm_start",    "check"};
const std::set<std::string> kCheckKeys{"target", "tolerance", "above", "displaced", "iqr_vs", "iqr_factor"};
const std::set<std::string> kTopKeys{"output_dir", "plots", "defaults", "scenario"};

class Context {
 public:
  explicit Context(std::string where) : where_(std::move(where)) {}
  [[noreturn]] void fail(const std::string& key, const std::string& what) const {
    throw Error(ErrorKind::Config, where_ + ": key '" + key + "': " + what);
  }
  [[noreturn]] void fail(const std::string& what) const { throw Error(ErrorKind::Config, where_ + ": " + what); }
  Context nested(const std::string& what) const { return Context(where_ + ": " + what); }

 private:
  std::string where_;
};

double as_number(const Context& ctx, const std::string& key, const toml::node& node) {
  if (auto v = node.value_exact<double>()) return *v;
  if (auto v = node.value_exact<std::int64_t>()) return static_cast<double>(*v);
  ctx.fail(key, "expected a number");
}

std::int64_t as_int(const Context& ctx, const std::string& key, const toml::node& node) {
  if (auto v = node.value_exact<std::int64_t>()) return *v;
  ctx.fail(key, "expected an integer");
}

bool as_bool(const Context& ctx, const std::string& key, const toml::node& node) {
  if (auto v = node.value_exact<bool>()) return *v;
  ctx.fail(key, "expected true or false");
}

std::string as_string(const Context& ctx, const std::string& key, const toml::node& node) {
  if (auto v = node.value_exact<std::string>()) return *v;
  ctx.fail(key, "expected a string");
}

const toml::array& as_array(const Context& ctx, const std::string& key, const toml::node& node) {
  if (const auto* a = node.as_array()) return *a;
  ctx.fail(key, "expected an array");
}

std::vector<double> as_numbers(const Context& ctx, const std::string& key, const toml::node& node) {
  std::vector<double> out;
  for (const auto& item : as_array(ctx, key, node)) out.push_back(as_number(ctx, key, item));
  return out;
}

std::vector<std::string> as_strings(const Context& ctx, const std::string& key, const toml::node& node) {
  std::vector<std::string> out;
  for (const auto& item : as_array(ctx, key, node)) out.push_back(as_string(ctx, key, item));
  return out;
}

template <class T>
T choose(const Context& ctx, const std::string& key, const std::string& value,
         std::initializer_list<std::pair<const char*, T>> options) {
  std::string allowed;
  for (const auto& [name, v] : options) {
    if (value == name) return v;
    allowed += allowed.empty() ? "" : ", ";
    allowed += name;
  }
  ctx.fail(key, "'" + value + "' is not one of " + allowed);
}

// Scenario fields gathered from defaults and the scenario table before assembly.
struct Draft {
  ScenarioConfig cfg;
  std::optional<std::vector<std::string>> labels;
  std::optional<std::vector<double>> priors;
  std::optional<std::vector<double>> rates;
  CorrectionMode::Kind correction = CorrectionMode::Kind::None;
  std::optional<CheckSpec> check;
};

CheckSpec parse_check(const Context& ctx, const toml::node& node) {
  const auto* table = node.as_table();
  if (!table) ctx.fail("check", "expected a table");
  const Context c = ctx.nested("check");
  CheckSpec spec;
  for (const auto& [k, v] : *table) {
    const std::string key(k.str());
    if (!kCheckKeys.count(key)) c.fail(key, "unknown key");
    if (key == "target") {
      if (v.is_string()) {
        spec.target = choose<TargetSpec>(c, key, as_string(c, key, v),
                                         {{"true_ratio", TrueRatioTarget{}}, {"mixed_limit", MixedLimitTarget{}}});
      } else {
        spec.target = as_number(c, key, v);
      }
    } else if (key == "tolerance") {
      spec.tolerance = as_number(c, key, v);
    } else if (key == "above") {
      spec.above = as_number(c, key, v);
    } else if (key == "displaced") {
      spec.displaced = as_number(c, key, v);
    } else if (key == "iqr_vs") {
      spec.iqr_vs = as_string(c, key, v);
    } else {
      spec.iqr_factor = as_number(c, key, v);
    }
  }
  if (spec.target.has_value() != spec.tolerance.has_value()) c.fail("target and tolerance go together");
  if (spec.iqr_vs.has_value() != spec.iqr_factor.has_value()) c.fail("iqr_vs and iqr_factor go together");
  if (!spec.target && !spec.above && !spec.displaced && !spec.iqr_vs) c.fail("check has no conditions");
  if (spec.tolerance && !(*spec.tolerance >= 0.0)) c.fail("tolerance", "must be >= 0");
  return spec;
}

void apply(Draft& d, const Context& ctx, const std::string& key, const toml::node& v) {
  ScenarioConfig& c = d.cfg;
  if (key == "name") c.name = as_string(ctx, key, v);
  else if (key == "engine") c.engine = choose<Engine>(ctx, key, as_string(ctx, key, v), {{"urn", Engine::Urn}, {"sepp", Engine::Sepp}});
  else if (key == "regions") d.labels = as_strings(ctx, key, v);
  else if (key == "priors") d.priors = as_numbers(ctx, key, v);
  else if (key == "rates") d.rates = as_numbers(ctx, key, v);
  else if (key == "incident_mode") {
    c.incident_mode = choose<IncidentMode>(ctx, key, as_string(ctx, key, v),
                             {{"discovered", IncidentMode::DiscoveredOnly}, {"mixed", IncidentMode::Mixed}});
  } else if (key == "w_d") c.w_d = as_number(ctx, key, v);
  else if (key == "w_r") c.w_r = as_number(ctx, key, v);
  else if (key == "correction") {
    d.correction = choose<CorrectionMode::Kind>(ctx, key, as_string(ctx, key, v),
                          {{"none", CorrectionMode::Kind::None},
                           {"discovered_rejection", CorrectionMode::Kind::DiscoveredRejection},
                           {"mixed_rejection", CorrectionMode::Kind::MixedRejection}});
  } else if (key == "gating") {
    c.gating = choose<Gating>(ctx, key, as_string(ctx, key, v), {{"batch", Gating::Batch}, {"per_incident", Gating::PerIncident}});
  } else if (key == "horizon_days") c.horizon_days = as_int(ctx, key, v);
  else if (key == "reps") c.reps = as_int(ctx, key, v);
  else if (key == "master_seed") {
    const std::int64_t seed = as_int(ctx, key, v);
    if (seed < 0) ctx.fail(key, "must be >= 0");
    c.master_seed = static_cast<std::uint64_t>(seed);
  } else if (key == "decay") c.decay.p_d = as_number(ctx, key, v);
  else if (key == "decay_mode") {
    c.decay.mode = choose<DecayMode>(ctx, key, as_string(ctx, key, v),
                          {{"multiplicative", DecayMode::ExpectedMultiplicative},
                           {"per_ball_binomial", DecayMode::PerBallBinomial}});
  } else if (key == "training_window_days") c.training_window_days = as_int(ctx, key, v);
  else if (key == "warmup_days") c.warmup_days = as_int(ctx, key, v);
  else if (key == "em_max_iters") {
    const std::int64_t n = as_int(ctx, key, v);
    if (n < 1 || n > 1'000'000) ctx.fail(key, "must lie in [1, 1000000]");
    c.em.max_iters = static_cast<int>(n);
  } else if (key == "em_rel_tolerance") c.em.rel_tolerance = as_number(ctx, key, v);
  else if (key == "em_abs_tolerance") c.em.abs_tolerance = as_number(ctx, key, v);
  else if (key == "em_theta0") c.em.theta0 = as_number(ctx, key, v);
  else if (key == "em_omega0") c.em.omega0 = as_number(ctx, key, v);
  else if (key == "em_warm_start") c.em_warm_start = as_bool(ctx, key, v);
  else if (key == "check") d.check = parse_check(ctx, v);
  else ctx.fail(key, "unknown key");
}

ScenarioEntry assemble(Draft d, const Context& ctx) {
  if (d.cfg.name.empty()) ctx.fail("name", "missing");
  const Context c = ctx.nested("scenario '" + d.cfg.name + "'");
  if (!d.labels) c.fail("regions", "missing");
  if (!d.priors) c.fail("priors", "missing");
  if (!d.rates) c.fail("rates", "missing");
  if (d.priors->size() != d.labels->size() || d.rates->size() != d.labels->size()) {
    c.fail("regions, priors and rates must have the same length");
  }
  d.cfg.regions.clear();
  for (std::size_t i = 0; i < d.labels->size(); ++i) {
    d.cfg.regions.push_back({(*d.labels)[i], (*d.priors)[i], (*d.rates)[i]});
  }
  switch (d.correction) {
    case CorrectionMode::Kind::None: d.cfg.correction = CorrectionMode::none(); break;
    case CorrectionMode::Kind::DiscoveredRejection: d.cfg.correction = CorrectionMode::discovered_rejection(); break;
    case CorrectionMode::Kind::MixedRejection:
      d.cfg.correction = CorrectionMode::mixed_rejection(d.cfg.w_d, d.cfg.w_r);
      break;
  }
  d.cfg.validate();
  return {std::move(d.cfg), std::move(d.check)};
}

// Shortest representation that parses back to the same double.
std::string number(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw Error(ErrorKind::Internal, "cannot format number");
  std::string s(buf, end);
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

std::string quoted(const std::string& s) {
  std::string out = "\"";
  for (char ch : s) {
    const auto u = static_cast<unsigned char>(ch);
    if (ch == '"' || ch == '\\') {
      out += '\\';
      out += ch;
    } else if (u < 0x20 || u == 0x7f) {
      char buf[8];
      std::snprintf(buf, sizeof buf, "\\u%04x", u);
      out += buf;
    } else {
      out += ch;
    }
  }
  return out + "\"";
}

template <class T, class Fmt>
std::string list(const std::vector<RegionSpec>& regions, T RegionSpec::*field, Fmt fmt) {
  std::string out = "[";
  for (std::size_t i = 0; i < regions.size(); ++i) out += (i ? ", " : "") + fmt(regions[i].*field);
  return out + "]";
}

}  // namespace

const ScenarioEntry* ConfigFile::find(const std::string& name) const {
  for (const auto& s : scenarios) {
    if (s.config.name == name) return &s;
  }
  return nullptr;
}

ConfigFile parse_config(const std::string& text, const std::string& source) {
  toml::table root;
  try {
    root = toml::parse(text, source);
  } catch (const toml::parse_error& e) {
    std::ostringstream msg;
    msg << source << ":" << e.source().begin.line << ":" << e.source().begin.column << ": " << e.description();
    throw Error(ErrorKind::Config, msg.str());
  }

  const Context top(source);
  ConfigFile out;
  for (const auto& [k, v] : root) {
    const std::string key(k.str());
    if (!kTopKeys.count(key)) top.fail(key, "unknown key");
  }
  if (const auto* n = root.get("output_dir")) out.output_dir = as_string(top, "output_dir", *n);
  if (const auto* n = root.get("plots")) out.plots = as_bool(top, "plots", *n);

  const toml::table* defaults = nullptr;
  if (const auto* n = root.get("defaults")) {
    defaults = n->as_table();
    if (!defaults) top.fail("defaults", "expected a table");
    for (const auto& [k, v] : *defaults) {
      const std::string key(k.str());
      if (key == "name" || key == "check" || !kScenarioKeys.count(key)) top.nested("defaults").fail(key, "not allowed here");
    }
  }

  const auto* scenarios = root.get("scenario");
  if (!scenarios) top.fail("no [[scenario]] entries");
  const auto* array = scenarios->as_array();
  if (!array || !array->is_array_of_tables()) top.fail("scenario", "expected [[scenario]] tables");

  std::set<std::string> names;
  for (std::size_t i = 0; i < array->size(); ++i) {
    const auto& table = *(*array)[i].as_table();
    const Context ctx = top.nested("scenario #" + std::to_string(i + 1));
    Draft draft;
    if (defaults) {
      for (const auto& [k, v] : *defaults) apply(draft, top.nested("defaults"), std::string(k.str()), v);
    }
    for (const auto& [k, v] : table) apply(draft, ctx, std::string(k.str()), v);
    ScenarioEntry entry = assemble(std::move(draft), ctx);
    if (!names.insert(entry.config.name).second) ctx.fail("name", "duplicate scenario '" + entry.config.name + "'");
    out.scenarios.push_back(std::move(entry));
  }
  for (const auto& s : out.scenarios) {
    if (s.check && s.check->iqr_vs && !names.count(*s.check->iqr_vs)) {
      top.nested("scenario '" + s.config.name + "'").fail("iqr_vs", "unknown scenario '" + *s.check->iqr_vs + "'");
    }
  }
  return out;
}

ConfigFile load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open config " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path);
}

std::string serialize_config(const ConfigFile& config) {
  std::ostringstream out;
  if (config.output_dir) out << "output_dir = " << quoted(*config.output_dir) << "\n";
  out << "plots = " << (config.plots ? "true" : "false") << "\n";
  for (const auto& entry : config.scenarios) {
    const ScenarioConfig& c = entry.config;
    out << "\n[[scenario]]\n";
    out << "name = " << quoted(c.name) << "\n";
    out << "engine = " << (c.engine == Engine::Urn ? "\"urn\"" : "\"sepp\"") << "\n";
    out << "regions = " << list(c.regions, &RegionSpec::label, quoted) << "\n";
    out << "priors = " << list(c.regions, &RegionSpec::prior, number) << "\n";
    out << "rates = " << list(c.regions, &RegionSpec::rate, number) << "\n";
    out << "incident_mode = " << (c.incident_mode == IncidentMode::Mixed ? "\"mixed\"" : "\"discovered\"") << "\n";
    out << "w_d = " << number(c.w_d) << "\nw_r = " << number(c.w_r) << "\n";
    switch (c.correction.kind) {
      case CorrectionMode::Kind::None: out << "correction = \"none\"\n"; break;
      case CorrectionMode::Kind::DiscoveredRejection: out << "correction = \"discovered_rejection\"\n"; break;
      case CorrectionMode::Kind::MixedRejection: out << "correction = \"mixed_rejection\"\n"; break;
    }
    out << "gating = " << (c.gating == Gating::Batch ? "\"batch\"" : "\"per_incident\"") << "\n";
    out << "horizon_days = " << c.horizon_days << "\nreps = " << c.reps << "\n";
    out << "master_seed = " << c.master_seed << "\n";
    out << "decay = " << number(c.decay.p_d) << "\n";
    out << "decay_mode = "
        << (c.decay.mode == DecayMode::PerBallBinomial ? "\"per_ball_binomial\"" : "\"multiplicative\"") << "\n";
    out << "training_window_days = " << c.training_window_days << "\nwarmup_days = " << c.warmup_days << "\n";
    out << "em_max_iters = " << c.em.max_iters << "\n";
    out << "em_rel_tolerance = " << number(c.em.rel_tolerance) << "\n";
    out << "em_abs_tolerance = " << number(c.em.abs_tolerance) << "\n";
    out << "em_theta0 = " << number(c.em.theta0) << "\nem_omega0 = " << number(c.em.omega0) << "\n";
    out << "em_warm_start = " << (c.em_warm_start ? "true" : "false") << "\n";
    if (entry.check) {
      const CheckSpec& k = *entry.check;
      out << "[scenario.check]\n";
      if (k.target) {
        out << "target = ";
        if (const auto* v = std::get_if<double>(&*k.target)) out << number(*v);
        else if (std::holds_alternative<TrueRatioTarget>(*k.target)) out << "\"true_ratio\"";
        else out << "\"mixed_limit\"";
        out << "\n";
      }
      if (k.tolerance) out << "tolerance = " << number(*k.tolerance) << "\n";
      if (k.above) out << "above = " << number(*k.above) << "\n";
      if (k.displaced) out << "displaced = " << number(*k.displaced) << "\n";
      if (k.iqr_vs) out << "iqr_vs = " << quoted(*k.iqr_vs) << "\n";
      if (k.iqr_factor) out << "iqr_factor = " << number(*k.iqr_factor) << "\n";
    }
  }
  return out.str();
}

double resolve_target(const TargetSpec& target, const ScenarioConfig& cfg) {
  if (const auto* v = std::get_if<double>(&target)) return *v;
  if (std::holds_alternative<TrueRatioTarget>(target)) return cfg.true_ratio();
  if (cfg.region_count() != 2) {
    throw Error(ErrorKind::Config, "scenario '" + cfg.name + "': mixed_limit target needs two regions");
  }
  const double w_d = cfg.incident_mode == IncidentMode::Mixed ? cfg.w_d : 1.0;
  const double w_r = cfg.incident_mode == IncidentMode::Mixed ? cfg.w_r : 0.0;
  const double a = cfg.regions[0].rate;
  const double b = cfg.regions[1].rate;
  return mixed_limit(MixedParams(w_d, w_r, a, b, a, b));
}

}  // namespace feedback
