#include "perimeter/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <set>
#include <sstream>

#include "perimeter/errors.hpp"

namespace perimeter {

namespace {

struct Value {
  enum Kind { Number, Bool, String, NumberArray, StringArray } kind = Number;
  double number = 0.0;
  bool boolean = false;
  std::string text;
  std::vector<double> numbers;
  std::vector<std::string> strings;
  int line = 0;
};

const char* kind_name(Value::Kind k) {
  switch (k) {
    case Value::Number: return "a number";
    case Value::Bool: return "a boolean";
    case Value::String: return "a string";
    case Value::NumberArray: return "an array of numbers";
    case Value::StringArray: return "an array of strings";
  }
  return "?";
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::string strip_comment(const std::string& line) {
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') quoted = !quoted;
    if (line[i] == '#' && !quoted) return line.substr(0, i);
  }
  return line;
}

bool parse_number(const std::string& s, double& out) {
  if (s.empty()) return false;
  const char* first = s.data();
  if (*first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size() && std::isfinite(out);
}

bool parse_string(const std::string& s, std::string& out) {
  if (s.size() < 2 || s.front() != '"' || s.back() != '"') return false;
  out = s.substr(1, s.size() - 2);
  return out.find('"') == std::string::npos;
}

std::vector<std::string> split_array(const std::string& body) {
  std::vector<std::string> items;
  std::string cur;
  bool quoted = false;
  for (char c : body) {
    if (c == '"') quoted = !quoted;
    if (c == ',' && !quoted) {
      items.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!trim(cur).empty()) items.push_back(trim(cur));
  return items;
}

Value parse_value(const std::string& raw, int line) {
  Value v;
  v.line = line;
  if (raw == "true" || raw == "false") {
    v.kind = Value::Bool;
    v.boolean = raw == "true";
    return v;
  }
  if (!raw.empty() && raw.front() == '"') {
    v.kind = Value::String;
    if (!parse_string(raw, v.text)) throw ConfigError("malformed string " + raw, line);
    return v;
  }
  if (!raw.empty() && raw.front() == '[') {
    if (raw.back() != ']') throw ConfigError("arrays must close on the same line", line);
    const auto items = split_array(raw.substr(1, raw.size() - 2));
    const bool strings = !items.empty() && items.front().front() == '"';
    v.kind = strings ? Value::StringArray : Value::NumberArray;
    for (const auto& item : items) {
      if (strings) {
        std::string s;
        if (!parse_string(item, s)) throw ConfigError("malformed array element " + item, line);
        v.strings.push_back(s);
      } else {
        double x = 0.0;
        if (!parse_number(item, x)) throw ConfigError("malformed array element " + item, line);
        v.numbers.push_back(x);
      }
    }
    return v;
  }
  if (!parse_number(raw, v.number)) throw ConfigError("cannot parse value '" + raw + "'", line);
  v.text = raw;
  return v;
}

std::string fmt_double(double x) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, ptr);
}

std::string quote(const std::string& s) { return "\"" + s + "\""; }

// --- field registry ---------------------------------------------------------

struct Field {
  std::string section;
  std::string key;
  bool required = false;
  std::function<void(Config&, const Value&)> set;
  std::function<std::string(const Config&)> get;
};

void expect(const Value& v, Value::Kind kind, const std::string& key) {
  if (v.kind != kind) throw ConfigError(key + " must be " + kind_name(kind), v.line);
}

template <class Ref>
Field real(std::string sec, std::string key, Ref ref, bool required = false) {
  const std::string full = sec + "." + key;
  return Field{sec, key, required,
               [ref, full](Config& c, const Value& v) {
                 expect(v, Value::Number, full);
                 ref(c) = v.number;
               },
               [ref](const Config& c) { return fmt_double(ref(const_cast<Config&>(c))); }};
}

double integral(const Value& v, const std::string& key, double lo, double hi) {
  expect(v, Value::Number, key);
  if (v.number != std::floor(v.number) || v.number < lo || v.number > hi) {
    throw ConfigError(key + " must be an integer in [" + fmt_double(lo) + ", " + fmt_double(hi) +
                          "]",
                      v.line);
  }
  return v.number;
}

template <class Ref>
Field integer(std::string sec, std::string key, Ref ref) {
  const std::string full = sec + "." + key;
  return Field{sec, key, false,
               [ref, full](Config& c, const Value& v) {
                 ref(c) = static_cast<int>(integral(v, full, -1e9, 1e9));
               },
               [ref](const Config& c) { return std::to_string(ref(const_cast<Config&>(c))); }};
}

template <class Ref>
Field seed(std::string sec, std::string key, Ref ref) {
  const std::string full = sec + "." + key;
  return Field{sec, key, false,
               [ref, full](Config& c, const Value& v) {
                 expect(v, Value::Number, full);
                 std::uint64_t out = 0;
                 const char* end = v.text.data() + v.text.size();
                 const auto [ptr, ec] = std::from_chars(v.text.data(), end, out);
                 if (ec != std::errc() || ptr != end) {
                   throw ConfigError(full + " must be an integer in [0, 18446744073709551615]",
                                     v.line);
                 }
                 ref(c) = out;
               },
               [ref](const Config& c) { return std::to_string(ref(const_cast<Config&>(c))); }};
}

template <class Ref>
Field boolean(std::string sec, std::string key, Ref ref) {
  const std::string full = sec + "." + key;
  return Field{sec, key, false,
               [ref, full](Config& c, const Value& v) {
                 expect(v, Value::Bool, full);
                 ref(c) = v.boolean;
               },
               [ref](const Config& c) {
                 return std::string(ref(const_cast<Config&>(c)) ? "true" : "false");
               }};
}

template <class Ref>
Field text(std::string sec, std::string key, Ref ref) {
  const std::string full = sec + "." + key;
  return Field{sec, key, false,
               [ref, full](Config& c, const Value& v) {
                 expect(v, Value::String, full);
                 ref(c) = v.text;
               },
               [ref](const Config& c) { return quote(ref(const_cast<Config&>(c))); }};
}

template <class Ref>
Field quad(std::string sec, std::string key, Ref ref) {
  const std::string full = sec + "." + key;
  return Field{sec, key, false,
               [ref, full](Config& c, const Value& v) {
                 expect(v, Value::NumberArray, full);
                 if (v.numbers.size() != 4) {
                   throw ConfigError(full + " needs 4 values (11, 12, 21, 22)", v.line);
                 }
                 std::copy(v.numbers.begin(), v.numbers.end(), ref(c).begin());
               },
               [ref](const Config& c) {
                 const auto& a = ref(const_cast<Config&>(c));
                 std::string s = "[";
                 for (std::size_t i = 0; i < a.size(); ++i) s += (i ? ", " : "") + fmt_double(a[i]);
                 return s + "]";
               }};
}

std::string od_name(Od od) {
  static const char* names[] = {"11", "12", "21", "22"};
  return names[od];
}

const std::vector<Field>& registry() {
  static const std::vector<Field> fields = [] {
    std::vector<Field> f;
    // [mfd]
    f.push_back(real("mfd", "inner_a", [](Config& c) -> double& { return c.mfd.inner_a; }, true));
    f.push_back(real("mfd", "inner_b", [](Config& c) -> double& { return c.mfd.inner_b; }, true));
    f.push_back(real("mfd", "inner_c", [](Config& c) -> double& { return c.mfd.inner_c; }, true));
    f.push_back(
        real("mfd", "inner_jam", [](Config& c) -> double& { return c.mfd.inner_jam; }, true));
    f.push_back(real("mfd", "outer_accumulation_scale",
                     [](Config& c) -> double& { return c.mfd.outer_accumulation_scale; }));
    f.push_back(real("mfd", "outer_flow_scale",
                     [](Config& c) -> double& { return c.mfd.outer_flow_scale; }));
    f.push_back(real("mfd", "cuts_free_flow_speed",
                     [](Config& c) -> double& { return c.mfd.cuts_free_flow_speed; }));
    f.push_back(
        real("mfd", "cuts_capacity", [](Config& c) -> double& { return c.mfd.cuts_capacity; }));
    f.push_back(real("mfd", "cuts_backward_wave",
                     [](Config& c) -> double& { return c.mfd.cuts_backward_wave; }));
    f.push_back(real("mfd", "cuts_jam", [](Config& c) -> double& { return c.mfd.cuts_jam; }));
    f.push_back(boolean("mfd", "disrupt_both_regions",
                        [](Config& c) -> bool& { return c.mfd.disrupt_both_regions; }));
    // [demand]
    f.push_back(
        real("demand", "mean_s", [](Config& c) -> double& { return c.demand.base.mean_s; }));
    f.push_back(
        real("demand", "sigma_s", [](Config& c) -> double& { return c.demand.base.sigma_s; }));
    f.push_back(quad("demand", "amplitude",
                     [](Config& c) -> OdFlows& { return c.demand.base.amplitude; }));
    f.push_back(quad("demand", "floor", [](Config& c) -> OdFlows& { return c.demand.base.floor; }));
    f.push_back(integer("demand", "steps", [](Config& c) -> int& { return c.demand.base.steps; }));
    f.push_back(real("demand", "dt", [](Config& c) -> double& { return c.demand.base.dt; }));
    f.push_back(real("demand", "surge_center_s",
                     [](Config& c) -> double& { return c.demand.surge_center_s; }));
    f.push_back(real("demand", "surge_spread_s",
                     [](Config& c) -> double& { return c.demand.surge_spread_s; }));
    f.push_back(Field{"demand", "surge_target", false,
                      [](Config& c, const Value& v) {
                        expect(v, Value::String, "demand.surge_target");
                        static const std::map<std::string, Od> ods{
                            {"11", kOd11}, {"12", kOd12}, {"21", kOd21}, {"22", kOd22}};
                        const auto it = ods.find(v.text);
                        if (it == ods.end()) {
                          throw ConfigError("demand.surge_target must be one of 11, 12, 21, 22",
                                            v.line);
                        }
                        c.demand.surge_target = it->second;
                      },
                      [](const Config& c) { return quote(od_name(c.demand.surge_target)); }});
    f.push_back(
        quad("demand", "initial", [](Config& c) -> OdFlows& { return c.demand.initial.n; }));
    // [plant]
    f.push_back(integer("plant", "substeps", [](Config& c) -> int& { return c.plant.substeps; }));
    f.push_back(real("plant", "u_min", [](Config& c) -> double& { return c.plant.u_min; }));
    f.push_back(real("plant", "u_max", [](Config& c) -> double& { return c.plant.u_max; }));
    f.push_back(
        real("plant", "no_control_u", [](Config& c) -> double& { return c.plant.no_control_u; }));
    // [mpc]
    f.push_back(integer("mpc", "horizon", [](Config& c) -> int& { return c.mpc.horizon; }));
    f.push_back(integer("mpc", "block", [](Config& c) -> int& { return c.mpc.block; }));
    f.push_back(integer("mpc", "iterations", [](Config& c) -> int& { return c.mpc.iterations; }));
    f.push_back(integer("mpc", "restarts", [](Config& c) -> int& { return c.mpc.restarts; }));
    f.push_back(
        real("mpc", "initial_step", [](Config& c) -> double& { return c.mpc.initial_step; }));
    f.push_back(real("mpc", "min_step", [](Config& c) -> double& { return c.mpc.min_step; }));
    f.push_back(real("mpc", "fd_step", [](Config& c) -> double& { return c.mpc.fd_step; }));
    f.push_back(
        integer("mpc", "model_substeps", [](Config& c) -> int& { return c.mpc.model_substeps; }));
    // [ddpg]
    f.push_back(real("ddpg", "gamma", [](Config& c) -> double& { return c.ddpg.gamma; }));
    f.push_back(real("ddpg", "tau", [](Config& c) -> double& { return c.ddpg.tau; }));
    f.push_back(real("ddpg", "actor_lr", [](Config& c) -> double& { return c.ddpg.actor_lr; }));
    f.push_back(real("ddpg", "critic_lr", [](Config& c) -> double& { return c.ddpg.critic_lr; }));
    f.push_back(
        integer("ddpg", "batch_size", [](Config& c) -> int& { return c.ddpg.batch_size; }));
    f.push_back(Field{"ddpg", "buffer_capacity", false,
                      [](Config& c, const Value& v) {
                        c.ddpg.buffer_capacity = static_cast<std::size_t>(
                            integral(v, "ddpg.buffer_capacity", 1, 1e9));
                      },
                      [](const Config& c) { return std::to_string(c.ddpg.buffer_capacity); }});
    f.push_back(
        real("ddpg", "noise_sigma", [](Config& c) -> double& { return c.ddpg.noise_sigma; }));
    f.push_back(
        real("ddpg", "noise_decay", [](Config& c) -> double& { return c.ddpg.noise_decay; }));
    f.push_back(Field{"ddpg", "hidden", false,
                      [](Config& c, const Value& v) {
                        expect(v, Value::NumberArray, "ddpg.hidden");
                        c.ddpg.hidden.clear();
                        for (double x : v.numbers) {
                          if (x != std::floor(x) || x < 1 || x > 4096) {
                            throw ConfigError("ddpg.hidden sizes must be integers in [1, 4096]",
                                              v.line);
                          }
                          c.ddpg.hidden.push_back(static_cast<int>(x));
                        }
                      },
                      [](const Config& c) {
                        std::string s = "[";
                        for (std::size_t i = 0; i < c.ddpg.hidden.size(); ++i) {
                          s += (i ? ", " : "") + std::to_string(c.ddpg.hidden[i]);
                        }
                        return s + "]";
                      }});
    f.push_back(real("ddpg", "final_actor_scale",
                     [](Config& c) -> double& { return c.ddpg.final_actor_scale; }));
    f.push_back(integer("ddpg", "updates_per_step",
                        [](Config& c) -> int& { return c.ddpg.updates_per_step; }));
    f.push_back(boolean("ddpg", "terminal_at_horizon",
                        [](Config& c) -> bool& { return c.ddpg.terminal_at_horizon; }));
    f.push_back(
        real("ddpg", "demand_scale", [](Config& c) -> double& { return c.encoder.demand_scale; }));
    f.push_back(
        real("ddpg", "delta_scale", [](Config& c) -> double& { return c.encoder.delta_scale; }));
    f.push_back(
        real("ddpg", "delta2_scale", [](Config& c) -> double& { return c.encoder.delta2_scale; }));
    // [antifragile]
    f.push_back(real("antifragile", "omega_h",
                     [](Config& c) -> double& { return c.antifragile.omega_h; }));
    f.push_back(real("antifragile", "omega_dh",
                     [](Config& c) -> double& { return c.antifragile.omega_dh; }));
    f.push_back(
        real("antifragile", "guard", [](Config& c) -> double& { return c.antifragile.guard; }));
    // [scenario]
    f.push_back(text("scenario", "name", [](Config& c) -> std::string& { return c.scenario.name; }));
    f.push_back(integer("scenario", "base_episodes",
                        [](Config& c) -> int& { return c.scenario.base_episodes; }));
    f.push_back(integer("scenario", "disrupted_episodes",
                        [](Config& c) -> int& { return c.scenario.disrupted_episodes; }));
    f.push_back(integer("scenario", "proto_test_episodes",
                        [](Config& c) -> int& { return c.scenario.proto_test_episodes; }));
    f.push_back(integer("scenario", "progressive_test_episodes",
                        [](Config& c) -> int& { return c.scenario.progressive_test_episodes; }));
    f.push_back(real("scenario", "proto_surge",
                     [](Config& c) -> double& { return c.scenario.proto_surge; }));
    f.push_back(
        real("scenario", "proto_drop", [](Config& c) -> double& { return c.scenario.proto_drop; }));
    f.push_back(real("scenario", "proto_lambda",
                     [](Config& c) -> double& { return c.scenario.proto_lambda; }));
    f.push_back(real("scenario", "ramp_surge_max",
                     [](Config& c) -> double& { return c.scenario.ramp_surge_max; }));
    f.push_back(real("scenario", "ramp_drop_max",
                     [](Config& c) -> double& { return c.scenario.ramp_drop_max; }));
    f.push_back(real("scenario", "ramp_lambda_start",
                     [](Config& c) -> double& { return c.scenario.ramp_lambda_start; }));
    f.push_back(real("scenario", "ramp_lambda_end",
                     [](Config& c) -> double& { return c.scenario.ramp_lambda_end; }));
    // [study]
    f.push_back(integer("study", "replications",
                        [](Config& c) -> int& { return c.study.replications; }));
    f.push_back(seed("study", "seed", [](Config& c) -> std::uint64_t& { return c.study.seed; }));
    f.push_back(integer("study", "jobs", [](Config& c) -> int& { return c.study.jobs; }));
    f.push_back(Field{"study", "methods", false,
                      [](Config& c, const Value& v) {
                        expect(v, Value::StringArray, "study.methods");
                        c.study.methods = v.strings;
                      },
                      [](const Config& c) {
                        std::string s = "[";
                        for (std::size_t i = 0; i < c.study.methods.size(); ++i) {
                          s += (i ? ", " : "") + quote(c.study.methods[i]);
                        }
                        return s + "]";
                      }});
    return f;
  }();
  return fields;
}

void check(bool ok, const std::string& message) {
  if (!ok) throw ConfigError(message);
}

}  // namespace

RegionMfds Config::base_mfds() const {
  const MfdSpec inner = MfdSpec::cubic(mfd.inner_a, mfd.inner_b, mfd.inner_c, mfd.inner_jam);
  return RegionMfds{inner, inner.rescaled(mfd.outer_accumulation_scale, mfd.outer_flow_scale)};
}

DemandProfile Config::base_demand() const { return base_profile(demand.base); }

double Config::reward_flow_scale() const {
  const RegionMfds m = base_mfds();
  return m.inner.max_flow() + m.outer.max_flow();
}

EpsilonConfig Config::epsilon_config() const {
  const RegionMfds m = base_mfds();
  EpsilonConfig e;
  e.omega_h = antifragile.omega_h;
  e.omega_dh = antifragile.omega_dh;
  e.n_crit = {m.inner.n_crit(), m.outer.n_crit()};
  e.n_cap = {m.inner.n_cap(), m.outer.n_cap()};
  e.guard = antifragile.guard;
  e.flow_scale = reward_flow_scale();
  e.accumulation_scale = encoder.delta_scale;
  return e;
}

EncoderScales Config::encoder_scales() const {
  const RegionMfds m = base_mfds();
  EncoderScales s;
  s.n_cap = {m.inner.n_cap(), m.outer.n_cap()};
  s.demand = encoder.demand_scale;
  s.delta = encoder.delta_scale;
  s.delta2 = encoder.delta2_scale;
  return s;
}

MpcController::Settings Config::mpc_settings() const {
  MpcController::Settings s;
  s.horizon = mpc.horizon;
  s.block = mpc.block;
  s.iterations = mpc.iterations;
  s.restarts = mpc.restarts;
  s.initial_step = mpc.initial_step;
  s.min_step = mpc.min_step;
  s.fd_step = mpc.fd_step;
  s.model_substeps = mpc.model_substeps;
  return s;
}

void Config::validate() const {
  RegionMfds mfds = [&] {
    try {
      return base_mfds();
    } catch (const std::exception& e) {
      throw ConfigError(std::string("[mfd] inner cubic is not a valid MFD: ") + e.what());
    }
  }();
  check(mfd.outer_accumulation_scale > 0 && mfd.outer_flow_scale > 0,
        "[mfd] outer scales must be positive");
  try {
    const MfdSpec cuts = MfdSpec::smoothed_cuts(mfd.cuts_free_flow_speed, mfd.cuts_capacity,
                                                mfd.cuts_backward_wave, mfd.cuts_jam, 0.05);
    const double ratio = cuts.max_flow() / mfds.inner.max_flow();
    check(std::abs(ratio - 1.0) <= 0.10,
          "[mfd] cuts_* parameters: max flow at lambda = 0.05 must be within 10% of the cubic "
          "max flow (ratio " +
              fmt_double(ratio) + ")");
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("[mfd] cuts_* parameters: ") + e.what());
  }

  const auto& d = demand.base;
  check(d.sigma_s > 0, "[demand] sigma_s must be positive");
  check(d.steps > 0, "[demand] steps must be positive");
  check(d.dt > 0, "[demand] dt must be positive");
  for (int od = 0; od < 4; ++od) {
    check(d.amplitude[od] >= 0 && d.floor[od] >= 0, "[demand] amplitude and floor must be >= 0");
    check(demand.initial.n[od] >= 0, "[demand] initial accumulations must be >= 0");
  }
  check(demand.initial.region(0) <= mfds.inner.n_cap() &&
            demand.initial.region(1) <= mfds.outer.n_cap(),
        "[demand] initial accumulations exceed n_cap");
  check(demand.surge_spread_s > 0, "[demand] surge_spread_s must be positive");
  check(demand.surge_center_s >= 0 && demand.surge_center_s <= d.steps * d.dt,
        "[demand] surge_center_s must lie within the horizon");

  check(plant.substeps >= 1, "[plant] substeps must be >= 1");
  check(plant.u_min >= 0 && plant.u_min < plant.u_max && plant.u_max <= 1,
        "[plant] need 0 <= u_min < u_max <= 1");
  check(plant.no_control_u >= 0 && plant.no_control_u <= 1, "[plant] no_control_u must be in [0, 1]");

  check(mpc.horizon >= 1 && mpc.block >= 1 && mpc.iterations >= 1 && mpc.restarts >= 1 &&
            mpc.model_substeps >= 1,
        "[mpc] horizon, block, iterations, restarts and model_substeps must be >= 1");
  check(mpc.initial_step > 0 && mpc.min_step > 0 && mpc.fd_step > 0,
        "[mpc] step sizes must be positive");

  try {
    ddpg.validate();
  } catch (const DomainError& e) {
    throw ConfigError(std::string("[ddpg] ") + e.what());
  }
  check(encoder.demand_scale > 0 && encoder.delta_scale > 0 && encoder.delta2_scale > 0,
        "[ddpg] encoder scales must be positive");

  check(antifragile.omega_h >= 0 && antifragile.omega_dh >= 0,
        "[antifragile] weights must be >= 0");
  check(antifragile.guard > 0, "[antifragile] guard must be positive");

  const auto& s = scenario;
  check(s.base_episodes > 0 && s.disrupted_episodes > 0 && s.proto_test_episodes > 0 &&
            s.progressive_test_episodes > 0,
        "[scenario] episode counts must be positive");
  check(s.proto_surge >= 0 && s.ramp_surge_max >= 0, "[scenario] surge magnitudes must be >= 0");
  check(s.proto_drop >= 0 && s.proto_drop < 1 && s.ramp_drop_max >= 0 && s.ramp_drop_max < 1,
        "[scenario] drop fractions must lie in [0, 1)");
  check(s.proto_lambda > 0 && s.ramp_lambda_start > 0 && s.ramp_lambda_end > 0,
        "[scenario] lambda values must be positive");

  check(study.replications >= 1, "[study] replications must be >= 1");
  check(study.jobs >= 0, "[study] jobs must be >= 0");
  static const std::set<std::string> known{"no-control", "mpc", "rl-baseline", "rl-antifragile"};
  check(!study.methods.empty(), "[study] methods must not be empty");
  for (const auto& m : study.methods) {
    check(known.count(m) == 1, "[study] unknown method '" + m + "'");
  }
}

Config parse_config(std::istream& in) {
  Config cfg;
  std::map<std::string, const Field*> by_name;
  std::set<std::string> sections;
  for (const auto& f : registry()) {
    by_name[f.section + "." + f.key] = &f;
    sections.insert(f.section);
  }

  std::set<std::string> seen;
  std::string section;
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const std::string s = trim(strip_comment(raw));
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']') throw ConfigError("malformed section header", line);
      section = trim(s.substr(1, s.size() - 2));
      if (sections.count(section) == 0) throw ConfigError("unknown section [" + section + "]", line);
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError("expected key = value", line);
    const std::string key = trim(s.substr(0, eq));
    if (section.empty()) throw ConfigError("key '" + key + "' outside any section", line);
    const std::string full = section + "." + key;
    const auto it = by_name.find(full);
    if (it == by_name.end()) throw ConfigError("unknown key " + key + " in [" + section + "]", line);
    if (!seen.insert(full).second) throw ConfigError("duplicate key " + full, line);
    it->second->set(cfg, parse_value(trim(s.substr(eq + 1)), line));
  }

  for (const auto& f : registry()) {
    if (f.required && seen.count(f.section + "." + f.key) == 0) {
      throw ConfigError("missing key " + f.key + " in [" + f.section + "]");
    }
  }
  cfg.validate();
  return cfg;
}

Config load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  return parse_config(in);
}

std::string config_snapshot(const Config& cfg) {
  std::ostringstream out;
  std::string section;
  for (const auto& f : registry()) {
    if (f.section != section) {
      out << (section.empty() ? "" : "\n") << "[" << f.section << "]\n";
      section = f.section;
    }
    out << f.key << " = " << f.get(cfg) << "\n";
  }
  return out.str();
}

}  // namespace perimeter
