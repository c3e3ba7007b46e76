// Acceptance harness: one PASS/FAIL line per criterion.
//   acceptance [--group properties|studies|all] [--out DIR]

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "generators.hpp"
#include "gradcheck.hpp"
#include "perimeter/antifragile.hpp"
#include "perimeter/cli.hpp"
#include "perimeter/controllers.hpp"
#include "perimeter/experiments.hpp"
#include "perimeter/metrics.hpp"
#include "perimeter/plant.hpp"
#include "perimeter/trace_io.hpp"

using namespace perimeter;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void report(int id, bool pass, const std::string& what, const std::string& detail) {
  std::cout << "criterion " << id << ": " << (pass ? "PASS" : "FAIL") << "  " << what << "  ["
            << detail << "]" << std::endl;
  if (!pass) ++failures;
}

std::string num(double x) { return format_number(x); }

std::string pct(double x) {
  std::ostringstream s;
  s.precision(4);
  s << x << "%";
  return s.str();
}

// ---- property group ----

void gradient_oracle() {
  std::mt19937_64 rng(7001);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const auto r = prop::check_random_instance(rng);
    worst = std::max({worst, r.critic_params, r.critic_action, r.actor_params});
  }
  report(7, worst <= 1e-4, "actor/critic gradients vs central differences, 100 instances",
         "max relative error " + num(worst));
}

void conservation() {
  prop::Gen g(8001);
  const RegionMfds mfds = prop::default_mfds();
  const PlantParams one{6.0, 1};
  double worst = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const PlantState s = g.state(mfds.inner.n_cap(), mfds.outer.n_cap());
    const ControlAction a = g.action();
    const OdFlows q = g.demand();
    const StepOutcome out = advance(s, a, q, mfds, one);
    const double inflow = one.dt * (q[0] + q[1] + q[2] + q[3]) - out.rejected_inflow;
    const double expected = s.total() + inflow - out.intraregional_completed + out.adjustment;
    worst = std::max(worst, std::abs(out.next.total() - expected) / std::max(1.0, s.total()));
  }
  report(8, worst <= 1e-9, "single-substep mass balance, 10^4 samples",
         "max relative residual " + num(worst));
}

void mpc_vs_grid() {
  const Config c = prop::default_config();
  MpcConfig cfg{c.base_demand(), c.base_mfds()};
  cfg.horizon = 2;
  cfg.block = 1;
  cfg.plant = c.plant_params();
  std::vector<double> grid;
  for (int i = 0; i < 9; ++i) grid.push_back(kUMin + (kUMax - kUMin) * i / 8.0);
  prop::Gen g(9001);
  double worst = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 50; ++i) {
    const PlantState s = g.state(9000.0, 18000.0);
    const int t = g.integer(0, 117);
    double best = -std::numeric_limits<double>::infinity();
    for (double a : grid)
      for (double b : grid)
        for (double d : grid)
          for (double e : grid) {
            const std::vector<double> u{a, b, d, e};
            best = std::max(best, mpc_objective(s, t, u, cfg));
          }
    MpcDiagnostics diag;
    mpc_solve(s, t, cfg, &diag);
    worst = std::min(worst, diag.best_objective / best);
  }
  report(9, worst >= 0.99, "MPC objective vs 9-point grid optimum, 2-step horizon, 50 states",
         "worst ratio " + num(worst));
}

void sign_table() {
  prop::Gen g(10001);
  EpsilonConfig cfg = prop::default_config().epsilon_config();
  cfg.omega_dh = 0.0;
  const RegionMfds mfds = prop::default_mfds();
  int probes = 0, violations = 0;
  while (probes < 10000) {
    const int r = g.integer(0, 1);
    const MfdSpec& m = mfds.region(r);
    const bool congested = g.coin();
    const double lo = congested ? m.n_crit() : 0.0;
    const double hi = congested ? m.n_cap() : m.n_crit();
    const double a = g.uniform(lo, hi), b = g.uniform(lo, hi);
    if (std::abs(a - b) < cfg.guard) continue;
    ++probes;
    std::array<RegionSample, 2> s{RegionSample{1000.0, 1000.0, 1.0, 1.0, 0.0, true},
                                  RegionSample{1000.0, 1000.0, 1.0, 1.0, 0.0, true}};
    s[r] = RegionSample{b, a, m.flow(b), m.flow(a), 0.0, false};
    const double h = epsilon_reward(cfg, s).total();
    const bool penalised = congested == (b > a);
    if (penalised ? h > 0.0 : h < 0.0) ++violations;
  }
  report(10, violations == 0, "redundancy sign table, 10^4 probes on the default MFDs",
         std::to_string(violations) + " violations");
}

void reduction_values() {
  const MfdSpec inner = prop::default_mfds().inner;
  const double c = inner.n_crit(), cap = inner.n_cap();
  const double err = std::max({std::abs(reduction_factor(c, c, cap) - 1.0),
                               std::abs(reduction_factor(0.0, c, cap)),
                               std::abs(reduction_factor(cap, c, cap)),
                               std::abs(reduction_factor(c / 2.0, c, cap) - 0.5)});
  report(11, err <= 1e-12, "reduction_factor at 0, n_crit/2, n_crit, n_cap",
         "max error " + num(err));
}

void skewness_values() {
  const double a = std::abs(skewness(std::vector<double>{0, 0, 1}) - 1.0 / std::sqrt(2.0));
  const double b = std::abs(skewness(std::vector<double>{-2.5, -1, 0, 1, 2.5}));
  report(12, a <= 1e-12 && b <= 1e-12, "skewness({0,0,1}) and a symmetric sample",
         "errors " + num(a) + ", " + num(b));
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

void determinism(const fs::path& work) {
  Config cfg = prop::default_config();
  cfg.scenario.name = "lambda-progressive";
  cfg.scenario.base_episodes = 3;
  cfg.scenario.disrupted_episodes = 5;
  cfg.scenario.progressive_test_episodes = 2;
  cfg.study.replications = 3;
  cfg.study.methods = {"no-control", "mpc", "rl-baseline", "rl-antifragile"};
  cfg.ddpg.hidden = {16, 16};
  cfg.ddpg.batch_size = 32;
  cfg.mpc.horizon = 6;
  cfg.mpc.iterations = 4;
  cfg.mpc.restarts = 2;
  fs::remove_all(work);
  fs::create_directories(work);
  std::ofstream(work / "study.toml") << config_snapshot(cfg);
  std::vector<std::string> out;
  bool ran = true;
  for (const std::string dir : {"run1", "run2"}) {
    const std::vector<std::string> args{"perimeter", "--log-level", "off", "study",
                                        (work / "study.toml").string(), "--out",
                                        (work / dir).string(), "--jobs", dir == "run1" ? "1" : "0"};
    std::vector<const char*> argv;
    for (const auto& s : args) argv.push_back(s.c_str());
    ran = ran && run_cli(static_cast<int>(argv.size()), argv.data()) == kExitOk;
    out.push_back(slurp(work / dir / "curves.csv"));
  }
  const bool same = ran && !out[0].empty() && out[0] == out[1];
  report(13, same, "two study runs from one config snapshot give identical curves.csv",
         ran ? std::to_string(out[0].size()) + " bytes, " + (same ? "identical" : "different")
             : "study run failed");
}

// ---- study group ----

double mean_over(const StudyResult& r, int first, int last) {
  double s = 0.0;
  for (int e = first; e <= last; ++e) s += r.mean_tts.at(e - 1);
  return s / (last - first + 1);
}

double phase_mean(const StudyResult& r, Phase phase) {
  double s = 0.0;
  int n = 0;
  for (std::size_t k = 0; k < r.plan.size(); ++k) {
    if (r.plan[k].phase != phase) continue;
    s += r.mean_tts[k];
    ++n;
  }
  return s / n;
}

MethodCurve disrupted_curve(const StudyResult& r) {
  MethodCurve c{r.method, {}, {}};
  for (std::size_t k = 0; k < r.plan.size(); ++k) {
    if (r.plan[k].phase != Phase::Disrupted) continue;
    c.magnitude.push_back(r.plan[k].magnitude);
    c.tts.push_back(r.mean_tts[k]);
  }
  return c;
}

struct Study {
  std::string name;
  std::map<std::string, StudyResult> by_method;
  AntifragilityReport skew;
};

Study run_study(const Config& base, const std::string& name, const fs::path& out) {
  Config cfg = base;
  cfg.scenario.name = name;
  const ScenarioConfig sc = make_scenario(cfg, name);
  Study st{name, {}, {}};
  std::vector<StudyResult> all;
  const auto t0 = std::chrono::steady_clock::now();
  for (const auto& m : cfg.study.methods) {
    StudyResult r = replicate(cfg, sc, m, cfg.study.jobs);
    st.by_method.emplace(m, r);
    all.push_back(std::move(r));
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::cout << "  " << name << ": " << cfg.study.methods.size() << " methods x "
            << cfg.study.replications << " replications in " << num(std::round(secs)) << " s"
            << std::endl;
  fs::create_directories(out / name);
  std::ofstream(out / name / "config.snapshot") << config_snapshot(cfg);
  std::ofstream curves(out / name / "curves.csv");
  write_curves_csv(curves, all);
  if (sc.schedule == Schedule::Progressive) {
    std::vector<MethodCurve> c;
    for (const auto& r : all) c.push_back(disrupted_curve(r));
    st.skew = antifragility_report(c, "rl-baseline", cfg.study.methods);
    std::ofstream js(out / name / "report.json");
    write_report_json(js, st.skew);
  }
  return st;
}

double skew_of(const Study& st, const std::string& m) {
  const ReportRow* r = st.skew.find(m);
  return (r && !r->degenerate) ? r->skewness : std::nan("");
}

void studies(const fs::path& out) {
  Config cfg = prop::default_config();
  cfg.study.methods = {"no-control", "mpc", "rl-baseline", "rl-antifragile"};
  std::cout << "running default studies (" << cfg.study.replications << " replications)"
            << std::endl;

  const Study proto = run_study(cfg, "demand-proto", out);
  const auto& af = proto.by_method.at("rl-antifragile");
  const auto& bl = proto.by_method.at("rl-baseline");
  const auto& mpc = proto.by_method.at("mpc");

  const double af_late = mean_over(af, 91, 100), bl_late = mean_over(bl, 91, 100);
  const double gain = 100.0 * (bl_late - af_late) / bl_late;
  report(1, gain >= 1.5 && gain <= 10.0,
         "demand-proto: antifragile TTS below baseline over episodes 91-100 by 1.5-10%",
         "antifragile " + num(af_late) + ", baseline " + num(bl_late) + ", reduction " + pct(gain));

  const double early = mean_over(af, 51, 55), late = mean_over(af, 96, 100);
  const double drop = 100.0 * (early - late) / early;
  report(2, drop >= 2.0, "demand-proto: antifragile TTS over 96-100 at least 2% below 51-55",
         "51-55 " + num(early) + ", 96-100 " + num(late) + ", reduction " + pct(drop));

  const double before = mpc.mean_tts.at(49);
  const double after = phase_mean(mpc, Phase::TestBase);
  report(3, after > before, "demand-proto: MPC base-demand TTS rises after disruption history",
         "before " + num(before) + ", after " + num(after) + ", change " +
             pct(100.0 * (after - before) / before));

  std::vector<Study> progressive;
  for (const std::string name :
       {"demand-progressive", "speeddrop-progressive", "capdrop-progressive", "lambda-progressive"}) {
    progressive.push_back(run_study(cfg, name, out));
  }

  const Study& dp = progressive[0];
  const double s_af = skew_of(dp, "rl-antifragile"), s_nc = skew_of(dp, "no-control"),
               s_mpc = skew_of(dp, "mpc");
  report(4, s_af < s_nc && s_nc < 0.0 && s_af < s_mpc,
         "demand-progressive skewness: antifragile < no-control < 0, antifragile most negative",
         "antifragile " + num(s_af) + ", no-control " + num(s_nc) + ", mpc " + num(s_mpc));

  bool all_negative = true;
  std::string detail;
  for (std::size_t i = 1; i < progressive.size(); ++i) {
    const double s = skew_of(progressive[i], "rl-antifragile");
    all_negative = all_negative && s < 0.0;
    detail += (detail.empty() ? "" : ", ") + progressive[i].name + " " + num(s);
  }
  report(5, all_negative, "antifragile skewness negative in the three MFD progressive studies",
         detail);

  bool dominated = true;
  std::string worst;
  double worst_margin = std::numeric_limits<double>::infinity();
  std::vector<const Study*> studies{&proto};
  for (const auto& s : progressive) studies.push_back(&s);
  for (const Study* st : studies) {
    const double nc = phase_mean(st->by_method.at("no-control"), Phase::Disrupted);
    for (const auto& [m, r] : st->by_method) {
      if (m == "no-control") continue;
      const double margin = 100.0 * (nc - phase_mean(r, Phase::Disrupted)) / nc;
      if (margin < worst_margin) {
        worst_margin = margin;
        worst = st->name + "/" + m;
      }
      dominated = dominated && margin >= 0.0;
    }
  }
  report(6, dominated, "no-control disrupted-phase mean TTS >= every controlled method",
         "smallest margin " + pct(worst_margin) + " (" + worst + ")");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  std::string group = "all";
  std::string out = "acceptance";
  app.add_option("--group", group, "properties, studies or all")
      ->check(CLI::IsMember({"properties", "studies", "all"}));
  app.add_option("--out", out, "Directory for study outputs");
  CLI11_PARSE(app, argc, argv);
  spdlog::set_level(spdlog::level::warn);

  const fs::path dir(out);
  try {
    if (group != "properties") studies(dir);
    if (group != "studies") {
      gradient_oracle();
      conservation();
      mpc_vs_grid();
      sign_table();
      reduction_values();
      skewness_values();
      determinism(dir / "determinism");
    }
  } catch (const std::exception& e) {
    std::cout << "acceptance aborted: " << e.what() << std::endl;
    return 3;
  }
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed")
            << std::endl;
  return failures == 0 ? 0 : 1;
}
