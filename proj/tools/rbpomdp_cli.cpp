#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "rbpomdp/harness/harness.hpp"
#include "rbpomdp/quadrature/quadrature.hpp"

namespace fs = std::filesystem;
using namespace rbpomdp;

namespace {

std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (item.empty()) continue;
    std::size_t used = 0;
    const int v = std::stoi(item, &used);
    if (used != item.size()) throw CLI::ValidationError("bad integer list: " + text);
    out.push_back(v);
  }
  if (out.empty()) throw CLI::ValidationError("empty integer list");
  return out;
}

std::ofstream open_output(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

harness::ExperimentConfig load(const std::string& path) {
  return path.empty() ? harness::ExperimentConfig{} : harness::load_config(path);
}

void write_rule(std::ostream& out, const quad::MultiRule& rule) {
  out << std::setprecision(17);
  for (Eigen::Index i = 0; i < rule.dim(); ++i) out << 'x' << i << ',';
  out << "weight\n";
  for (std::size_t k = 0; k < rule.size(); ++k) {
    for (Eigen::Index i = 0; i < rule.dim(); ++i) {
      out << rule.nodes(i, static_cast<Eigen::Index>(k)) << ',';
    }
    out << rule.weights[k] << '\n';
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Rao-Blackwellized POMDP planning experiments"};
  app.require_subcommand(1);

  std::string config;
  std::string output_dir;
  std::uint64_t seed = 0;
  bool seed_given = false;

  auto* sim = app.add_subcommand("simulate", "Run the configured episodes");
  sim->add_option("--config", config, "Experiment config (JSON)");
  sim->add_option("--seed", seed, "Base seed (overrides the config)")
      ->each([&](const std::string&) { seed_given = true; });
  sim->add_option("--output-dir", output_dir, "Output directory");

  std::string particles = "100,1000,10000";
  int repeats = 3;
  int steps = 30;
  auto* bf = app.add_subcommand("bench-filters", "Per-step belief update timing");
  bf->add_option("--config", config, "Experiment config (JSON)");
  bf->add_option("--particles", particles, "Comma-separated particle counts");
  bf->add_option("--repeats", repeats, "Timed repeats per cell")->check(CLI::PositiveNumber);
  bf->add_option("--steps", steps, "Steps per repeat")->check(CLI::PositiveNumber);
  bf->add_option("--output-dir", output_dir, "Output directory");

  std::string q_levels = "1,2,3,4,5";
  std::string iters = "50,100,500,1000";
  int sir_particles = 1000;
  auto* bp = app.add_subcommand("bench-planning", "Sparse-grid and iteration sweeps");
  bp->add_option("--config", config, "Experiment config (JSON)");
  bp->add_option("--q", q_levels, "Comma-separated sparse-grid levels");
  bp->add_option("--pomcpow-iters", iters, "Comma-separated POMCPOW iteration counts");
  bp->add_option("--sir-particles", sir_particles, "SIRPF particles for POMCPOW")
      ->check(CLI::PositiveNumber);
  bp->add_option("--output-dir", output_dir, "Output directory");

  int consistency_steps = 40;
  auto* cs = app.add_subcommand("consistency", "NEES/NIS chi-square coverage");
  cs->add_option("--config", config, "Experiment config (JSON)");
  cs->add_option("--steps", consistency_steps, "Steps per episode")
      ->check(CLI::PositiveNumber);
  cs->add_option("--output-dir", output_dir, "Output directory");

  std::string family;
  int n_points = 0;
  std::string smolyak;
  std::string growth = "linear";
  std::string table_output;
  auto* qt = app.add_subcommand("quadrature-table", "Print a quadrature rule as CSV");
  auto* fam_opt = qt->add_option("--family", family, "Univariate family (hermite)");
  qt->add_option("--n", n_points, "Number of univariate points")->needs(fam_opt);
  auto* smol_opt = qt->add_option("--smolyak", smolyak, "Smolyak level and dimension q,d");
  qt->add_option("--growth", growth, "Smolyak growth: linear or odd")
      ->check(CLI::IsMember({"linear", "odd"}));
  qt->add_option("--output", table_output, "Output file (default stdout)");
  fam_opt->excludes(smol_opt);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*qt) {
      quad::MultiRule rule;
      if (!smolyak.empty()) {
        const auto qd = parse_int_list(smolyak);
        if (qd.size() != 2) throw CLI::ValidationError("--smolyak expects q,d");
        if (growth == "odd") {
          rule = quad::smolyak_rule(qd[0], qd[1], [](int i) { return 2 * i - 1; });
        } else {
          rule = quad::smolyak_rule(qd[0], qd[1]);
        }
      } else {
        if (family.empty()) throw CLI::ValidationError("need --family or --smolyak");
        const quad::UnivariateRule u =
            quad::univariate_rule(quad::parse_family(family), n_points);
        rule = quad::tensor_rule(std::span<const quad::UnivariateRule>(&u, 1));
      }
      if (table_output.empty()) {
        write_rule(std::cout, rule);
      } else {
        auto out = open_output(table_output);
        write_rule(out, rule);
      }
      return 0;
    }

    harness::ExperimentConfig cfg = load(config);
    if (seed_given) cfg.base_seed = seed;
    if (!output_dir.empty()) cfg.output_dir = output_dir;
    const fs::path dir(cfg.output_dir);
    const std::string hash = harness::config_hash(cfg);

    if (*sim) {
      const auto records = harness::run_episodes(cfg);
      {
        auto out = open_output(dir / "episodes.jsonl");
        harness::write_jsonl(out, records);
      }
      {
        auto out = open_output(dir / "episodes.csv");
        harness::write_episode_csv(out, cfg, records);
      }
      {
        auto out = open_output(dir / "steps.csv");
        harness::write_steps_csv(out, cfg, records);
      }
      const auto s = harness::summarize(records);
      std::cout << "config " << hash << ": " << s.episodes << " episodes, mean reward "
                << s.mean_reward << " +/- " << s.ci95 << ", success " << s.success_rate
                << ", mean ESS/N " << s.mean_ess << ", plan " << s.mean_plan_ms
                << " ms/step\n";
    } else if (*bf) {
      const auto rows = harness::bench_filters(cfg, parse_int_list(particles), repeats, steps);
      auto out = open_output(dir / "filter_timing.csv");
      harness::write_filter_timing_csv(out, cfg, rows);
      for (const auto& r : rows) {
        std::cout << r.filter << " N=" << r.particles << ": " << r.mean_ms << " ms/step\n";
      }
    } else if (*bp) {
      const auto sweep = harness::bench_planning(cfg, parse_int_list(q_levels),
                                                 parse_int_list(iters), sir_particles);
      {
        auto out = open_output(dir / "planning.csv");
        harness::write_planning_csv(out, cfg, sweep);
      }
      {
        auto out = open_output(dir / "planning_episodes.csv");
        harness::write_planning_episodes_csv(out, cfg, sweep);
      }
      std::cout << "upper bound " << sweep.upper_bound << '\n';
      for (const auto& c : sweep.cells) {
        std::cout << c.planner << '/' << c.filter << " q=" << c.q << " iters=" << c.iterations
                  << ": reward " << c.summary.mean_reward << " +/- " << c.summary.ci95
                  << ", success " << c.summary.success_rate << ", plan "
                  << c.summary.mean_plan_ms << " ms/step\n";
      }
    } else if (*cs) {
      const auto report = harness::consistency_suite(cfg, consistency_steps);
      auto out = open_output(dir / "consistency.csv");
      harness::write_consistency_csv(out, cfg, report);
      for (const auto& f : report.filters) {
        std::cout << f.filter << ": " << f.steps << " steps, NEES inside "
                  << f.nees_inside << ", NIS inside " << f.nis_inside << '\n';
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
