#include <chrono>
#include <sstream>
#include <variant>

#include "fdrscca/cli/commands.hpp"
#include "fdrscca/cli/csv.hpp"
#include "fdrscca/simulation.hpp"
#include "fdrscca/version.hpp"

namespace fdrscca::cli {

namespace {

struct Setting {
  std::variant<BlockModelSpec, LatentModelSpec> model;
  Index sx = 0;
  Index sy = 0;
  std::optional<Index> s;  // latent model only
};

std::vector<Setting> expand_grid(const SimulateConfig& c) {
  std::vector<Setting> out;
  if (c.model == "block") {
    for (Index sx : c.sx) {
      for (Index sy : c.sy) {
        BlockModelSpec b{c.px, c.py, sx, sy, c.rho_within, c.rho_background, c.rho_cross,
                         c.k_blocks};
        out.push_back({b, sx, sy, std::nullopt});
      }
    }
  } else {
    const auto source = [](const std::string& name) {
      return name == "skewed" ? ColumnSource::kSkewedDiscrete : ColumnSource::kStandardNormal;
    };
    for (Index s : c.latent_s) {
      LatentModelSpec l{c.px, c.py, LatentSpec{s, c.rho_xy, source(c.x_source), source(c.y_source)}};
      out.push_back({l, s, s, s});
    }
  }
  return out;
}

std::string opt_cell(const std::optional<double>& v) { return v ? format_double(*v) : ""; }

Json estimate_json(const Estimate& e) {
  return {{"mean", e.mean}, {"se", e.se ? Json(*e.se) : Json(nullptr)}};
}

Json histogram_json(const std::map<Index, Index>& h) {
  Json a = Json::array();
  for (const auto& [r, count] : h) a.push_back({r, count});
  return a;
}

struct Run {
  std::size_t setting = 0;
  std::string method;
  ExperimentSummary summary;
  double seconds = 0.0;
};

}  // namespace

int cmd_simulate(const RunConfig& config, const std::string& seed_source, std::ostream& out,
                 std::ostream& err) {
  const SimulateConfig& sim = config.simulate;
  const std::vector<Setting> grid = expand_grid(sim);

  // Validate every experiment (including positive definiteness) before running any.
  std::vector<ExperimentSpec> specs;
  std::vector<std::size_t> spec_setting;
  try {
    for (std::size_t g = 0; g < grid.size(); ++g) {
      if (const auto* b = std::get_if<BlockModelSpec>(&grid[g].model)) build_block_model(*b);
      for (const auto& name : sim.methods) {
        ExperimentSpec e;
        e.model = grid[g].model;
        e.n = sim.n;
        e.reps = sim.reps;
        e.method = Method::parse(name);
        e.q_levels = sim.q;
        e.master_seed = *config.seed;
        e.target_nnz = sim.target_nnz;
        e.solver = config.solver;
        e.threads = config.threads;
        e.validate();
        specs.push_back(std::move(e));
        spec_setting.push_back(g);
      }
    }
  } catch (const Error& e) {
    err << "error: invalid simulation setting: " << e.name() << ": " << e.what() << '\n';
    return kExitUsage;
  }

  std::vector<Run> runs;
  for (std::size_t k = 0; k < specs.size(); ++k) {
    const auto t0 = std::chrono::steady_clock::now();
    Run r{spec_setting[k], specs[k].method.label(), run_experiment(specs[k]), 0.0};
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const Setting& s = grid[r.setting];
    err << "[" << (k + 1) << "/" << specs.size() << "] sx=" << s.sx << " sy=" << s.sy << " "
        << r.method << ": " << r.seconds << " s\n";
    runs.push_back(std::move(r));
  }

  const Json echo = to_json(config, false);
  Json files = Json::array();
  if (config.write_csv) {
    const std::string preamble = detail::csv_preamble(echo);
    std::ostringstream summary, reps, plot_fdr, plot_tpr, tpp;
    summary << preamble
            << "setting,model,sx,sy,s,k_blocks,n,px,py,method,q,reps,reps_ok,excluded,"
               "fdr_u,fdr_u_se,fdr_v,fdr_v_se,tpr_u,tpr_u_se,tpr_v,tpr_v_se\n";
    reps << preamble
         << "setting,method,q,rep,seed,ok,error,fdp_u,fdp_v,tpp_u,tpp_v,rejections_u,"
            "rejections_v,false_u,false_v\n";
    plot_fdr << preamble << "series,method,q,panel_sy,x_sx,y,error\n";
    plot_tpr << preamble << "series,method,q,panel_sy,x_sx,y,error\n";
    tpp << preamble << "setting,method,q,k_blocks,center,mass,mass_near_multiples\n";

    for (const Run& r : runs) {
      const Setting& s = grid[r.setting];
      for (std::size_t l = 0; l < r.summary.levels.size(); ++l) {
        const LevelSummary& lv = r.summary.levels[l];
        const std::string q = opt_cell(lv.q);
        summary << r.setting << ',' << sim.model << ',' << s.sx << ',' << s.sy << ','
                << (s.s ? std::to_string(*s.s) : "") << ',' << sim.k_blocks << ',' << sim.n << ','
                << sim.px << ',' << sim.py << ',' << csv_cell(r.method) << ',' << q << ','
                << sim.reps << ',' << lv.reps_ok << ',' << lv.excluded << ','
                << format_double(lv.fdr_u.mean) << ',' << opt_cell(lv.fdr_u.se) << ','
                << format_double(lv.fdr_v.mean) << ',' << opt_cell(lv.fdr_v.se) << ','
                << format_double(lv.tpr_u.mean) << ',' << opt_cell(lv.tpr_u.se) << ','
                << format_double(lv.tpr_v.mean) << ',' << opt_cell(lv.tpr_v.se) << '\n';

        const std::string series = csv_cell(lv.q ? r.method + " q=" + q : r.method);
        const auto two_se = [](const Estimate& e) { return e.se ? format_double(2.0 * *e.se) : ""; };
        plot_fdr << series << ',' << csv_cell(r.method) << ',' << q << ',' << s.sy << ',' << s.sx
                 << ',' << format_double(lv.fdr_v.mean) << ',' << two_se(lv.fdr_v) << '\n';
        plot_tpr << series << ',' << csv_cell(r.method) << ',' << q << ',' << s.sy << ',' << s.sx
                 << ',' << format_double(lv.tpr_v.mean) << ',' << two_se(lv.tpr_v) << '\n';

        if (sim.model == "block" && !lv.tpp_v.empty()) {
          const TppHistogram h = tpp_distribution(lv, sim.k_blocks);
          for (std::size_t j = 0; j < h.centers.size(); ++j) {
            tpp << r.setting << ',' << csv_cell(r.method) << ',' << q << ',' << sim.k_blocks << ','
                << format_double(h.centers[j]) << ',' << format_double(h.mass[j]) << ','
                << format_double(h.mass_near_multiples) << '\n';
          }
        }

        for (const RepOutcome& rep : r.summary.reps) {
          reps << r.setting << ',' << csv_cell(r.method) << ',' << q << ',' << rep.rep << ','
               << rep.seed << ',' << (rep.ok ? 1 : 0) << ',' << rep.error << ',';
          if (rep.ok) {
            const FdpTpp& m = rep.metrics[l];
            reps << format_double(m.fdp_u) << ',' << format_double(m.fdp_v) << ','
                 << format_double(m.tpp_u) << ',' << format_double(m.tpp_v) << ','
                 << m.rejections_u << ',' << m.rejections_v << ',' << m.false_u << ','
                 << m.false_v << '\n';
          } else {
            reps << ",,,,,,,\n";
          }
        }
      }
    }
    detail::write_file(config.out, "summary.csv", summary.str());
    detail::write_file(config.out, "reps.csv", reps.str());
    detail::write_file(config.out, "plot_fdr_v.csv", plot_fdr.str());
    detail::write_file(config.out, "plot_tpr_v.csv", plot_tpr.str());
    files.push_back("summary.csv");
    files.push_back("reps.csv");
    files.push_back("plot_fdr_v.csv");
    files.push_back("plot_tpr_v.csv");
    if (sim.model == "block") {
      detail::write_file(config.out, "tpp_distribution.csv", tpp.str());
      files.push_back("tpp_distribution.csv");
    }
  }
  if (config.write_json) {
    Json settings = Json::array();
    for (std::size_t g = 0; g < grid.size(); ++g) {
      Json results = Json::array();
      for (const Run& r : runs) {
        if (r.setting != g) continue;
        for (const LevelSummary& lv : r.summary.levels) {
          Json level{{"method", r.method},
                     {"q", lv.q ? Json(*lv.q) : Json(nullptr)},
                     {"reps_ok", lv.reps_ok},
                     {"excluded", lv.excluded},
                     {"fdr_u", estimate_json(lv.fdr_u)},
                     {"fdr_v", estimate_json(lv.fdr_v)},
                     {"tpr_u", estimate_json(lv.tpr_u)},
                     {"tpr_v", estimate_json(lv.tpr_v)},
                     {"rejections_hist_u", histogram_json(lv.rejections_hist_u)},
                     {"rejections_hist_v", histogram_json(lv.rejections_hist_v)}};
          if (sim.model == "block" && !lv.tpp_v.empty()) {
            const TppHistogram h = tpp_distribution(lv, sim.k_blocks);
            level["tpp_distribution_v"] = {{"k", h.k},
                                           {"centers", h.centers},
                                           {"mass", h.mass},
                                           {"mass_near_multiples", h.mass_near_multiples},
                                           {"distinct_values", h.distinct_values}};
          }
          results.push_back(std::move(level));
        }
      }
      Json setting{{"id", g}, {"sx", grid[g].sx}, {"sy", grid[g].sy}};
      if (grid[g].s) setting["s"] = *grid[g].s;
      setting["results"] = std::move(results);
      settings.push_back(std::move(setting));
    }
    Json r;
    r["version"] = kVersion;
    r["seed"] = *config.seed;
    r["config"] = echo;
    r["settings"] = std::move(settings);
    detail::write_file(config.out, "result.json", r.dump(2) + "\n");
    files.push_back("result.json");
  }
  detail::write_file(config.out, "manifest.json",
                     detail::manifest(config, seed_source, files).dump(2) + "\n");

  Index excluded = 0;
  for (const Run& r : runs) excluded += r.summary.levels.front().excluded;
  out << runs.size() << " experiments over " << grid.size() << " settings, " << sim.reps
      << " reps each";
  if (excluded > 0) out << ", " << excluded << " reps excluded after errors";
  out << "; results in " << config.out << '\n';
  return kExitOk;
}

}  // namespace fdrscca::cli
