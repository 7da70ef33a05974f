#include <algorithm>
#include <map>
#include <sstream>

#include "fdrscca/cli/commands.hpp"
#include "fdrscca/cli/csv.hpp"
#include "fdrscca/fdr_pipeline.hpp"
#include "fdrscca/random.hpp"
#include "fdrscca/version.hpp"

namespace fdrscca::cli {

namespace {

Json index_array(const IndexSet& s) {
  Json a = Json::array();
  for (Index i : s) a.push_back(i);
  return a;
}

Json vector_array(const Vector& v) {
  Json a = Json::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

// Stratum labels mapped to integer ids in order of first appearance.
std::vector<int> stratum_ids(const std::vector<std::string>& labels) {
  std::map<std::string, int> ids;
  std::vector<int> out;
  out.reserve(labels.size());
  for (const auto& label : labels) {
    const auto [it, inserted] = ids.emplace(label, static_cast<int>(ids.size()));
    out.push_back(it->second);
  }
  return out;
}

struct Side {
  const std::vector<std::string>& names;
  const Vector& corrected;
  const Vector& preliminary;
  const IndexSet& support;
  const Vector& z;
  const Vector& p;
  const IndexSet& rejected;
};

Json side_json(const Side& s) {
  Json features = Json::array();
  for (std::size_t k = 0; k < s.support.size(); ++k) {
    const Index i = s.support[k];
    const auto kk = static_cast<Index>(k);
    features.push_back({{"index", i},
                        {"name", s.names[static_cast<std::size_t>(i)]},
                        {"preliminary", s.preliminary[i]},
                        {"z", s.z[kk]},
                        {"p", s.p[kk]},
                        {"rejected", std::binary_search(s.rejected.begin(), s.rejected.end(), i)},
                        {"corrected", s.corrected[i]}});
  }
  return {{"n_features", s.corrected.size()},
          {"preliminary_support_size", s.support.size()},
          {"rejections", s.rejected.size()},
          {"rejected", index_array(s.rejected)},
          {"corrected", vector_array(s.corrected)},
          {"tested", features}};
}

std::string side_csv(const Side& s, const std::string& preamble) {
  std::ostringstream os;
  os << preamble << "index,name,corrected,preliminary,in_support,z,p,rejected\n";
  std::size_t k = 0;
  for (Index i = 0; i < s.corrected.size(); ++i) {
    const bool tested = k < s.support.size() && s.support[k] == i;
    os << i << ',' << csv_cell(s.names[static_cast<std::size_t>(i)]) << ','
       << format_double(s.corrected[i]) << ',' << format_double(s.preliminary[i]) << ','
       << (tested ? 1 : 0) << ',';
    if (tested) {
      const auto kk = static_cast<Index>(k);
      os << format_double(s.z[kk]) << ',' << format_double(s.p[kk]);
      ++k;
    } else {
      os << ',';
    }
    os << ',' << (std::binary_search(s.rejected.begin(), s.rejected.end(), i) ? 1 : 0) << '\n';
  }
  return os.str();
}

}  // namespace

int cmd_analyze(const RunConfig& config, const std::string& seed_source, std::ostream& out,
                std::ostream& err) {
  CsvMatrix xs, ys;
  try {
    xs = read_csv_matrix(config.x_path, config.stratum_column);
    ys = read_csv_matrix(config.y_path);
  } catch (const CsvError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  if (xs.values.rows() != ys.values.rows()) {
    err << "error: " << config.x_path << " has " << xs.values.rows() << " data rows but "
        << config.y_path << " has " << ys.values.rows() << '\n';
    return kExitUsage;
  }

  const std::uint64_t seed = *config.seed;
  PipelineConfig pcfg;
  pcfg.q_u = config.q_u;
  pcfg.q_v = config.q_v;
  pcfg.combined_q = config.combined_q;
  pcfg.target_nnz = config.target_nnz;
  pcfg.split_seed = seed;
  pcfg.solver = config.solver;
  pcfg.solver.rng_seed = seed;
  if (xs.strata) pcfg.strata = stratum_ids(*xs.strata);

  FdrCcaResult result = [&] {
    const DataMatrixPair data = standardize(DataMatrixPair(xs.values, ys.values));
    return run_procedure(data, pcfg);
  }();

  const Json echo = to_json(config, false);
  const Side u{xs.names, result.corrected.u, result.preliminary.u, result.preliminary.support_u,
               result.z_u, result.p_u, result.rejected_u};
  const Side v{ys.names, result.corrected.v, result.preliminary.v, result.preliminary.support_v,
               result.z_v, result.p_v, result.rejected_v};

  Json files = Json::array();
  if (config.write_json) {
    Json r;
    r["version"] = kVersion;
    r["seed"] = seed;
    r["config"] = echo;
    r["n"] = xs.values.rows();
    r["split"] = {{"seed", result.split.seed},
                  {"part0", index_array(result.split.part0)},
                  {"part1", index_array(result.split.part1)},
                  {"part2", index_array(result.split.part2)}};
    r["penalty"] = {{"lambda_u", result.penalty.lambda_u()},
                    {"lambda_v", result.penalty.lambda_v()},
                    {"c1", result.penalty.c1()},
                    {"c2", result.penalty.c2()},
                    {"tuning_hit_band", result.tuning_hit_band}};
    r["objective"] = {{"preliminary", result.preliminary.objective},
                      {"corrected", result.corrected.objective}};
    r["u"] = side_json(u);
    r["v"] = side_json(v);
    detail::write_file(config.out, "result.json", r.dump(2) + "\n");
    files.push_back("result.json");
  }
  if (config.write_csv) {
    const std::string preamble = detail::csv_preamble(echo);
    detail::write_file(config.out, "u.csv", side_csv(u, preamble));
    detail::write_file(config.out, "v.csv", side_csv(v, preamble));
    std::ostringstream s;
    s << preamble
      << "n,px,py,n0,n1,n2,support_u,support_v,rejections_u,rejections_v,q_u,q_v,"
         "lambda_u,lambda_v,tuning_hit_band,objective\n"
      << xs.values.rows() << ',' << xs.values.cols() << ',' << ys.values.cols() << ','
      << result.split.part0.size() << ',' << result.split.part1.size() << ','
      << result.split.part2.size() << ',' << result.preliminary.support_u.size() << ','
      << result.preliminary.support_v.size() << ',' << result.rejected_u.size() << ','
      << result.rejected_v.size() << ',' << format_double(config.q_u) << ','
      << format_double(config.q_v) << ',' << format_double(result.penalty.lambda_u()) << ','
      << format_double(result.penalty.lambda_v()) << ',' << (result.tuning_hit_band ? 1 : 0)
      << ',' << format_double(result.corrected.objective) << '\n';
    detail::write_file(config.out, "summary.csv", s.str());
    files.push_back("u.csv");
    files.push_back("v.csv");
    files.push_back("summary.csv");
  }
  detail::write_file(config.out, "manifest.json",
                     detail::manifest(config, seed_source, files).dump(2) + "\n");

  out << "rejected " << result.rejected_u.size() << " of " << result.preliminary.support_u.size()
      << " tested X features and " << result.rejected_v.size() << " of "
      << result.preliminary.support_v.size() << " tested Y features; results in " << config.out
      << '\n';
  return kExitOk;
}

}  // namespace fdrscca::cli
