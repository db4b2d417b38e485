// crlmkit: command-line front end for the CRLM toolkit.

#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "crlm/evalkit.hpp"
#include "crlm/pipeline.hpp"
#include "crlm/synthgen.hpp"

namespace fs = std::filesystem;
namespace pl = crlm::pipeline;
using nlohmann::json;

namespace {

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
};

pl::RunConfig load_run_config(const Globals& g, bool required) {
  pl::RunConfig cfg;
  if (!g.config.empty()) cfg = pl::load_config(g.config);
  else if (required) throw crlm::InvalidArgument("--config is required for this command");
  if (g.seed) cfg.seed = *g.seed;
  if (g.out) cfg.out_root = *g.out;
  return cfg;
}

fs::path out_dir(const Globals& g, const fs::path& fallback = "out") {
  const fs::path p = g.out ? fs::path(*g.out) : fallback;
  fs::create_directories(p);
  return p;
}

void write_text(const fs::path& p, const std::string& text) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream os(p, std::ios::binary);
  os << text;
  if (!os) throw crlm::IoError(crlm::IoErrorKind::write_failed, p.string());
}

void print_manifest(const pl::Manifest& m) {
  for (const auto& s : m.stages) {
    std::cout << std::left << std::setw(10) << s.name << s.status;
    if (!s.note.empty()) std::cout << "  (" << s.note << ")";
    std::cout << "\n";
  }
}

int run_stages(const Globals& g, const std::string& last) {
  const auto m = pl::run_end_to_end(load_run_config(g, true), {}, last);
  print_manifest(m);
  return 0;
}

crlm::Pixel parse_pixel(const std::string& s) {
  const auto comma = s.find(',');
  if (comma == std::string::npos) throw crlm::InvalidArgument("expected row,col but got '" + s + "'");
  return {std::stoll(s.substr(0, comma)), std::stoll(s.substr(comma + 1))};
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');)
    if (!item.empty()) out.push_back(item);
  return out;
}

void write_cohort_bags(const fs::path& path, const crlm::synthgen::Cohort& c) {
  std::ostringstream os;
  os << std::setprecision(10) << "patient_id,tumor,volume_mm3";
  const auto dim = c.bags.empty() ? 0 : c.bags.front().x.cols();
  for (Eigen::Index f = 0; f < dim; ++f) os << ",f" << f;
  os << "\n";
  for (const auto& b : c.bags)
    for (Eigen::Index r = 0; r < b.x.rows(); ++r) {
      os << b.patient_id << "," << r << "," << b.volumes_mm3[static_cast<std::size_t>(r)];
      for (Eigen::Index f = 0; f < dim; ++f) os << "," << b.x(r, f);
      os << "\n";
    }
  write_text(path, os.str());
}

pl::Service* g_service = nullptr;

extern "C" void on_signal(int) {
  if (g_service) g_service->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"crlmkit: segmentation, radiomics and survival modelling for liver metastases"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config, "Run configuration (JSON)");
  app.add_option("--seed", g.seed, "Seed overriding the configuration");
  app.add_option("--out", g.out, "Output directory");

  // run and per-stage commands over a run configuration
  auto* run = app.add_subcommand("run", "Run every stage of the pipeline");
  auto* segment = app.add_subcommand("segment", "Segment (or load) masks for every case");
  auto* features = app.add_subcommand("features", "Segment and extract radiomics features");
  auto* train = app.add_subcommand("train", "Run through cross-validated SurvAMINN training");

  // evaluate: config mode, or a single prediction/reference pair
  auto* evaluate = app.add_subcommand("evaluate", "Score segmentations against reference masks");
  std::string eval_pred, eval_ref, eval_id = "case";
  evaluate->add_option("--pred", eval_pred, "Predicted label mask");
  evaluate->add_option("--ref", eval_ref, "Reference label mask");
  evaluate->add_option("--id", eval_id, "Case id for the report");

  auto* stats = app.add_subcommand("stats", "Cox model, bootstrap, Kaplan-Meier and log-rank on a cohort CSV");
  std::string stats_cohort, stats_covariates, stats_risk;
  int stats_bootstrap = 0;
  stats->add_option("--cohort", stats_cohort, "Cohort CSV (id,time,event,covariates...)")->required();
  stats->add_option("--covariates", stats_covariates, "Comma-separated covariates (default: all)");
  stats->add_option("--risk", stats_risk, "Column used for median stratification (default: first covariate)");
  stats->add_option("--bootstrap", stats_bootstrap, "Bootstrap resamples for hazard-ratio intervals");

  auto* samonai = app.add_subcommand("samonai", "Propagate one seed prompt through a volume");
  std::string sam_image, sam_view = "axial", sam_output, sam_segmenter = "region-grow";
  std::int64_t sam_index = 0, sam_row = 0, sam_col = 0;
  std::vector<std::string> sam_negative;
  samonai->add_option("--image", sam_image, "Input volume")->required();
  samonai->add_option("--view", sam_view, "axial, coronal or sagittal");
  samonai->add_option("--index", sam_index, "Slice index")->required();
  samonai->add_option("--row", sam_row, "Seed row")->required();
  samonai->add_option("--col", sam_col, "Seed column")->required();
  samonai->add_option("--negative", sam_negative, "Negative prompt row,col (repeatable)");
  samonai->add_option("--segmenter", sam_segmenter, "Registered 2D segmenter");
  samonai->add_option("--output", sam_output, "Output mask path (default <out>/mask.nii)");

  auto* simulate = app.add_subcommand("simulate", "Write synthetic phantoms, cohorts or whole studies");
  std::string sim_kind;
  std::size_t sim_n = 12;
  int sim_tumors = 2;
  double sim_noise = 5.0;
  simulate->add_option("kind", sim_kind, "phantom, cohort or study")->required()->check(CLI::IsMember({"phantom", "cohort", "study"}));
  simulate->add_option("--n", sim_n, "Cases (study) or patients (cohort)");
  simulate->add_option("--tumors", sim_tumors, "Tumors in the phantom");
  simulate->add_option("--noise", sim_noise, "Gaussian noise standard deviation");

  auto* serve = app.add_subcommand("serve", "Serve volumes and SAMONAI jobs over HTTP");
  pl::ServerConfig scfg;
  std::string serve_root, serve_static;
  serve->add_option("--data-root", serve_root, "Directory of volumes (default: config data_root)");
  serve->add_option("--host", scfg.host);
  serve->add_option("--port", scfg.port);
  serve->add_option("--workers", scfg.workers);
  serve->add_option("--static", serve_static, "Directory of viewer assets served at /");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return run_stages(g, "stats");
    if (segment->parsed()) return run_stages(g, "segment");
    if (features->parsed()) return run_stages(g, "features");
    if (train->parsed()) return run_stages(g, "train");

    if (evaluate->parsed()) {
      if (eval_pred.empty() && eval_ref.empty()) return run_stages(g, "evaluate");
      if (eval_pred.empty() || eval_ref.empty()) throw crlm::InvalidArgument("--pred and --ref go together");
      const auto rep = crlm::evalkit::evaluate_case(eval_id, crlm::load_mask(eval_pred), crlm::load_mask(eval_ref));
      const auto dir = out_dir(g);
      std::ostringstream csv;
      crlm::evalkit::write_report_csv(csv, {rep});
      write_text(dir / "segmentation_report.csv", csv.str());
      const auto summary = crlm::evalkit::summary_json({rep});
      write_text(dir / "segmentation_summary.json", summary.dump(2) + "\n");
      std::cout << summary.dump(2) << "\n";
      return 0;
    }

    if (stats->parsed()) {
      const auto t = crlm::survstats::load_cohort_csv(stats_cohort);
      auto covs = stats_covariates.empty() ? t.names : split_list(stats_covariates);
      if (covs.empty()) throw crlm::InvalidArgument("cohort has no covariates");
      const std::string risk_col = stats_risk.empty() ? covs.front() : stats_risk;
      const auto seed = g.seed.value_or(0);
      const auto fit = crlm::survstats::coxph_fit(t, covs);
      std::optional<crlm::survstats::BootstrapResult> boot;
      if (stats_bootstrap > 0) boot = crlm::survstats::bootstrap_hr(t, covs, stats_bootstrap, seed);
      const auto strat = pl::stratify(t.labels, t.column(risk_col));
      const auto dir = out_dir(g);
      std::ostringstream cox, km;
      pl::write_cox_csv(cox, fit, boot);
      pl::write_km_csv(km, strat.curves);
      write_text(dir / "cox.csv", cox.str());
      write_text(dir / "km.csv", km.str());
      json summary = {{"patients", t.size()}, {"events", t.event_count()}, {"cox", crlm::survstats::to_json(fit)},
                      {"stratified_by", risk_col}, {"stratification", pl::to_json(strat)},
                      {"c_index", crlm::survstats::concordance_index(t.labels, t.column(risk_col))}};
      write_text(dir / "stats.json", summary.dump(2) + "\n");
      std::cout << cox.str();
      return 0;
    }

    if (samonai->parsed()) {
      const auto cfg = load_run_config(g, false);
      pl::SeedPrompt prompt{{crlm::parse_view(sam_view), sam_index}, {{{sam_row, sam_col}, crlm::Polarity::positive}}};
      for (const auto& n : sam_negative) prompt.points.push_back({parse_pixel(n), crlm::Polarity::negative});
      const auto seg = crlm::make_segmenter(sam_segmenter);
      const auto mask = pl::run_samonai(crlm::load_volume(sam_image), prompt, *seg, cfg.samonai);
      const fs::path path = sam_output.empty() ? out_dir(g) / "mask.nii" : fs::path(sam_output);
      if (path.has_parent_path()) fs::create_directories(path.parent_path());
      crlm::save_mask(mask, path.string());
      std::cout << path.string() << ": " << crlm::count_nonzero(mask) << " voxels\n";
      return 0;
    }

    if (simulate->parsed()) {
      const auto seed = g.seed.value_or(0);
      const auto dir = out_dir(g, "synthetic");
      if (sim_kind == "phantom") {
        crlm::synthgen::PhantomSpec ps;
        ps.noise_sd = sim_noise;
        ps.seed = seed;
        crlm::Rng rng(seed);
        ps.tumors = crlm::synthgen::place_tumors(ps, sim_tumors, 4, 9, rng);
        const auto ph = crlm::synthgen::generate_phantom(ps);
        crlm::save_volume(ph.pre, (dir / "phantom_pre.nii").string());
        crlm::save_volume(ph.post, (dir / "phantom_post.nii").string());
        crlm::save_mask(ph.labels, (dir / "phantom_labels.nii").string());
      } else if (sim_kind == "cohort") {
        crlm::synthgen::CohortSpec cs;
        cs.n = sim_n;
        cs.seed = seed;
        const auto c = crlm::synthgen::generate_cohort(cs);
        write_cohort_bags(dir / "tumors.csv", c);
        crlm::survstats::CohortTable t;
        for (std::size_t i = 0; i < c.bags.size(); ++i) {
          t.ids.push_back(c.bags[i].patient_id);
          t.labels.push_back(c.labels[i]);
        }
        t.add_column("true_risk", c.true_risk);
        crlm::survstats::save_cohort_csv(dir / "clinical.csv", t);
      } else {
        pl::StudySpec spec;
        spec.n_cases = sim_n;
        spec.noise_sd = sim_noise;
        spec.seed = seed;
        pl::simulate_study(dir, spec);
      }
      std::cout << "wrote " << sim_kind << " to " << dir.string() << "\n";
      return 0;
    }

    if (serve->parsed()) {
      const auto cfg = load_run_config(g, false);
      scfg.data_root = serve_root.empty() ? cfg.data_root : fs::path(serve_root);
      scfg.segmenter = cfg.segmenter;
      scfg.samonai = cfg.samonai;
      if (!serve_static.empty()) scfg.static_dir = serve_static;
      pl::Service svc(scfg);
      svc.volumes().load_dir(scfg.data_root);
      const int port = svc.bind();
      std::cout << "serving " << svc.volumes().list().size() << " volume(s) from " << scfg.data_root.string() << " on http://"
                << scfg.host << ":" << port << std::endl;
      g_service = &svc;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      svc.listen();
      g_service = nullptr;
      return 0;
    }
  } catch (const pl::StageError& e) {
    std::cerr << "error: stage " << e.what() << "\n";
    print_manifest(e.manifest());
    return 1;
  } catch (const crlm::InvalidArgument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
