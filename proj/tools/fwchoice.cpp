// Command-line front end: synthetic data generation, exposure statistics,
// instance extraction, featurization, training, evaluation and ablation.
//
// Exit codes: 0 success, 1 data/validation failure, 2 usage error.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "fwchoice/cascade.hpp"
#include "fwchoice/errors.hpp"
#include "fwchoice/eval.hpp"
#include "fwchoice/exposure.hpp"
#include "fwchoice/features.hpp"
#include "fwchoice/graph.hpp"
#include "fwchoice/model.hpp"
#include "fwchoice/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct UsageError : fwc::Error {
  using fwc::Error::Error;
};

/// Raised when loaded data fails validation; the message carries the counts.
struct ValidationFailure : fwc::Error {
  using fwc::Error::Error;
};

struct Options {
  std::string edges;
  std::string cascades;
  std::string instances;
  std::string features;
  std::string train;
  std::string test;
  std::string model;
  std::string out;
  std::string config;
  std::string grouping = "table";
  double tz_offset = fwc::kDefaultTzOffset;
  double threshold = 0.5;
  double l2 = 0.0;
  double tol = 1e-8;
  std::size_t max_iter = 500;
  std::uint64_t seed = 1;
  unsigned threads = 1;
  std::optional<fwc::Timestamp> boundary;
  std::size_t n = 0;
  bool skip_invalid = false;

  // synth overrides
  std::optional<std::size_t> n_users;
  std::optional<std::string> graph_model;
  std::optional<double> edge_prob;
  std::optional<std::size_t> out_degree;
  std::optional<std::size_t> n_cascades;
  std::optional<double> forward_prob;
};

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw fwc::IoError("cannot write " + path);
  return out;
}

void finish_output(std::ofstream& out, const std::string& path) {
  out.flush();
  if (!out) throw fwc::IoError("write failed: " + path);
}

fwc::Grouping resolve_grouping(const std::string& choice) {
  if (choice == "table" || choice == "prose") return fwc::Grouping::named(choice);
  std::ifstream in(choice);
  if (!in) throw UsageError("--grouping must be table, prose or a readable JSON file");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw fwc::ConfigError(std::string("grouping file: ") + e.what());
  }
  fwc::Grouping g;
  for (const auto& [name, ids] : j.items()) g[fwc::parse_group_name(name)] = ids.get<std::vector<int>>();
  g.validate();
  return g;
}

bool given(const CLI::App& sub, const std::string& name) {
  const CLI::Option* opt = sub.get_option_no_throw(name);
  return opt != nullptr && opt->count() > 0;
}

fwc::SynthConfig synth_config(const Options& o, const CLI::App& sub) {
  fwc::SynthConfig cfg;
  if (!o.config.empty()) cfg = fwc::load_synth_config(o.config, cfg);
  if (given(sub, "--seed")) cfg.seed = o.seed;
  if (o.n_users) cfg.n_users = *o.n_users;
  if (o.graph_model) {
    if (*o.graph_model == "uniform") cfg.graph_model = fwc::GraphModel::Uniform;
    else cfg.graph_model = fwc::GraphModel::PreferentialAttachment;
  }
  if (o.edge_prob) cfg.edge_prob = *o.edge_prob;
  if (o.out_degree) cfg.out_degree = *o.out_degree;
  if (o.n_cascades) cfg.n_cascades = *o.n_cascades;
  if (o.forward_prob) cfg.forward_prob = *o.forward_prob;
  if (given(sub, "--tz-offset")) cfg.tz_offset = o.tz_offset;
  cfg.validate();
  return cfg;
}

fwc::FollowGraph read_graph(const Options& o, json& manifest) {
  fwc::EdgeLoadStats stats;
  auto g = fwc::load_edges(o.edges, &stats);
  manifest["counts"]["edges"] = stats.edges;
  manifest["counts"]["users"] = stats.users;
  manifest["counts"]["duplicate_edges"] = stats.duplicates;
  manifest["counts"]["self_loops"] = stats.self_loops;
  if (stats.self_loops > 0) {
    std::cerr << "warning: dropped " << stats.self_loops << " self-loop edge(s)\n";
  }
  return g;
}

std::vector<fwc::Cascade> read_cascades(const Options& o, json& manifest) {
  auto loaded = fwc::load_cascades(o.cascades);
  manifest["counts"]["cascades"] = loaded.cascades.size();
  manifest["counts"]["cascades_rejected"] = loaded.rejected.size();
  manifest["counts"]["repeat_forwards_dropped"] = loaded.repeat_forwards_dropped;
  for (const auto& r : loaded.rejected) {
    std::cerr << o.cascades << ":" << r.line << ": rejected message " << r.message_id << ": "
              << r.reason << '\n';
  }
  if (!loaded.rejected.empty() && !o.skip_invalid) {
    throw ValidationFailure(std::to_string(loaded.rejected.size()) + " of " +
                            std::to_string(loaded.rejected.size() + loaded.cascades.size()) +
                            " cascades failed validation (use --skip-invalid to continue)");
  }
  return std::move(loaded.cascades);
}

fwc::Dataset read_feature_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw fwc::IoError("cannot open " + path);
  return fwc::read_features(in, path);
}

fwc::FitConfig fit_config(const Options& o) {
  fwc::FitConfig fc;
  fc.l2 = o.l2;
  fc.tol = o.tol;
  fc.max_iter = o.max_iter;
  fc.grouping = resolve_grouping(o.grouping);
  return fc;
}

json report_json(const fwc::TrainReport& r) {
  return {{"log_likelihood", r.log_likelihood},
          {"iterations", r.iterations},
          {"converged", r.converged},
          {"gradient_norm", r.gradient_norm}};
}

void write_eval(const fwc::EvalReport& r, const std::string& method, std::ostream& out) {
  fwc::AblationRow row{method, r, false};
  fwc::write_report_tsv(std::span(&row, 1), out);
}

json eval_json(const fwc::EvalReport& r) {
  const auto metric = [](const std::optional<double>& v) { return v ? json(*v) : json("undefined"); };
  return {{"tp", r.tp}, {"fp", r.fp}, {"fn", r.fn}, {"tn", r.tn}, {"n", r.n},
          {"precision", metric(r.precision)}, {"recall", metric(r.recall)},
          {"f1", metric(r.f1)}, {"threshold", r.threshold}};
}

fwc::AblationConfig ablation_config(const Options& o) {
  fwc::AblationConfig ac;
  ac.fit = fit_config(o);
  ac.threshold = o.threshold;
  ac.threads = o.threads;
  ac.seed = o.seed;
  return ac;
}

void emit_ablation(const std::vector<fwc::AblationRow>& rows, const std::string& tsv_path,
                   json& manifest) {
  auto out = open_output(tsv_path);
  fwc::write_report_tsv(rows, out);
  finish_output(out, tsv_path);
  fwc::write_report_table(rows, std::cerr);
  json table = json::array();
  for (const auto& r : rows) {
    json row = eval_json(r.report);
    row["method"] = r.method;
    row["baseline"] = r.baseline;
    table.push_back(std::move(row));
  }
  manifest["ablation"] = std::move(table);
}

// --- subcommands ------------------------------------------------------------

void cmd_synth_graph(const Options& o, const CLI::App& sub, json& m) {
  const auto cfg = synth_config(o, sub);
  const auto g = fwc::generate_graph(cfg);
  fwc::save_edges(g, o.out);
  m["seed"] = cfg.seed;
  m["counts"] = {{"users", g.user_count()}, {"edges", g.edge_count()}};
}

void cmd_synth_cascades(const Options& o, const CLI::App& sub, json& m) {
  const auto cfg = synth_config(o, sub);
  const auto g = read_graph(o, m);
  const auto cascades = fwc::simulate_cascades(g, cfg);
  fwc::save_cascades(cascades, o.out);
  std::size_t events = 0;
  for (const auto& c : cascades) events += c.events.size();
  m["seed"] = cfg.seed;
  m["counts"]["cascades"] = cascades.size();
  m["counts"]["events"] = events;
}

void cmd_synth_instances(const Options& o, const CLI::App& sub, json& m) {
  const auto cfg = synth_config(o, sub);
  const auto data = fwc::sample_instances(cfg, o.n);
  auto out = open_output(o.out);
  fwc::write_features(data, out);
  finish_output(out, o.out);
  m["seed"] = cfg.seed;
  m["counts"] = {{"instances", data.size()}, {"label_1", data.y.sum()}};
}

void cmd_exposure_stats(const Options& o, const CLI::App&, json& m) {
  const auto g = read_graph(o, m);
  const auto cascades = read_cascades(o, m);
  const auto dist = fwc::exposure_distribution(g, cascades);
  auto out = open_output(o.out);
  fwc::write_exposure_distribution(dist, out);
  finish_output(out, o.out);
  json w = json::object();
  for (const auto& [k, n] : dist) w[std::to_string(k)] = n;
  m["counts"]["W"] = std::move(w);
}

fwc::ExtractionResult extract(const fwc::FollowGraph& g, const std::vector<fwc::Cascade>& cascades,
                              json& m) {
  auto res = fwc::extract_instances(g, cascades);
  m["counts"]["instances"] = res.instances.size();
  m["counts"]["dropped_foreign_parent"] = res.dropped_foreign_parent;
  m["counts"]["skipped_many_exposures"] = res.skipped_many_exposures;
  return res;
}

void cmd_extract(const Options& o, const CLI::App&, json& m) {
  const auto g = read_graph(o, m);
  const auto cascades = read_cascades(o, m);
  const auto res = extract(g, cascades, m);
  auto out = open_output(o.out);
  fwc::write_instances(res.instances, out);
  finish_output(out, o.out);
}

void cmd_featurize(const Options& o, const CLI::App&, json& m) {
  const auto g = read_graph(o, m);
  const auto cascades = read_cascades(o, m);
  std::vector<fwc::ChoiceInstance> instances;
  if (!o.instances.empty()) {
    std::ifstream in(o.instances);
    if (!in) throw fwc::IoError("cannot open " + o.instances);
    instances = fwc::read_instances(in, o.instances, cascades);
    m["counts"]["instances"] = instances.size();
  } else {
    instances = extract(g, cascades, m).instances;
  }
  const auto data = fwc::featurize_all(instances, g, cascades, o.tz_offset);
  auto out = open_output(o.out);
  fwc::write_features(data, out);
  finish_output(out, o.out);
}

void cmd_train(const Options& o, const CLI::App&, json& m) {
  const auto data = read_feature_file(o.features);
  const auto [model, report] = fwc::fit(data, fit_config(o));
  fwc::save_model(model, o.out);
  m["counts"]["instances"] = data.size();
  m["train"] = report_json(report);
  if (!report.converged) std::cerr << "warning: optimizer stopped before convergence\n";
}

void cmd_evaluate(const Options& o, const CLI::App&, json& m) {
  const auto model = fwc::load_model(o.model);
  const auto data = read_feature_file(o.features);
  const auto r = fwc::evaluate(model, data, o.threshold);
  auto out = open_output(o.out);
  write_eval(r, "Model", out);
  finish_output(out, o.out);
  m["evaluation"] = eval_json(r);
}

void cmd_ablate(const Options& o, const CLI::App&, json& m) {
  const auto train = read_feature_file(o.train);
  const auto test = read_feature_file(o.test);
  const auto ac = ablation_config(o);
  const auto rows = fwc::run_ablation(train, test, ac.fit.grouping, ac);
  m["counts"]["train"] = train.size();
  m["counts"]["test"] = test.size();
  emit_ablation(rows, o.out, m);
}

void cmd_pipeline(const Options& o, const CLI::App&, json& m) {
  const fs::path dir(o.out);
  fs::create_directories(dir);
  const auto path = [&](const char* name) { return (dir / name).string(); };

  const auto g = read_graph(o, m);
  const auto cascades = read_cascades(o, m);

  {
    const auto dist = fwc::exposure_distribution(g, cascades);
    auto out = open_output(path("exposure_stats.tsv"));
    fwc::write_exposure_distribution(dist, out);
    finish_output(out, path("exposure_stats.tsv"));
  }

  const auto res = extract(g, cascades, m);
  {
    auto out = open_output(path("instances.tsv"));
    fwc::write_instances(res.instances, out);
    finish_output(out, path("instances.tsv"));
  }

  const auto [train_inst, test_inst] = fwc::temporal_split(res.instances, *o.boundary);
  m["counts"]["train"] = train_inst.size();
  m["counts"]["test"] = test_inst.size();
  if (train_inst.empty() || test_inst.empty()) {
    throw ValidationFailure("temporal split left an empty side (train " +
                            std::to_string(train_inst.size()) + ", test " +
                            std::to_string(test_inst.size()) + "); move --boundary");
  }
  const auto train = fwc::featurize_all(train_inst, g, cascades, o.tz_offset);
  const auto test = fwc::featurize_all(test_inst, g, cascades, o.tz_offset);
  for (const auto& [name, data] : {std::pair{"train_features.tsv", &train},
                                   std::pair{"test_features.tsv", &test}}) {
    auto out = open_output(path(name));
    fwc::write_features(*data, out);
    finish_output(out, path(name));
  }

  const auto ac = ablation_config(o);
  const auto [model, report] = fwc::fit(train, ac.fit);
  fwc::save_model(model, path("model.json"));
  m["train"] = report_json(report);

  const auto r = fwc::evaluate(model, test, o.threshold);
  {
    auto out = open_output(path("evaluation.tsv"));
    write_eval(r, "Our Method", out);
    finish_output(out, path("evaluation.tsv"));
  }
  m["evaluation"] = eval_json(r);

  const auto rows = fwc::run_ablation(train, test, ac.fit.grouping, ac);
  emit_ablation(rows, path("ablation.tsv"), m);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Forwarding-choice prediction under multiple exposures"};
  app.require_subcommand(1);
  Options o;

  const auto add_edges = [&](CLI::App* s) {
    s->add_option("--edges", o.edges, "Follow graph edge list (TSV)")->required()->check(CLI::ExistingFile);
  };
  const auto add_cascades = [&](CLI::App* s) {
    s->add_option("--cascades", o.cascades, "Cascades (JSONL)")->required()->check(CLI::ExistingFile);
    s->add_flag("--skip-invalid", o.skip_invalid, "Continue when some cascades fail validation");
  };
  const auto add_out = [&](CLI::App* s, const char* what) {
    s->add_option("--out", o.out, what)->required();
  };
  const auto add_fit = [&](CLI::App* s) {
    s->add_option("--l2", o.l2, "L2 penalty on weights (intercept unpenalized)")->check(CLI::NonNegativeNumber);
    s->add_option("--tol", o.tol, "Convergence tolerance")->check(CLI::PositiveNumber);
    s->add_option("--max-iter", o.max_iter, "Maximum optimizer iterations");
    s->add_option("--grouping", o.grouping, "Feature grouping: table, prose, or a JSON file");
  };
  const auto add_synth = [&](CLI::App* s) {
    s->add_option("--config", o.config, "Synth parameter file (key = value)")->check(CLI::ExistingFile);
    s->add_option("--seed", o.seed, "Random seed");
  };
  const auto add_common = [&](CLI::App* s) {
    s->add_option("--threads", o.threads, "Worker cap")->check(CLI::PositiveNumber);
  };

  using Handler = std::function<void(const Options&, const CLI::App&, json&)>;
  std::vector<std::pair<CLI::App*, Handler>> commands;

  auto* sg = app.add_subcommand("synth-graph", "Generate a random follow graph");
  add_synth(sg);
  add_out(sg, "Edge list to write");
  sg->add_option("--n-users", o.n_users, "Number of users");
  sg->add_option("--graph-model", o.graph_model, "uniform or pa")
      ->check(CLI::IsMember({"uniform", "pa"}));
  sg->add_option("--edge-prob", o.edge_prob, "Uniform model edge probability");
  sg->add_option("--out-degree", o.out_degree, "Preferential attachment out-degree");
  commands.emplace_back(sg, cmd_synth_graph);

  auto* sc = app.add_subcommand("synth-cascades", "Simulate cascades on a follow graph");
  add_synth(sc);
  add_edges(sc);
  add_out(sc, "Cascade JSONL to write");
  sc->add_option("--n-cascades", o.n_cascades, "Number of cascades");
  sc->add_option("--forward-prob", o.forward_prob, "Forward probability per decision");
  sc->add_option("--tz-offset", o.tz_offset, "UTC offset in hours");
  commands.emplace_back(sc, cmd_synth_cascades);

  auto* si = app.add_subcommand("synth-instances", "Sample labeled feature vectors from the planted model");
  add_synth(si);
  add_out(si, "Feature TSV to write");
  si->add_option("--n", o.n, "Number of instances")->required()->check(CLI::PositiveNumber);
  commands.emplace_back(si, cmd_synth_instances);

  auto* es = app.add_subcommand("exposure-stats", "Write the W(k) exposure distribution");
  add_edges(es);
  add_cascades(es);
  add_out(es, "TSV to write (k, W(k))");
  commands.emplace_back(es, cmd_exposure_stats);

  auto* ex = app.add_subcommand("extract", "Extract two-exposure choice instances");
  add_edges(ex);
  add_cascades(ex);
  add_out(ex, "Instance TSV to write");
  commands.emplace_back(ex, cmd_extract);

  auto* fe = app.add_subcommand("featurize", "Compute the 16 features per instance");
  add_edges(fe);
  add_cascades(fe);
  add_out(fe, "Feature TSV to write");
  fe->add_option("--instances", o.instances, "Instance TSV (default: extract from cascades)")
      ->check(CLI::ExistingFile);
  fe->add_option("--tz-offset", o.tz_offset, "UTC offset in hours for the active-hours feature");
  commands.emplace_back(fe, cmd_featurize);

  auto* tr = app.add_subcommand("train", "Fit the logistic choice model");
  tr->add_option("--features", o.features, "Training feature TSV")->required()->check(CLI::ExistingFile);
  add_out(tr, "Model JSON to write");
  add_fit(tr);
  commands.emplace_back(tr, cmd_train);

  auto* ev = app.add_subcommand("evaluate", "Precision/recall/F1 of a model on a feature file");
  ev->add_option("--model", o.model, "Model JSON")->required()->check(CLI::ExistingFile);
  ev->add_option("--features", o.features, "Test feature TSV")->required()->check(CLI::ExistingFile);
  ev->add_option("--threshold", o.threshold, "Decision threshold");
  add_out(ev, "Report TSV to write");
  commands.emplace_back(ev, cmd_evaluate);

  auto* ab = app.add_subcommand("ablate", "Leave-one-group-out ablation");
  ab->add_option("--train", o.train, "Training feature TSV")->required()->check(CLI::ExistingFile);
  ab->add_option("--test", o.test, "Test feature TSV")->required()->check(CLI::ExistingFile);
  ab->add_option("--threshold", o.threshold, "Decision threshold");
  ab->add_option("--seed", o.seed, "Seed for the coin-flip baseline");
  add_out(ab, "Report TSV to write");
  add_fit(ab);
  add_common(ab);
  commands.emplace_back(ab, cmd_ablate);

  auto* pl = app.add_subcommand("pipeline", "extract, featurize, split, train, evaluate, ablate");
  add_edges(pl);
  add_cascades(pl);
  add_out(pl, "Output directory");
  pl->add_option("--boundary", o.boundary, "Train/test boundary on cascade root time (epoch seconds)")
      ->required();
  pl->add_option("--tz-offset", o.tz_offset, "UTC offset in hours");
  pl->add_option("--threshold", o.threshold, "Decision threshold");
  pl->add_option("--seed", o.seed, "Seed for the coin-flip baseline");
  add_fit(pl);
  add_common(pl);
  commands.emplace_back(pl, cmd_pipeline);

  if (argc <= 1) {
    std::cerr << app.help();
    return 2;
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  for (const auto& [sub, handler] : commands) {
    if (!sub->parsed()) continue;
    json manifest;
    manifest["subcommand"] = sub->get_name();
    json flags = json::object();
    for (const CLI::Option* opt : sub->get_options()) {
      if (opt->count() == 0 || opt->get_name() == "--help") continue;
      flags[opt->get_name()] = opt->as<std::string>();
    }
    manifest["flags"] = std::move(flags);
    manifest["seed"] = o.seed;
    manifest["counts"] = json::object();
    const auto start = std::chrono::steady_clock::now();
    int code = 0;
    try {
      if (!o.grouping.empty()) resolve_grouping(o.grouping);
      handler(o, *sub, manifest);
    } catch (const UsageError& e) {
      std::cerr << "error: " << e.what() << '\n';
      return 2;
    } catch (const fwc::ConfigError& e) {
      std::cerr << "error: " << e.what() << '\n';
      return 2;
    } catch (const fwc::Error& e) {
      std::cerr << "error: " << e.what() << '\n';
      manifest["error"] = e.what();
      code = 1;
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << '\n';
      manifest["error"] = e.what();
      code = 1;
    }
    manifest["status"] = code == 0 ? "ok" : "failed";
    manifest["wall_time_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const std::string text = manifest.dump(2);
    std::cout << text << '\n';
    if (sub->get_name() == "pipeline" && code == 0) {
      std::ofstream mf(fs::path(o.out) / "manifest.json");
      mf << text << '\n';
    }
    return code;
  }
  return 2;
}
