// Command line driver: split, train, eval, reproduce.
//
// Configuration comes from a JSON file, overridable per flag; flags beat the
// file, the file beats built-in defaults. The resolved configuration is
// embedded into every CSV this tool writes.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "cvar/checkpoint.hpp"
#include "cvar/dataset.hpp"
#include "cvar/errors.hpp"
#include "cvar/experiment.hpp"
#include "cvar/schema.hpp"
#include "cvar/split.hpp"

using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct CliConfig {
  // dataset
  std::string dataset_kind = "synthetic";
  std::string dataset_path;
  std::string cache_path;
  int label_threshold = 4;
  bool use_title_tokens = true;
  cvar::SyntheticConfig synthetic;

  // split
  std::int64_t split_threshold = 200;
  std::string split_policy = "equal_quarters";
  std::size_t prefix_size = 20;

  // model
  std::string backbone = "deepfm";  // or "all"
  std::string variant = "cvar";     // or "all"
  std::size_t embedding_dim = 16;
  std::size_t hidden_units = 16;
  std::size_t hidden_layers = 2;
  std::size_t latent_dim = 16;
  double alpha = 1.0;
  double beta = 1.0;
  double init_log_var = -4.0;

  // train
  double learning_rate = 0.001;
  std::size_t batch_size = 2048;
  std::size_t pretrain_epochs = 1;
  std::size_t warm_epochs = 1;
  std::size_t warm_steps_per_batch = 1;
  std::string warm_training = "both";  // or "cvar-only"

  // eval
  std::vector<double> x_freq{1.0};
  std::string eval_mode = "sample";

  std::vector<std::uint64_t> seeds{1, 2, 3};
  std::string out = "runs";
  std::size_t jobs = 1;
  bool dry_run = false;
};

template <typename T>
void read_if(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

CliConfig load_config_file(const std::string& path) {
  CliConfig cfg;
  if (path.empty()) return cfg;
  std::ifstream is(path);
  if (!is) throw cvar::IoError("cannot open config file: " + path);
  json j;
  try {
    is >> j;
  } catch (const json::exception& e) {
    throw cvar::ArgumentError("config file " + path + " is not valid JSON: " + e.what());
  }

  if (j.contains("dataset")) {
    const json& d = j["dataset"];
    read_if(d, "kind", cfg.dataset_kind);
    read_if(d, "path", cfg.dataset_path);
    read_if(d, "cache", cfg.cache_path);
    read_if(d, "label_threshold", cfg.label_threshold);
    read_if(d, "use_title_tokens", cfg.use_title_tokens);
    if (d.contains("synthetic")) {
      const json& s = d["synthetic"];
      read_if(s, "items", cfg.synthetic.items);
      read_if(s, "users", cfg.synthetic.users);
      read_if(s, "interactions", cfg.synthetic.interactions);
      read_if(s, "zipf_exponent", cfg.synthetic.zipf_exponent);
      read_if(s, "seed", cfg.synthetic.seed);
    }
  }
  if (j.contains("split")) {
    const json& s = j["split"];
    read_if(s, "threshold", cfg.split_threshold);
    read_if(s, "policy", cfg.split_policy);
    read_if(s, "prefix_size", cfg.prefix_size);
  }
  if (j.contains("model")) {
    const json& m = j["model"];
    read_if(m, "backbone", cfg.backbone);
    read_if(m, "variant", cfg.variant);
    read_if(m, "embedding_dim", cfg.embedding_dim);
    read_if(m, "hidden_units", cfg.hidden_units);
    read_if(m, "hidden_layers", cfg.hidden_layers);
    read_if(m, "latent_dim", cfg.latent_dim);
    read_if(m, "alpha", cfg.alpha);
    read_if(m, "beta", cfg.beta);
    read_if(m, "init_log_var", cfg.init_log_var);
  }
  if (j.contains("train")) {
    const json& t = j["train"];
    read_if(t, "learning_rate", cfg.learning_rate);
    read_if(t, "batch_size", cfg.batch_size);
    read_if(t, "pretrain_epochs", cfg.pretrain_epochs);
    read_if(t, "warm_epochs", cfg.warm_epochs);
    read_if(t, "warm_steps_per_batch", cfg.warm_steps_per_batch);
    read_if(t, "warm_training", cfg.warm_training);
  }
  if (j.contains("eval")) {
    const json& e = j["eval"];
    read_if(e, "x_freq", cfg.x_freq);
    read_if(e, "mode", cfg.eval_mode);
  }
  read_if(j, "seeds", cfg.seeds);
  read_if(j, "out", cfg.out);
  read_if(j, "jobs", cfg.jobs);
  return cfg;
}

json resolved_json(const CliConfig& c) {
  json j;
  j["dataset"] = {{"kind", c.dataset_kind},
                  {"path", c.dataset_path},
                  {"cache", c.cache_path},
                  {"label_threshold", c.label_threshold},
                  {"use_title_tokens", c.use_title_tokens},
                  {"synthetic",
                   {{"items", c.synthetic.items},
                    {"users", c.synthetic.users},
                    {"interactions", c.synthetic.interactions},
                    {"zipf_exponent", c.synthetic.zipf_exponent},
                    {"seed", c.synthetic.seed}}}};
  j["split"] = {{"threshold", c.split_threshold},
                {"policy", c.split_policy},
                {"prefix_size", c.prefix_size}};
  j["model"] = {{"backbone", c.backbone},       {"variant", c.variant},
                {"embedding_dim", c.embedding_dim}, {"hidden_units", c.hidden_units},
                {"hidden_layers", c.hidden_layers}, {"latent_dim", c.latent_dim},
                {"alpha", c.alpha},             {"beta", c.beta},
                {"init_log_var", c.init_log_var}};
  j["train"] = {{"learning_rate", c.learning_rate},
                {"batch_size", c.batch_size},
                {"pretrain_epochs", c.pretrain_epochs},
                {"warm_epochs", c.warm_epochs},
                {"warm_steps_per_batch", c.warm_steps_per_batch},
                {"warm_training", c.warm_training}};
  j["eval"] = {{"x_freq", c.x_freq}, {"mode", c.eval_mode}};
  j["seeds"] = c.seeds;
  j["out"] = c.out;
  j["jobs"] = c.jobs;
  return j;
}

void validate(const CliConfig& c) {
  using cvar::ArgumentError;
  if (c.dataset_kind != "synthetic" && c.dataset_kind != "movielens" &&
      c.dataset_kind != "taobao") {
    throw ArgumentError("dataset.kind must be synthetic, movielens or taobao");
  }
  if ((c.dataset_kind == "movielens" || c.dataset_kind == "taobao") &&
      c.dataset_path.empty()) {
    throw ArgumentError("dataset.path is required for " + c.dataset_kind);
  }
  if (c.split_threshold <= 0) throw ArgumentError("split.threshold must be positive");
  cvar::policy_from_string(c.split_policy);
  if (c.backbone != "all") cvar::backbone_kind_from_string(c.backbone);
  if (c.variant != "all") cvar::variant_from_string(c.variant);
  if (c.embedding_dim == 0 || c.hidden_units == 0 || c.latent_dim == 0) {
    throw ArgumentError("model dimensions must be positive");
  }
  if (c.alpha < 0 || c.beta < 0) throw ArgumentError("alpha and beta must be >= 0");
  if (c.learning_rate <= 0) throw ArgumentError("train.learning_rate must be positive");
  if (c.batch_size == 0) throw ArgumentError("train.batch_size must be positive");
  if (c.pretrain_epochs == 0 || c.warm_epochs == 0) {
    throw ArgumentError("epoch counts must be positive");
  }
  if (c.warm_steps_per_batch == 0) {
    throw ArgumentError("train.warm_steps_per_batch must be positive");
  }
  if (c.warm_training != "both" && c.warm_training != "cvar-only") {
    throw ArgumentError("train.warm_training must be both or cvar-only");
  }
  cvar::warm_mode_from_string(c.eval_mode);
  if (c.x_freq.empty()) throw ArgumentError("eval.x_freq needs at least one value");
  for (double x : c.x_freq) {
    if (x < 0.0 || x > 1.0) {
      throw ArgumentError("eval.x_freq values must lie in [0, 1]");
    }
  }
  if (c.seeds.empty()) throw ArgumentError("seeds must not be empty");
}

std::string dataset_dir(const CliConfig& c) {
  fs::path p(c.dataset_path);
  if (p.is_relative()) {
    if (const char* root = std::getenv("CVAR_DATA_ROOT")) {
      return (fs::path(root) / p).string();
    }
  }
  return p.string();
}

cvar::InteractionTable load_dataset(const CliConfig& c) {
  if (!c.cache_path.empty() && fs::exists(c.cache_path)) {
    std::cerr << "loading table cache " << c.cache_path << "\n";
    return cvar::load_table_cache(c.cache_path);
  }
  cvar::InteractionTable table;
  if (c.dataset_kind == "synthetic") {
    table = cvar::make_synthetic(c.synthetic);
  } else if (c.dataset_kind == "movielens") {
    cvar::MovielensOptions opts;
    opts.label_threshold = c.label_threshold;
    opts.use_title_tokens = c.use_title_tokens;
    table = cvar::load_movielens(dataset_dir(c), opts);
  } else {
    table = cvar::load_taobao(dataset_dir(c));
  }
  if (!c.cache_path.empty()) {
    cvar::save_table_cache(c.cache_path, table);
    std::cerr << "wrote table cache " << c.cache_path << "\n";
  }
  return table;
}

std::string manifest_path(const CliConfig& c) {
  return (fs::path(c.out) / "split_manifest.tsv").string();
}

cvar::SplitSpec split_spec(const CliConfig& c) {
  cvar::SplitSpec spec;
  spec.old_threshold = c.split_threshold;
  spec.policy = cvar::policy_from_string(c.split_policy);
  spec.prefix_size = c.prefix_size;
  return spec;
}

cvar::FeatureSchema build_training_schema(const cvar::InteractionTable& table,
                                          const cvar::DatasetSplit& split,
                                          const CliConfig& c) {
  std::vector<std::size_t> train_rows;
  for (cvar::Group g : {cvar::Group::Old, cvar::Group::WarmA, cvar::Group::WarmB,
                        cvar::Group::WarmC}) {
    auto rows = split.rows(g);
    train_rows.insert(train_rows.end(), rows.begin(), rows.end());
  }
  return cvar::build_schema(table, train_rows, {.embedding_dim = c.embedding_dim});
}

std::vector<cvar::BackboneKind> backbone_grid(const CliConfig& c) {
  if (c.backbone == "all") return cvar::all_backbone_kinds();
  return {cvar::backbone_kind_from_string(c.backbone)};
}

std::vector<cvar::Variant> variant_grid(const CliConfig& c) {
  if (c.variant == "all") {
    return {cvar::Variant::BackboneOnly, cvar::Variant::WarmInitOnly,
            cvar::Variant::Warm};
  }
  return {cvar::variant_from_string(c.variant)};
}

cvar::RunSpec base_run_spec(const CliConfig& c) {
  cvar::RunSpec spec;
  spec.train.learning_rate = c.learning_rate;
  spec.train.batch_size = c.batch_size;
  spec.train.pretrain_epochs = c.pretrain_epochs;
  spec.train.warm_epochs = c.warm_epochs;
  spec.train.warm_steps_per_batch = c.warm_steps_per_batch;
  spec.train.latent_dim = c.latent_dim;
  spec.train.alpha = c.alpha;
  spec.train.beta = c.beta;
  spec.train.hidden_units = c.hidden_units;
  spec.train.hidden_layers = c.hidden_layers;
  spec.train.init_log_var = c.init_log_var;
  spec.train.warm_training = c.warm_training == "both"
                                 ? cvar::WarmTraining::BackboneAndWarm
                                 : cvar::WarmTraining::WarmOnly;
  spec.train.eval_mode = cvar::warm_mode_from_string(c.eval_mode);
  spec.train.eval_freq_override = c.x_freq.front();
  spec.extra_eval_overrides.assign(c.x_freq.begin() + 1, c.x_freq.end());
  return spec;
}

std::vector<cvar::RunSpec> grid_specs(const CliConfig& c) {
  std::vector<cvar::RunSpec> specs;
  for (cvar::BackboneKind kind : backbone_grid(c)) {
    for (cvar::Variant variant : variant_grid(c)) {
      for (std::uint64_t seed : c.seeds) {
        cvar::RunSpec spec = base_run_spec(c);
        spec.kind = kind;
        spec.variant = variant;
        spec.seed = seed;
        specs.push_back(spec);
      }
    }
  }
  return specs;
}

void print_summary(const std::vector<cvar::MetricReport>& reports) {
  const auto cells = cvar::aggregate_reports(reports);
  const std::vector<std::string> phases{"cold", "warm-a", "warm-b", "warm-c"};
  std::printf("%-10s %-16s %-6s  %8s  %8s  %8s  %8s\n", "backbone", "variant",
              "x_freq", "cold", "warm-a", "warm-b", "warm-c");
  // Collect distinct (kind, variant, x_freq) rows in report order.
  std::vector<std::tuple<cvar::BackboneKind, cvar::Variant, double>> rows;
  for (const auto& c : cells) {
    auto key = std::make_tuple(c.kind, c.variant, c.x_freq);
    bool seen = false;
    for (const auto& r : rows) seen = seen || r == key;
    if (!seen) rows.push_back(key);
  }
  for (const auto& [kind, variant, x_freq] : rows) {
    std::printf("%-10s %-16s %-6.2f", cvar::to_string(kind).c_str(),
                cvar::to_string(variant).c_str(), x_freq);
    for (const std::string& phase : phases) {
      bool found = false;
      for (const auto& c : cells) {
        if (c.kind == kind && c.variant == variant && c.x_freq == x_freq &&
            c.phase == phase) {
          std::printf("  %8.4f", c.mean_auc);
          found = true;
        }
      }
      if (!found) std::printf("  %8s", "-");
    }
    std::printf("\n");
  }
}

int cmd_split(const CliConfig& cfg) {
  cvar::InteractionTable table = load_dataset(cfg);
  cvar::DatasetSplit split = cvar::split_dataset(table, split_spec(cfg));
  fs::create_directories(cfg.out);
  cvar::write_split_manifest(manifest_path(cfg), table, split);

  std::printf("dataset: %zu interactions over %zu items\n", table.size(),
              table.item_count);
  std::printf("old items: %zu (%zu instances)\n", split.old_item_count(),
              split.old_rows.size());
  std::printf("new items: %zu (warm-a %zu, warm-b %zu, warm-c %zu, test %zu)\n",
              split.new_item_count(), split.warm_a.size(), split.warm_b.size(),
              split.warm_c.size(), split.test.size());
  std::printf("new:old item ratio %.2f:%.2f\n", split.new_item_fraction() * 10.0,
              (1.0 - split.new_item_fraction()) * 10.0);
  std::printf("manifest written to %s\n", manifest_path(cfg).c_str());
  return 0;
}

int cmd_train(const CliConfig& cfg) {
  cvar::InteractionTable table = load_dataset(cfg);
  if (!fs::exists(manifest_path(cfg))) {
    std::cerr << "no split manifest at " << manifest_path(cfg)
              << "; run `cvar split` with this config first\n";
    return 2;
  }
  cvar::DatasetSplit split = cvar::read_split_manifest(manifest_path(cfg), table);
  cvar::FeatureSchema schema = build_training_schema(table, split, cfg);
  std::vector<cvar::RunSpec> specs = grid_specs(cfg);

  if (cfg.dry_run) {
    std::printf("dry run: %zu cells\n", specs.size());
    for (const auto& spec : specs) {
      std::printf("  %s %s seed=%llu\n", cvar::to_string(spec.kind).c_str(),
                  cvar::to_string(spec.variant).c_str(),
                  static_cast<unsigned long long>(spec.seed));
    }
    std::printf("phases: pretrain(old) -> eval(cold) -> warm-a -> warm-b -> warm-c"
                ", eval after each\n");
    return 0;
  }

  cvar::ExperimentOptions opts;
  opts.jobs = cfg.jobs;
  opts.checkpoint_dir = (fs::path(cfg.out) / "checkpoints").string();
  opts.on_report = [](const cvar::MetricReport& r) {
    std::fprintf(stderr, "[%s %s seed=%llu] %s x_freq=%.2f auc=%.4f f1=%.4f\n",
                 cvar::to_string(r.kind).c_str(), cvar::to_string(r.variant).c_str(),
                 static_cast<unsigned long long>(r.seed), r.phase.c_str(), r.x_freq,
                 r.auc, r.f1);
  };
  auto reports = cvar::run_experiment(table, split, schema, specs, opts);

  fs::create_directories(cfg.out);
  const std::string csv = (fs::path(cfg.out) / "report.csv").string();
  cvar::write_report_csv(csv, reports, resolved_json(cfg).dump());
  std::printf("report written to %s\n", csv.c_str());
  print_summary(reports);
  return 0;
}

int cmd_eval(const CliConfig& cfg, const std::string& ckpt_path,
             std::vector<double> overrides) {
  cvar::InteractionTable table = load_dataset(cfg);
  if (!fs::exists(manifest_path(cfg))) {
    std::cerr << "no split manifest at " << manifest_path(cfg)
              << "; run `cvar split` with this config first\n";
    return 2;
  }
  cvar::DatasetSplit split = cvar::read_split_manifest(manifest_path(cfg), table);
  cvar::FeatureSchema schema = build_training_schema(table, split, cfg);

  auto meta = cvar::peek_checkpoint_meta(ckpt_path);
  cvar::RunSpec spec = base_run_spec(cfg);
  spec.kind = cvar::backbone_kind_from_string(meta.at("kind"));
  spec.variant = cvar::variant_from_string(meta.at("variant"));
  spec.seed = std::stoull(meta.at("seed"));

  cvar::ExperimentRun run(table, split, schema, spec);
  const std::size_t next_phase = run.load_state(ckpt_path);
  const auto& plan = cvar::ExperimentRun::phase_plan();
  const std::size_t phase_idx = next_phase == 0 ? 0 : next_phase - 1;
  const std::string label = plan[std::min(phase_idx, plan.size() - 1)].second;

  if (overrides.empty()) overrides = cfg.x_freq;
  std::vector<cvar::MetricReport> reports;
  for (std::size_t s = 0; s < overrides.size(); ++s) {
    reports.push_back(run.evaluate_phase(label, phase_idx, s, overrides[s]));
  }
  for (const auto& r : reports) {
    std::printf("%s\n", cvar::report_csv_row(r).c_str());
  }
  print_summary(reports);
  return 0;
}

int cmd_reproduce(const CliConfig& base, const std::string& what) {
  CliConfig cfg = base;
  std::vector<cvar::RunSpec> specs;
  std::string out_name;

  if (what == "table1") {
    // Backbone vs init-only vs full warm-up, DeepFM and Wide&Deep.
    out_name = "table1";
    for (const char* kind : {"deepfm", "widedeep"}) {
      for (const char* variant : {"backbone", "cvar-init-only", "cvar"}) {
        for (std::uint64_t seed : cfg.seeds) {
          cvar::RunSpec spec = base_run_spec(cfg);
          spec.kind = cvar::backbone_kind_from_string(kind);
          spec.variant = cvar::variant_from_string(variant);
          spec.seed = seed;
          specs.push_back(spec);
        }
      }
    }
  } else if (what == "table3") {
    // Frequency-override sweep at inference, Wide&Deep + warm-up.
    out_name = "table3";
    for (std::uint64_t seed : cfg.seeds) {
      cvar::RunSpec spec = base_run_spec(cfg);
      spec.kind = cvar::BackboneKind::WideDeep;
      spec.variant = cvar::Variant::Warm;
      spec.seed = seed;
      spec.train.eval_freq_override = 0.01;
      spec.extra_eval_overrides = {0.1, 0.25, 0.5, 1.0};
      specs.push_back(spec);
    }
  } else if (what == "figure2") {
    // Warm-up vs backbone across all six backbones.
    out_name = "figure2";
    for (cvar::BackboneKind kind : cvar::all_backbone_kinds()) {
      for (cvar::Variant variant : {cvar::Variant::BackboneOnly, cvar::Variant::Warm}) {
        for (std::uint64_t seed : cfg.seeds) {
          cvar::RunSpec spec = base_run_spec(cfg);
          spec.kind = kind;
          spec.variant = variant;
          spec.seed = seed;
          specs.push_back(spec);
        }
      }
    }
  } else {
    std::cerr << "unknown reproduction target: " << what
              << " (expected table1, table3 or figure2)\n";
    return 2;
  }

  cvar::InteractionTable table = load_dataset(cfg);
  if (!fs::exists(manifest_path(cfg))) {
    std::cerr << "no split manifest at " << manifest_path(cfg)
              << "; run `cvar split` with this config first\n";
    return 2;
  }
  cvar::DatasetSplit split = cvar::read_split_manifest(manifest_path(cfg), table);
  cvar::FeatureSchema schema = build_training_schema(table, split, cfg);

  if (cfg.dry_run) {
    std::printf("dry run: %s needs %zu cells\n", out_name.c_str(), specs.size());
    return 0;
  }

  cvar::ExperimentOptions opts;
  opts.jobs = cfg.jobs;
  opts.checkpoint_dir = (fs::path(cfg.out) / ("checkpoints_" + out_name)).string();
  opts.on_report = [](const cvar::MetricReport& r) {
    std::fprintf(stderr, "[%s %s seed=%llu] %s x_freq=%.2f auc=%.4f\n",
                 cvar::to_string(r.kind).c_str(), cvar::to_string(r.variant).c_str(),
                 static_cast<unsigned long long>(r.seed), r.phase.c_str(), r.x_freq,
                 r.auc);
  };
  auto reports = cvar::run_experiment(table, split, schema, specs, opts);

  fs::create_directories(cfg.out);
  const std::string csv = (fs::path(cfg.out) / (out_name + ".csv")).string();
  cvar::write_report_csv(csv, reports, resolved_json(cfg).dump());

  // Plot-ready long format: one line per (cell, phase) mean.
  const std::string long_csv = (fs::path(cfg.out) / (out_name + "_long.csv")).string();
  {
    std::ofstream os(long_csv, std::ios::trunc);
    os << "# config: " << resolved_json(cfg).dump() << "\n";
    os << "backbone,variant,phase,x_freq,mean_auc,mean_f1,runs\n";
    for (const auto& c : cvar::aggregate_reports(reports)) {
      os << cvar::to_string(c.kind) << "," << cvar::to_string(c.variant) << ","
         << c.phase << "," << c.x_freq << "," << c.mean_auc << "," << c.mean_f1
         << "," << c.runs << "\n";
    }
  }
  std::printf("wrote %s and %s\n", csv.c_str(), long_csv.c_str());
  print_summary(reports);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"item cold-start warm-up experiments"};
  app.require_subcommand(1);

  std::string config_path;
  CliConfig flags;  // flag values land here after file values
  bool flag_dry = false;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "JSON config file");
    cmd->add_option("--out", flags.out, "output directory");
    cmd->add_option("--jobs", flags.jobs, "parallel grid cells");
    cmd->add_option("--seed", flags.seeds, "seed list override");
    cmd->add_option("--backbone", flags.backbone, "backbone kind or 'all'");
    cmd->add_option("--variant", flags.variant, "variant or 'all'");
    cmd->add_option("--x-freq", flags.x_freq, "frequency overrides for evaluation");
    cmd->add_flag("--dry-run", flag_dry, "print the plan and exit");
  };

  CLI::App* split_cmd = app.add_subcommand("split", "build the dataset split manifest");
  add_common(split_cmd);
  CLI::App* train_cmd = app.add_subcommand("train", "train the configured grid");
  add_common(train_cmd);
  CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate a phase checkpoint");
  add_common(eval_cmd);
  std::string ckpt_path;
  eval_cmd->add_option("--checkpoint", ckpt_path, "phase checkpoint path")->required();
  CLI::App* repro_cmd =
      app.add_subcommand("reproduce", "run a preset experiment grid");
  add_common(repro_cmd);
  std::string target;
  repro_cmd->add_option("target", target, "table1, table3 or figure2")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    CliConfig cfg = load_config_file(config_path);
    // Flags beat the file.
    for (CLI::App* cmd : {split_cmd, train_cmd, eval_cmd, repro_cmd}) {
      if (!cmd->parsed()) continue;
      if (cmd->count("--out")) cfg.out = flags.out;
      if (cmd->count("--jobs")) cfg.jobs = flags.jobs;
      if (cmd->count("--seed")) cfg.seeds = flags.seeds;
      if (cmd->count("--backbone")) cfg.backbone = flags.backbone;
      if (cmd->count("--variant")) cfg.variant = flags.variant;
      if (cmd->count("--x-freq")) cfg.x_freq = flags.x_freq;
      if (cmd->count("--dry-run")) cfg.dry_run = flag_dry;
    }
    validate(cfg);

    if (split_cmd->parsed()) return cmd_split(cfg);
    if (train_cmd->parsed()) return cmd_train(cfg);
    if (eval_cmd->parsed()) return cmd_eval(cfg, ckpt_path, {});
    if (repro_cmd->parsed()) return cmd_reproduce(cfg, target);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
