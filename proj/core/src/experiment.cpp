#include "cvar/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include "cvar/checkpoint.hpp"
#include "cvar/errors.hpp"
#include "cvar/metrics.hpp"

namespace cvar {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

double mean_bce(std::span<const double> scores, std::span<const double> labels) {
  constexpr double kEps = 1e-12;
  double total = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const double p = std::min(std::max(scores[i], kEps), 1.0 - kEps);
    total += -labels[i] * std::log(p) - (1.0 - labels[i]) * std::log(1.0 - p);
  }
  return total / static_cast<double>(scores.size());
}

}  // namespace

Variant variant_from_string(const std::string& s) {
  if (s == "backbone") return Variant::BackboneOnly;
  if (s == "cvar") return Variant::Warm;
  if (s == "cvar-init-only") return Variant::WarmInitOnly;
  throw ArgumentError("unknown variant: " + s +
                      " (expected backbone, cvar, cvar-init-only)");
}

std::string to_string(Variant v) {
  switch (v) {
    case Variant::BackboneOnly: return "backbone";
    case Variant::Warm: return "cvar";
    case Variant::WarmInitOnly: return "cvar-init-only";
  }
  return "?";
}

const std::vector<std::pair<Group, std::string>>& ExperimentRun::phase_plan() {
  static const std::vector<std::pair<Group, std::string>> plan = {
      {Group::Old, "cold"},
      {Group::WarmA, "warm-a"},
      {Group::WarmB, "warm-b"},
      {Group::WarmC, "warm-c"},
  };
  return plan;
}

ExperimentRun::ExperimentRun(const InteractionTable& table,
                             const DatasetSplit& split,
                             const FeatureSchema& schema, const RunSpec& spec)
    : table_(table),
      split_(split),
      schema_(schema),
      spec_(spec),
      opt_backbone_({.learning_rate = spec.train.learning_rate}),
      opt_tables_({.learning_rate = spec.train.learning_rate}),
      opt_warm_({.learning_rate = spec.train.learning_rate}),
      freq_(table.item_count, FrequencyTable::max_item_count(table)),
      noise_rng_(Rng::derive(spec.seed, 0xC0FFEE)) {
  Rng init_rng(Rng::derive(spec_.seed, 0x7AB1E5));
  init_embedding_tables(tables_, schema_, init_rng);

  BackboneConfig bcfg;
  bcfg.embedding_dim = schema_.embedding_dim;
  bcfg.cat_field_count = schema_.cat_fields.size();
  bcfg.cont_field_count = schema_.cont_fields.size();
  bcfg.hidden_units = spec_.train.hidden_units;
  bcfg.hidden_layers = spec_.train.hidden_layers;
  bcfg.seed = Rng::derive(spec_.seed, 0xB0DE1);
  backbone_ = make_backbone(spec_.kind, bcfg);

  WarmupConfig wcfg;
  wcfg.item_dim = schema_.embedding_dim;
  wcfg.side_width = schema_.side_width();
  wcfg.latent_dim = spec_.train.latent_dim;
  wcfg.alpha = spec_.train.alpha;
  wcfg.beta = spec_.train.beta;
  wcfg.hidden_units = spec_.train.hidden_units;
  wcfg.hidden_layers = spec_.train.hidden_layers;
  wcfg.init_log_var = spec_.train.init_log_var;
  wcfg.seed = Rng::derive(spec_.seed, 0x3A3A);
  warm_ = std::make_unique<WarmupModel>(wcfg);
}

bool ExperimentRun::trains_warm(Group g) const {
  switch (spec_.variant) {
    case Variant::BackboneOnly: return false;
    case Variant::Warm: return true;
    case Variant::WarmInitOnly: return g == Group::Old;
  }
  return false;
}

bool ExperimentRun::trains_backbone(Group g) const {
  if (g == Group::Old) return true;
  if (spec_.variant == Variant::Warm &&
      spec_.train.warm_training == WarmTraining::WarmOnly) {
    return false;
  }
  return true;
}

void ExperimentRun::train_group(Group g, std::size_t phase_idx) {
  const auto group_rows = split_.rows(g);
  freq_.add_rows(table_, group_rows);
  noise_rng_ = Rng(Rng::derive(spec_.seed, 0xC0FFEE + phase_idx));

  std::vector<std::size_t> rows(group_rows.begin(), group_rows.end());
  Rng shuffle_rng(Rng::derive(spec_.seed, 0x5FFE + phase_idx));

  const std::size_t epochs =
      g == Group::Old ? spec_.train.pretrain_epochs : spec_.train.warm_epochs;
  const std::size_t batch_size = spec_.train.batch_size;

  for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
    shuffle_rng.shuffle(rows);
    for (std::size_t at = 0; at < rows.size(); at += batch_size) {
      const std::size_t len = std::min(batch_size, rows.size() - at);
      std::span<const std::size_t> chunk(rows.data() + at, len);
      SampleBatch batch = encode_batch(table_, chunk, schema_, freq_);
      Tensor labels({batch.size}, batch.labels);

      if (trains_backbone(g)) {
        EmbeddingBundle bundle = embed(batch, tables_, schema_);
        Tensor loss = bce_loss(backbone_->forward(bundle.item, bundle.features),
                               labels);
        loss.backward();
        opt_backbone_.step(backbone_->params());
        Adam::SparseRows sparse(bundle.touched_rows.begin(),
                                bundle.touched_rows.end());
        opt_tables_.step(tables_, &sparse);
      }
      if (after_backbone_step) after_backbone_step(global_step_);

      if (trains_warm(g)) {
        // Fresh lookups so the generator sees the just-updated item vectors.
        EmbeddingBundle bundle = embed(batch, tables_, schema_);
        Tensor freq_t({batch.size, 1}, batch.freq);
        for (std::size_t w = 0; w < spec_.train.warm_steps_per_batch; ++w) {
          GradFreezeGuard guard({&backbone_->params(), &tables_});
          WarmLossBreakdown wl =
              warm_loss(*warm_, *backbone_, bundle.item, bundle.side_info,
                        bundle.features, freq_t, labels, noise_rng_);
          wl.total.backward();
          opt_warm_.step(warm_->params());
          if (after_warm_step) after_warm_step(global_step_);
        }
      } else if (after_warm_step) {
        after_warm_step(global_step_);
      }
      ++global_step_;
    }
  }
}

void ExperimentRun::apply_warm_initialization() {
  // One representative row per new item carries its side information.
  std::vector<std::size_t> representative(table_.item_count,
                                          std::numeric_limits<std::size_t>::max());
  for (std::size_t r = 0; r < table_.size(); ++r) {
    auto& slot = representative[static_cast<std::size_t>(table_.item_ids[r])];
    if (slot == std::numeric_limits<std::size_t>::max()) slot = r;
  }
  std::vector<std::size_t> rows;
  std::vector<std::size_t> items;
  for (std::size_t item = 0; item < table_.item_count; ++item) {
    if (!split_.item_is_new[item]) continue;
    if (representative[item] == std::numeric_limits<std::size_t>::max()) continue;
    rows.push_back(representative[item]);
    items.push_back(item);
  }
  if (rows.empty()) return;

  Rng gen_rng(Rng::derive(spec_.seed, 0x1217));
  Tensor& item_table = tables_.get(item_table_name());
  auto table_values = item_table.values_mut();
  const std::size_t d = schema_.embedding_dim;
  const std::size_t batch_size = spec_.train.batch_size;

  for (std::size_t at = 0; at < rows.size(); at += batch_size) {
    const std::size_t len = std::min(batch_size, rows.size() - at);
    std::span<const std::size_t> chunk(rows.data() + at, len);
    SampleBatch batch = encode_batch(table_, chunk, schema_, freq_);
    GradFreezeGuard guard({&tables_});
    EmbeddingBundle bundle = embed(batch, tables_, schema_);
    Tensor generated = warm_->generate(bundle.side_info,
                                       spec_.train.eval_freq_override,
                                       spec_.train.eval_mode, gen_rng);
    const auto gv = generated.values();
    for (std::size_t i = 0; i < len; ++i) {
      const std::size_t item = items[at + i];
      for (std::size_t c = 0; c < d; ++c) {
        table_values[item * d + c] = gv[i * d + c];
      }
    }
  }
}

MetricReport ExperimentRun::evaluate_with_provider(const std::string& label,
                                                   const ItemVecProvider& provider,
                                                   double x_freq_override) {
  const auto test_rows = split_.rows(Group::Test);
  std::vector<double> scores, labels;
  scores.reserve(test_rows.size());
  labels.reserve(test_rows.size());

  double rec_total = 0.0, w_total = 0.0;
  std::size_t loss_rows = 0;
  const bool with_warm_losses = spec_.variant != Variant::BackboneOnly;
  const std::size_t batch_size = spec_.train.batch_size;

  for (std::size_t at = 0; at < test_rows.size(); at += batch_size) {
    const std::size_t len = std::min(batch_size, test_rows.size() - at);
    std::span<const std::size_t> chunk(test_rows.data() + at, len);
    SampleBatch batch = encode_batch(table_, chunk, schema_, freq_);

    GradFreezeGuard guard({&tables_, &backbone_->params(), &warm_->params()});
    EmbeddingBundle bundle = embed(batch, tables_, schema_);
    Tensor item_vec = provider(batch, bundle);
    Tensor pred = backbone_->forward(item_vec, bundle.features);
    const auto pv = pred.values();
    scores.insert(scores.end(), pv.begin(), pv.end());
    labels.insert(labels.end(), batch.labels.begin(), batch.labels.end());

    if (with_warm_losses) {
      // Deterministic mean-path loss logging.
      GaussianLatent regular = warm_->encode_item(bundle.item);
      GaussianLatent prior = warm_->encode_side(bundle.side_info);
      Tensor freq_t({batch.size, 1}, batch.freq);
      Tensor recon = warm_->decode(regular.mean, freq_t);
      rec_total += reconstruction_loss(bundle.item, recon).item() *
                   static_cast<double>(len);
      w_total += wasserstein_loss(regular, prior).item() * static_cast<double>(len);
      loss_rows += len;
    }
  }

  MetricReport report;
  report.phase = label;
  report.kind = spec_.kind;
  report.variant = spec_.variant;
  report.seed = spec_.seed;
  report.x_freq = x_freq_override;
  report.auc = auc(scores, labels);
  report.f1 = f1(scores, labels);
  report.l_ctr = mean_bce(scores, labels);
  report.l_rec = loss_rows ? rec_total / static_cast<double>(loss_rows) : kNan;
  report.l_w = loss_rows ? w_total / static_cast<double>(loss_rows) : kNan;
  return report;
}

MetricReport ExperimentRun::evaluate_phase(const std::string& label,
                                           std::size_t phase_idx,
                                           std::size_t override_slot,
                                           double x_freq_override) {
  if (spec_.variant == Variant::Warm) {
    // Each evaluation gets its own reproducible noise stream.
    auto eval_rng = std::make_shared<Rng>(
        Rng::derive(spec_.seed, 0x11A0 + phase_idx * 64 + override_slot));
    auto provider = [this, x_freq_override, eval_rng](const SampleBatch&,
                                                      EmbeddingBundle& bundle) {
      return warm_->generate(bundle.side_info, x_freq_override,
                             spec_.train.eval_mode, *eval_rng);
    };
    return evaluate_with_provider(label, provider, x_freq_override);
  }
  auto provider = [](const SampleBatch&, EmbeddingBundle& bundle) {
    return bundle.item;
  };
  return evaluate_with_provider(label, provider, x_freq_override);
}

std::vector<MetricReport> ExperimentRun::run() {
  std::vector<MetricReport> reports;
  const auto& plan = phase_plan();
  for (std::size_t i = 0; i < plan.size(); ++i) {
    if (i < resume_phase_) continue;
    train_group(plan[i].first, i);
    if (spec_.variant == Variant::WarmInitOnly && plan[i].first == Group::Old) {
      apply_warm_initialization();
    }
    reports.push_back(evaluate_phase(plan[i].second, i, 0,
                                     spec_.train.eval_freq_override));
    for (std::size_t s = 0; s < spec_.extra_eval_overrides.size(); ++s) {
      reports.push_back(evaluate_phase(plan[i].second, i, s + 1,
                                       spec_.extra_eval_overrides[s]));
    }
  }
  return reports;
}

void ExperimentRun::save_state(const std::string& path, std::size_t next_phase) const {
  ParameterStore out;
  auto copy_in = [&out](const std::string& prefix, const ParameterStore& src) {
    src.for_each([&](const std::string& name, const Tensor& t, bool) {
      out.add(prefix + name,
              Tensor(t.shape(), {t.values().begin(), t.values().end()}));
    });
  };
  copy_in("backbone/", backbone_->params());
  copy_in("tables/", tables_);
  copy_in("warm/", warm_->params());
  opt_backbone_.export_state("opt_backbone/", out);
  opt_tables_.export_state("opt_tables/", out);
  opt_warm_.export_state("opt_warm/", out);

  std::map<std::string, std::string> meta;
  meta["kind"] = to_string(spec_.kind);
  meta["variant"] = to_string(spec_.variant);
  meta["seed"] = std::to_string(spec_.seed);
  meta["schema_hash"] = std::to_string(schema_.hash());
  meta["latent_dim"] = std::to_string(spec_.train.latent_dim);
  meta["alpha"] = std::to_string(spec_.train.alpha);
  meta["beta"] = std::to_string(spec_.train.beta);
  meta["next_phase"] = std::to_string(next_phase);
  meta["global_step"] = std::to_string(global_step_);
  meta["steps_backbone"] = std::to_string(opt_backbone_.step_count());
  meta["steps_tables"] = std::to_string(opt_tables_.step_count());
  meta["steps_warm"] = std::to_string(opt_warm_.step_count());
  save_checkpoint(path, out, meta);
}

std::size_t ExperimentRun::load_state(const std::string& path) {
  std::map<std::string, std::string> meta;
  ParameterStore loaded = read_checkpoint(path, &meta);

  if (meta.at("kind") != to_string(spec_.kind) ||
      meta.at("variant") != to_string(spec_.variant)) {
    throw StateError("checkpoint " + path + " belongs to a different run: " +
                     meta.at("kind") + "/" + meta.at("variant"));
  }
  if (meta.at("schema_hash") != std::to_string(schema_.hash())) {
    throw StateError("checkpoint " + path + " was trained under a different schema");
  }
  if (meta.at("latent_dim") != std::to_string(spec_.train.latent_dim)) {
    throw StateError("checkpoint " + path + " has latent_dim " +
                     meta.at("latent_dim") + ", run expects " +
                     std::to_string(spec_.train.latent_dim));
  }

  auto copy_out = [&loaded](const std::string& prefix, ParameterStore& dst) {
    dst.for_each([&](const std::string& name, Tensor& t, bool) {
      const Tensor& src = loaded.get(prefix + name);
      if (src.shape() != t.shape()) {
        throw DimensionError("checkpoint parameter " + prefix + name +
                             " has shape " + shape_string(src.shape()));
      }
      auto dv = t.values_mut();
      std::copy(src.values().begin(), src.values().end(), dv.begin());
    });
  };
  copy_out("backbone/", backbone_->params());
  copy_out("tables/", tables_);
  copy_out("warm/", warm_->params());
  opt_backbone_.import_state("opt_backbone/", loaded,
                             std::stoull(meta.at("steps_backbone")));
  opt_tables_.import_state("opt_tables/", loaded,
                           std::stoull(meta.at("steps_tables")));
  opt_warm_.import_state("opt_warm/", loaded, std::stoull(meta.at("steps_warm")));
  global_step_ = std::stoull(meta.at("global_step"));

  resume_phase_ = std::stoull(meta.at("next_phase"));
  // Frequency counts cover exactly the groups trained so far.
  freq_ = FrequencyTable(table_.item_count, FrequencyTable::max_item_count(table_));
  for (std::size_t i = 0; i < resume_phase_ && i < phase_plan().size(); ++i) {
    freq_.add_rows(table_, split_.rows(phase_plan()[i].first));
  }
  return resume_phase_;
}

namespace {

std::string cell_name(const RunSpec& spec) {
  return to_string(spec.kind) + "_" + to_string(spec.variant) + "_seed" +
         std::to_string(spec.seed);
}

std::vector<MetricReport> run_one(const InteractionTable& table,
                                  const DatasetSplit& split,
                                  const FeatureSchema& schema, const RunSpec& spec,
                                  const ExperimentOptions& opts) {
  ExperimentRun run(table, split, schema, spec);

  std::string dir;
  if (!opts.checkpoint_dir.empty()) {
    dir = opts.checkpoint_dir + "/" + cell_name(spec);
    std::filesystem::create_directories(dir);
  }

  std::vector<MetricReport> reports;
  const auto& plan = ExperimentRun::phase_plan();
  for (std::size_t i = 0; i < plan.size(); ++i) {
    const std::string ckpt = dir.empty()
                                 ? std::string{}
                                 : dir + "/phase" + std::to_string(i + 1) + ".ckpt";
    if (!ckpt.empty() && opts.resume && std::filesystem::exists(ckpt)) {
      // Phase already trained: jump to its saved state and re-evaluate.
      run.load_state(ckpt);
    } else {
      run.train_group(plan[i].first, i);
      if (spec.variant == Variant::WarmInitOnly && plan[i].first == Group::Old) {
        run.apply_warm_initialization();
      }
      if (!ckpt.empty()) run.save_state(ckpt, i + 1);
    }
    MetricReport first = run.evaluate_phase(plan[i].second, i, 0,
                                            spec.train.eval_freq_override);
    if (opts.on_report) opts.on_report(first);
    reports.push_back(first);
    for (std::size_t s = 0; s < spec.extra_eval_overrides.size(); ++s) {
      MetricReport extra = run.evaluate_phase(plan[i].second, i, s + 1,
                                              spec.extra_eval_overrides[s]);
      if (opts.on_report) opts.on_report(extra);
      reports.push_back(extra);
    }
  }
  return reports;
}

}  // namespace

std::vector<MetricReport> run_experiment(const InteractionTable& table,
                                         const DatasetSplit& split,
                                         const FeatureSchema& schema,
                                         const std::vector<RunSpec>& specs,
                                         const ExperimentOptions& opts) {
  std::vector<MetricReport> all;
  std::mutex merge_mutex;

  const std::size_t jobs = std::max<std::size_t>(1, std::min(opts.jobs, specs.size()));
  if (jobs <= 1) {
    for (const RunSpec& spec : specs) {
      auto reports = run_one(table, split, schema, spec, opts);
      all.insert(all.end(), reports.begin(), reports.end());
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    std::exception_ptr first_error;
    for (std::size_t t = 0; t < jobs; ++t) {
      pool.emplace_back([&] {
        for (;;) {
          const std::size_t i = next.fetch_add(1);
          if (i >= specs.size()) return;
          try {
            auto reports = run_one(table, split, schema, specs[i], opts);
            std::lock_guard<std::mutex> lock(merge_mutex);
            all.insert(all.end(), reports.begin(), reports.end());
          } catch (...) {
            std::lock_guard<std::mutex> lock(merge_mutex);
            if (!first_error) first_error = std::current_exception();
            return;
          }
        }
      });
    }
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
  }

  // Scheduling-independent output order.
  std::sort(all.begin(), all.end(), [](const MetricReport& a, const MetricReport& b) {
    if (a.kind != b.kind) return to_string(a.kind) < to_string(b.kind);
    if (a.variant != b.variant) return to_string(a.variant) < to_string(b.variant);
    if (a.seed != b.seed) return a.seed < b.seed;
    if (a.phase != b.phase) return a.phase < b.phase;
    return a.x_freq < b.x_freq;
  });
  return all;
}

std::string report_csv_header() {
  return "phase,variant,backbone,seed,auc,f1,l_ctr,l_rec,l_w,x_freq";
}

std::string report_csv_row(const MetricReport& r) {
  std::ostringstream os;
  os.precision(6);
  os << std::fixed;
  os << r.phase << "," << to_string(r.variant) << "," << to_string(r.kind) << ","
     << r.seed << "," << r.auc << "," << r.f1 << "," << r.l_ctr << ",";
  if (std::isnan(r.l_rec)) os << "nan";
  else os << r.l_rec;
  os << ",";
  if (std::isnan(r.l_w)) os << "nan";
  else os << r.l_w;
  os << "," << r.x_freq;
  return os.str();
}

void write_report_csv(const std::string& path,
                      const std::vector<MetricReport>& reports,
                      const std::string& resolved_config_json) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream os(tmp, std::ios::trunc);
    if (!os) throw IoError("cannot write report: " + tmp);
    os << "# config: " << resolved_config_json << "\n";
    os << report_csv_header() << "\n";
    for (const MetricReport& r : reports) os << report_csv_row(r) << "\n";
    if (!os) throw IoError("short write on report: " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

std::vector<AggregateCell> aggregate_reports(const std::vector<MetricReport>& reports) {
  std::vector<AggregateCell> cells;
  auto find = [&cells](const MetricReport& r) -> AggregateCell& {
    for (AggregateCell& c : cells) {
      if (c.phase == r.phase && c.kind == r.kind && c.variant == r.variant &&
          c.x_freq == r.x_freq) {
        return c;
      }
    }
    cells.push_back({r.phase, r.kind, r.variant, r.x_freq, 0.0, 0.0, 0});
    return cells.back();
  };
  for (const MetricReport& r : reports) {
    AggregateCell& c = find(r);
    c.mean_auc += r.auc;
    c.mean_f1 += r.f1;
    c.runs += 1;
  }
  for (AggregateCell& c : cells) {
    if (c.runs) {
      c.mean_auc /= static_cast<double>(c.runs);
      c.mean_f1 /= static_cast<double>(c.runs);
    }
  }
  return cells;
}

}  // namespace cvar
