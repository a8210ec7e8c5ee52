#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "cvar/adam.hpp"
#include "cvar/backbone.hpp"
#include "cvar/embedding.hpp"
#include "cvar/schema.hpp"
#include "cvar/split.hpp"
#include "cvar/warmup.hpp"

namespace cvar {

enum class Variant { BackboneOnly, Warm, WarmInitOnly };

Variant variant_from_string(const std::string& s);
std::string to_string(Variant v);

// Whether warm phases also keep training the backbone (the default) or
// train the generator alone.
enum class WarmTraining { BackboneAndWarm, WarmOnly };

struct TrainSettings {
  double learning_rate = 0.001;
  std::size_t batch_size = 2048;
  std::size_t pretrain_epochs = 1;
  std::size_t warm_epochs = 1;
  std::size_t latent_dim = 16;
  double alpha = 1.0;
  double beta = 1.0;
  std::size_t hidden_units = 16;
  std::size_t hidden_layers = 2;
  double init_log_var = -4.0;
  // Generator updates per backbone update; 1 keeps the strict per-batch
  // interleave.
  std::size_t warm_steps_per_batch = 1;
  WarmTraining warm_training = WarmTraining::BackboneAndWarm;
  WarmSampleMode eval_mode = WarmSampleMode::Sample;
  double eval_freq_override = 1.0;
};

struct RunSpec {
  BackboneKind kind = BackboneKind::DeepFM;
  Variant variant = Variant::Warm;
  std::uint64_t seed = 1;
  TrainSettings train;
  // Additional frequency overrides evaluated after every phase (the
  // inference-time sweep); eval_freq_override is always evaluated first.
  std::vector<double> extra_eval_overrides;
};

struct MetricReport {
  std::string phase;  // cold, warm-a, warm-b, warm-c
  BackboneKind kind = BackboneKind::DeepFM;
  Variant variant = Variant::BackboneOnly;
  std::uint64_t seed = 0;
  double auc = 0.0;
  double f1 = 0.0;
  double l_ctr = 0.0;
  double l_rec = 0.0;  // nan for backbone-only runs
  double l_w = 0.0;    // nan for backbone-only runs
  double x_freq = 1.0;
};

// One (backbone, variant, seed) training run over the four-phase protocol:
// pretrain on old items, then warm-a/b/c, evaluating on the fixed test set
// after every phase. Each training batch first updates the backbone and the
// embedding tables on the CTR loss, then updates the generator on the fused
// loss with the backbone and tables frozen.
class ExperimentRun {
 public:
  ExperimentRun(const InteractionTable& table, const DatasetSplit& split,
                const FeatureSchema& schema, const RunSpec& spec);

  // Full protocol; returns one report per phase per evaluated override.
  std::vector<MetricReport> run();

  void train_group(Group g, std::size_t phase_idx);
  MetricReport evaluate_phase(const std::string& label, std::size_t phase_idx,
                              std::size_t override_slot, double x_freq_override);
  // Writes generated vectors into the item table rows of new items.
  void apply_warm_initialization();

  // Item vectors used at evaluation; tests inject substitutes here.
  using ItemVecProvider = std::function<Tensor(const SampleBatch&, EmbeddingBundle&)>;
  MetricReport evaluate_with_provider(const std::string& label,
                                      const ItemVecProvider& provider,
                                      double x_freq_override);

  void save_state(const std::string& path, std::size_t next_phase) const;
  // Returns the phase index training should continue from.
  std::size_t load_state(const std::string& path);

  const RunSpec& spec() const { return spec_; }
  Backbone& backbone() { return *backbone_; }
  WarmupModel& warm_model() { return *warm_; }
  ParameterStore& tables() { return tables_; }
  const FrequencyTable& frequency() const { return freq_; }
  std::size_t backbone_steps() const { return opt_backbone_.step_count(); }
  std::size_t warm_steps() const { return opt_warm_.step_count(); }

  // Audit hooks; fired per interleaved training step.
  std::function<void(std::size_t step)> after_backbone_step;
  std::function<void(std::size_t step)> after_warm_step;

  static const std::vector<std::pair<Group, std::string>>& phase_plan();

 private:
  bool trains_warm(Group g) const;
  bool trains_backbone(Group g) const;

  const InteractionTable& table_;
  const DatasetSplit& split_;
  const FeatureSchema& schema_;
  RunSpec spec_;

  ParameterStore tables_;
  std::unique_ptr<Backbone> backbone_;
  std::unique_ptr<WarmupModel> warm_;
  Adam opt_backbone_;
  Adam opt_tables_;
  Adam opt_warm_;
  FrequencyTable freq_;
  Rng noise_rng_;
  std::size_t resume_phase_ = 0;
  std::size_t global_step_ = 0;
};

struct ExperimentOptions {
  std::size_t jobs = 1;
  // When set, phase checkpoints land in <dir>/<kind>_<variant>_seed<seed>/;
  // existing checkpoints are resumed from.
  std::string checkpoint_dir;
  bool resume = true;
  std::function<void(const MetricReport&)> on_report;  // progress stream
};

std::vector<MetricReport> run_experiment(const InteractionTable& table,
                                         const DatasetSplit& split,
                                         const FeatureSchema& schema,
                                         const std::vector<RunSpec>& specs,
                                         const ExperimentOptions& opts = {});

// CSV with the resolved configuration embedded as a leading comment line.
void write_report_csv(const std::string& path,
                      const std::vector<MetricReport>& reports,
                      const std::string& resolved_config_json);

std::string report_csv_header();
std::string report_csv_row(const MetricReport& r);

// Mean metrics across seeds for one (phase, kind, variant, x_freq) cell.
struct AggregateCell {
  std::string phase;
  BackboneKind kind;
  Variant variant;
  double x_freq = 1.0;
  double mean_auc = 0.0;
  double mean_f1 = 0.0;
  std::size_t runs = 0;
};
std::vector<AggregateCell> aggregate_reports(const std::vector<MetricReport>& reports);

}  // namespace cvar
