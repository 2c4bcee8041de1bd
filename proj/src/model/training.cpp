#include "lexipivot/model/training.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "lexipivot/error.hpp"
#include "lexipivot/numerics/adam.hpp"
#include "lexipivot/random.hpp"

namespace lexipivot {

void TrainingConfig::validate() const {
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw ConfigError("learning_rate must be positive");
  if (max_epochs == 0) throw ConfigError("max_epochs must be positive");
  if (clip_norm < 0.0) throw ConfigError("clip_norm must be non-negative");
}

double TrainingLog::best_val_loss_for(const std::string& language) const {
  for (const auto& r : rows) {
    if (r.epoch == best_epoch && r.language == language) return r.val_loss;
  }
  throw LookupError("no log row for language \"" + language + "\" at epoch " + std::to_string(best_epoch));
}

std::vector<std::size_t> interleave_schedule(std::span<const std::size_t> batch_counts) {
  std::size_t total = 0;
  for (auto n : batch_counts) total += n;
  std::vector<std::size_t> used(batch_counts.size(), 0), order;
  order.reserve(total);
  for (std::size_t step = 0; step < total; ++step) {
    std::size_t pick = batch_counts.size();
    double best = 0.0;
    for (std::size_t l = 0; l < batch_counts.size(); ++l) {
      if (used[l] == batch_counts[l]) continue;
      // Fraction of the language's batches consumed once this one is taken.
      const double progress = static_cast<double>(used[l] + 1) / static_cast<double>(batch_counts[l]);
      if (pick == batch_counts.size() || progress < best) {
        pick = l;
        best = progress;
      }
    }
    ++used[pick];
    order.push_back(pick);
  }
  return order;
}

LossResult evaluate_loss(const MultiLingualModel& model, std::span<const TrainingExample> examples,
                         std::size_t chunk) {
  LossResult total;
  chunk = std::max<std::size_t>(chunk, 1);
  for (std::size_t i = 0; i < examples.size(); i += chunk) {
    const auto r = sequence_loss(model, examples.subspan(i, std::min(chunk, examples.size() - i)));
    total.nll_sum += r.nll_sum;
    total.token_count += r.token_count;
  }
  return total;
}

TrainingLog train(MultiLingualModel& model, std::span<const LanguageSplit> splits,
                  const TrainingConfig& config, const EpochCallback& on_epoch) {
  config.validate();
  if (splits.empty()) throw ConfigError("training needs at least one language");
  for (const auto& s : splits) {
    if (s.train.empty()) throw ConfigError("language \"" + s.language + "\" has an empty training split");
    model.vocab_size(s.language);
    for (const auto& ex : s.train) {
      if (ex.language != s.language) throw InputError("example of \"" + ex.language + "\" in split \"" + s.language + "\"");
    }
  }

  AdamState adam;
  adam.learning_rate = config.learning_rate;
  const std::uint64_t shuffle_root = derive_seed(config.seed, "shuffle");
  TrainingLog log;
  auto best_params = model.params().snapshot();
  double best = INFINITY;
  std::size_t since_best = 0;

  std::vector<std::size_t> batch_counts;
  for (const auto& s : splits) batch_counts.push_back((s.train.size() + config.batch_size - 1) / config.batch_size);
  const auto schedule = interleave_schedule(batch_counts);

  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    Rng rng(derive_seed(shuffle_root, epoch));
    std::vector<std::vector<std::size_t>> order(splits.size());
    for (std::size_t l = 0; l < splits.size(); ++l) {
      order[l].resize(splits[l].train.size());
      for (std::size_t i = 0; i < order[l].size(); ++i) order[l][i] = i;
      std::shuffle(order[l].begin(), order[l].end(), rng);
    }

    std::vector<std::size_t> next_batch(splits.size(), 0);
    std::vector<LossResult> train_loss(splits.size());
    std::vector<TrainingExample> batch;
    for (const std::size_t l : schedule) {
      const auto& s = splits[l];
      const std::size_t begin = next_batch[l]++ * config.batch_size;
      const std::size_t end = std::min(begin + config.batch_size, s.train.size());
      batch.clear();
      for (std::size_t i = begin; i < end; ++i) batch.push_back(s.train[order[l][i]]);

      const std::string active[] = {s.language};
      model.set_trainable(active);
      model.params().zero_grad();
      LossResult r;
      try {
        r = sequence_loss_backward(model, batch);
      } catch (const NumericError& e) {
        throw NumericError("epoch " + std::to_string(epoch) + " (language \"" + s.language + "\"): " + e.what());
      }
      if (!std::isfinite(r.nll_sum)) {
        throw NumericError("non-finite training loss in epoch " + std::to_string(epoch) + " (language \"" +
                           s.language + "\")");
      }
      const double norm = clip_grad_norm(model.params(), config.clip_norm);
      if (!std::isfinite(norm)) {
        throw NumericError("non-finite gradient norm in epoch " + std::to_string(epoch));
      }
      adam_update(model.params(), adam);
      train_loss[l].nll_sum += r.nll_sum;
      train_loss[l].token_count += r.token_count;
    }
    model.set_all_trainable();
    model.params().release_grads();

    LossResult val_total, train_total;
    std::vector<EpochRecord> epoch_rows;
    for (std::size_t l = 0; l < splits.size(); ++l) {
      LossResult v;
      try {
        v = evaluate_loss(model, splits[l].val, config.batch_size);
      } catch (const NumericError& e) {
        throw NumericError("epoch " + std::to_string(epoch) + " validation: " + e.what());
      }
      if (!std::isfinite(v.nll_sum)) throw NumericError("non-finite validation loss in epoch " + std::to_string(epoch));
      val_total.nll_sum += v.nll_sum;
      val_total.token_count += v.token_count;
      train_total.nll_sum += train_loss[l].nll_sum;
      train_total.token_count += train_loss[l].token_count;
      epoch_rows.push_back(EpochRecord{epoch, splits[l].language, train_loss[l].mean(), v.mean()});
    }
    log.rows.insert(log.rows.end(), epoch_rows.begin(), epoch_rows.end());
    log.epochs_run = epoch;
    if (on_epoch) on_epoch(epoch_rows);

    // Without validation data selection falls back to the training loss.
    const double score = val_total.token_count ? val_total.mean() : train_total.mean();
    if (score < best) {
      best = score;
      log.best_epoch = epoch;
      log.best_val_loss = score;
      best_params = model.params().snapshot();
      since_best = 0;
    } else if (config.patience > 0 && ++since_best >= config.patience) {
      log.early_stopped = true;
      break;
    }
  }
  model.params().restore(best_params);
  return log;
}

LanguageSplit split_examples(std::string language, std::vector<TrainingExample> examples,
                             double val_fraction) {
  if (val_fraction < 0.0 || val_fraction >= 1.0) throw ConfigError("val_fraction must be in [0, 1)");
  std::set<std::uint64_t> ids;
  for (const auto& ex : examples) {
    if (!ex.image) throw InputError("training example without an image");
    ids.insert(ex.image->image_id);
  }
  const auto n_val = static_cast<std::size_t>(std::floor(val_fraction * static_cast<double>(ids.size())));
  std::set<std::uint64_t> val_ids;
  auto it = ids.end();
  for (std::size_t i = 0; i < n_val; ++i) val_ids.insert(*--it);
  LanguageSplit out;
  out.language = std::move(language);
  for (auto& ex : examples) (val_ids.count(ex.image->image_id) ? out.val : out.train).push_back(std::move(ex));
  return out;
}

}  // namespace lexipivot
