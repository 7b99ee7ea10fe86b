#pragma once

#include <filesystem>
#include <limits>
#include <string>
#include <vector>

namespace metashift::meta {

struct EpochRecord {
  int epoch = 0;
  double val_loss = 0.0;
  long pseudo_epochs = 0;  // cumulative meta-iterations (optimizer steps for TDL/D&C)
  double seconds = 0.0;    // cumulative wall time; 0 unless timing is enabled

  bool operator==(const EpochRecord&) const = default;
};

struct TrainLog {
  std::vector<EpochRecord> epochs;  // epoch 0 is the untrained initialization
  int best_epoch = 0;
  double best_val_loss = std::numeric_limits<double>::infinity();
  bool stopped_early = false;

  bool operator==(const TrainLog&) const = default;
};

/// Patience counter on a validation loss; strict decrease counts as improvement.
class EarlyStopState {
 public:
  explicit EarlyStopState(int patience) : patience_(patience) {}

  /// Records epoch's loss; returns true when it is a new best.
  bool update(int epoch, double loss) {
    if (loss < best_) {
      best_ = loss;
      best_epoch_ = epoch;
      since_ = 0;
      return true;
    }
    ++since_;
    return false;
  }
  bool should_stop() const { return since_ >= patience_; }
  double best() const { return best_; }
  int best_epoch() const { return best_epoch_; }
  int since_improvement() const { return since_; }

 private:
  int patience_;
  double best_ = std::numeric_limits<double>::infinity();
  int best_epoch_ = -1;
  int since_ = 0;
};

/// CSV: epoch,val_loss,pseudo_epochs,seconds.
void write_train_log(const std::filesystem::path& path, const TrainLog& log,
                     const std::vector<std::string>& comments = {});

}  // namespace metashift::meta
