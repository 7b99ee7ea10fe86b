#include "metashift/meta/train_log.hpp"

#include "metashift/common/csv.hpp"

namespace metashift::meta {

void write_train_log(const std::filesystem::path& path, const TrainLog& log, const std::vector<std::string>& comments) {
  csv::Table t;
  t.comments = comments;
  t.comments.push_back("best_epoch=" + std::to_string(log.best_epoch) + " best_val_loss=" + csv::num(log.best_val_loss) +
                       " stopped_early=" + (log.stopped_early ? "1" : "0"));
  t.header = {"epoch", "val_loss", "pseudo_epochs", "seconds"};
  for (const auto& e : log.epochs)
    t.rows.push_back({std::to_string(e.epoch), csv::num(e.val_loss), std::to_string(e.pseudo_epochs), csv::num(e.seconds)});
  csv::write(path, t);
}

}  // namespace metashift::meta
