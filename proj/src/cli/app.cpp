#include <CLI11.hpp>

#include "commands.hpp"
#include "metashift/cli/cli.hpp"
#include "metashift/common/error.hpp"

namespace metashift::cli {

int run(const std::vector<std::string>& args, std::ostream& log) {
  CLI::App app{"Task generation, data-shift analysis, meta-training and evaluation for seismic detection tasks", "metashift"};
  app.set_config("--config", "", "TOML/INI file holding option values; command-line flags override it");
  app.require_subcommand(1, 1);
  app.fallthrough();

  Context ctx;
  ctx.log = &log;
  std::string out = "metashift_out";
  app.add_option("--seed", ctx.seed, "Master seed")->capture_default_str();
  app.add_option("--jobs", ctx.jobs, "Worker threads")->capture_default_str()->check(CLI::PositiveNumber);
  app.add_option("--out", out, "Output root")->envname("METASHIFT_OUT")->capture_default_str();
  app.add_flag("--timing", ctx.timing, "Record wall-clock seconds in training logs (makes logs non-reproducible)");

  GenerateArgs gen;
  auto* g = app.add_subcommand("generate", "Synthesize a task archive");
  g->add_option("--tasks", gen.tasks, "Design: full (243 tasks), mini (27) or ood (SNR sweep)")
      ->check(CLI::IsMember({"full", "mini", "ood"}))
      ->capture_default_str();
  g->add_option("--reps", gen.reps, "Waveforms per class per task")->check(CLI::PositiveNumber)->capture_default_str();
  g->add_option("--samples", gen.samples, "Samples per trace")->check(CLI::PositiveNumber)->capture_default_str();
  g->add_option("--bins", gen.bins, "SNR bins (ood)")->check(CLI::PositiveNumber)->capture_default_str();
  g->add_option("--snr-lo", gen.snr_lo, "Lowest SNR (ood)")->capture_default_str();
  g->add_option("--snr-hi", gen.snr_hi, "Highest SNR (ood)")->capture_default_str();
  g->add_option("--dir", gen.dir, "Archive directory (default <out>/tasks)");
  g->add_flag("--force", gen.force, "Overwrite an existing archive");

  ShiftArgs sh;
  auto* s = app.add_subcommand("shift", "Task-specific models, similarity, clustering, splits and sampling weights");
  s->add_option("--archive", sh.archive, "Archive directory (default <out>/tasks)");
  s->add_option("--arch", sh.architecture, "Architecture of the task-specific models")
      ->check(CLI::IsMember({"mini", "small", "big", "huge"}))
      ->capture_default_str();
  s->add_option("--n", sh.n, "Training pairs per class per task")->capture_default_str();
  s->add_option("--ensembles", sh.ensembles, "Models per task")->capture_default_str();
  s->add_option("--val-fraction", sh.val_fraction, "Share of the pool held out for validation")->capture_default_str();
  s->add_option("--test-branch", sh.test_branch, "Root subtree used as the test split")
      ->check(CLI::IsMember({"left", "right"}))
      ->capture_default_str();
  s->add_flag("--train-models", sh.train_models, "Train missing task-specific models instead of failing");
  s->add_option("--max-epochs", sh.max_epochs, "Epoch cap (0 = default)");
  s->add_option("--patience", sh.patience, "Early-stopping patience (0 = default)");

  GridArgs grid;
  auto* t = app.add_subcommand("train", "Train a grid of cells; completed cells are skipped");
  t->add_option("--archive", grid.archive, "Archive directory (default <out>/tasks)");
  t->add_option("--algorithms", grid.algorithms, "reptile, fomaml, tdl, dnc")->delimiter(',')->capture_default_str();
  t->add_option("--arch", grid.architectures, "mini, small, big, huge")->delimiter(',')->capture_default_str();
  t->add_option("--n", grid.n, "Training pairs per class")->delimiter(',')->capture_default_str();
  t->add_option("--sampling", grid.sampling, "uniform, diverse (meta-learners only)")->delimiter(',')->capture_default_str();
  t->add_option("--seeds", grid.seeds, "Run seeds (default: --seed)")->delimiter(',');
  t->add_option("--ensembles", grid.ensembles, "Members per cell (0 = algorithm default)");
  t->add_option("--max-epochs", grid.max_epochs, "Epoch cap (0 = default)");
  t->add_option("--patience", grid.patience, "Early-stopping patience (0 = default)");

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "K-shot fine-tuning of every trained cell on the test tasks");
  e->add_option("--archive", ev.archive, "Archive directory (default <out>/tasks)");
  e->add_option("--ood", ev.ood, "Also evaluate on every task of this OOD archive");
  e->add_option("--k", ev.k, "Fine-tuning pairs per class")->delimiter(',')->capture_default_str();

  ReportArgs rep;
  auto* r = app.add_subcommand("report", "Aggregates, confidence intervals, QQ data and SVG figures");
  r->add_option("--results", rep.results, "Results CSV (default <out>/results.csv)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(std::move(reversed));
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err, log, log);
    return code == 0 ? kSuccess : kValidation;
  }
  ctx.out = out;

  try {
    if (*g) {
      ctx.config_hash = stable_hash(canonical(gen, ctx));
      cmd_generate(gen, ctx);
    } else if (*s) {
      ctx.config_hash = stable_hash(canonical(sh, ctx));
      cmd_shift(sh, ctx);
    } else if (*t) {
      ctx.config_hash = stable_hash(canonical(grid, ctx));
      cmd_train(grid, ctx);
    } else if (*e) {
      ctx.config_hash = stable_hash(canonical(ev, ctx));
      cmd_eval(ev, ctx);
    } else if (*r) {
      ctx.config_hash = stable_hash(canonical(rep, ctx));
      cmd_report(rep, ctx);
    }
  } catch (const ValidationError& err) {
    log << "error: " << err.what() << "\n";
    return kValidation;
  } catch (const FormatError& err) {
    log << "error: " << err.what() << "\n";
    return kValidation;
  } catch (const MissingArtifactError& err) {
    log << "error: " << err.what() << "\n";
    return kMissingArtifact;
  } catch (const NumericalError& err) {
    log << "numerical failure: " << err.what() << "\n";
    return kNumerical;
  } catch (const std::exception& err) {
    log << "error: " << err.what() << "\n";
    return kFailure;
  }
  return kSuccess;
}

}  // namespace metashift::cli
