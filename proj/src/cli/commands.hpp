#pragma once

#include <string>
#include <vector>

#include "context.hpp"

namespace metashift::cli {

struct GenerateArgs {
  std::string tasks = "mini";  // full | mini | ood
  int reps = 30;
  int samples = 500;
  int bins = 35;  // ood only
  double snr_lo = 0.05;
  double snr_hi = 2.0;
  std::string dir;  // default <out>/tasks
  bool force = false;
};

struct ShiftArgs {
  std::string archive;
  std::string architecture = "mini";
  int n = 20;
  int ensembles = 4;
  double val_fraction = 0.2;
  std::string test_branch = "left";
  bool train_models = false;
  int max_epochs = 0;  // 0 keeps the algorithm default
  int patience = 0;
};

struct GridArgs {
  std::string archive;
  std::vector<std::string> algorithms{"reptile", "fomaml", "tdl", "dnc"};
  std::vector<std::string> architectures{"mini"};
  std::vector<int> n{5};
  std::vector<std::string> sampling{"uniform"};
  std::vector<std::uint64_t> seeds;  // default: the global --seed
  int ensembles = 0;                 // 0 keeps the algorithm default
  int max_epochs = 0;
  int patience = 0;
};

struct EvalArgs {
  std::string archive;
  std::string ood;  // optional OOD archive evaluated on every task
  std::vector<int> k{1, 5, 10, 50};
};

struct ReportArgs {
  std::string results;  // default <out>/results.csv
};

std::string canonical(const GenerateArgs& a, const Context& ctx);
std::string canonical(const ShiftArgs& a, const Context& ctx);
std::string canonical(const GridArgs& a, const Context& ctx);
std::string canonical(const EvalArgs& a, const Context& ctx);
std::string canonical(const ReportArgs& a, const Context& ctx);

void cmd_generate(const GenerateArgs& a, const Context& ctx);
void cmd_shift(const ShiftArgs& a, const Context& ctx);
void cmd_train(const GridArgs& a, const Context& ctx);
void cmd_eval(const EvalArgs& a, const Context& ctx);
void cmd_report(const ReportArgs& a, const Context& ctx);

}  // namespace metashift::cli

namespace metashift::cli {

/// A trained grid cell on disk: <out>/train/<name>/.
struct CellInfo {
  std::string name;
  meta::MetaConfig config;
  fs::path dir;
};

fs::path member_path(const fs::path& cell_dir, int ensemble);
fs::path task_member_path(const fs::path& cell_dir, int task, int ensemble);
/// Completed cells sorted by directory name.
std::vector<CellInfo> list_complete_cells(const Context& ctx);

}  // namespace metashift::cli
