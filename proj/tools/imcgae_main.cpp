// imcgae: rating-matrix completion on per-level bipartite graphs.
//
// Subcommands: analyze, train, eval, ablate-sparsity, ablate-layers,
// gradcheck. Every run writes a fully resolved config echo plus report.csv
// and report.txt into --out; train/eval additionally read or write
// imcgae-ckpt-v1 checkpoints.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "imcgae/checkpoint.hpp"
#include "imcgae/dataset.hpp"
#include "imcgae/gradcheck.hpp"
#include "imcgae/graph.hpp"
#include "imcgae/heuristics.hpp"
#include "imcgae/model.hpp"

namespace fs = std::filesystem;
using namespace imcgae;

namespace {

struct RunConfig {
  std::string train_path;
  std::string test_path;
  std::string ckpt_path;
  std::string delimiter = "tab";
  std::string out_dir = "imcgae_out";
  std::string ratio_list = "1.0,0.2,0.1,0.05,0.01";
  double node_holdout_fraction = 0.0;
  HyperParams hp;
  int progress_every = 100;
};

char delimiter_char(const std::string& s) {
  if (s == "\\t" || s == "tab" || s == "\t") return '\t';
  if (s.size() != 1) throw CLI::ValidationError("--delimiter must be one character or 'tab'");
  return s[0];
}

std::string fmt(double v, const char* spec = "%.17g") {
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

std::string opt_fmt(const std::optional<double>& v) { return v ? fmt(*v) : "undefined"; }

void add_hyper_flags(CLI::App* cmd, RunConfig& cfg) {
  cmd->add_option("--layers", cfg.hp.layers, "Message-passing layers");
  cmd->add_option("--dim-id", cfg.hp.dim_identical, "Identical-embedding width");
  cmd->add_option("--dim-role", cfg.hp.dim_role, "Role-embedding width");
  cmd->add_option("--dim-lat", cfg.hp.dim_latent, "Per-level latent width");
  cmd->add_option("--dim-dec", cfg.hp.dim_decode, "Decoder width");
  cmd->add_option("--p0", cfg.hp.p0, "Initial node dropout probability");
  cmd->add_option("--theta", cfg.hp.theta, "Per-layer dropout decay");
  cmd->add_option("--lambda", cfg.hp.lambda_nrr, "NRR regularization weight");
  cmd->add_option("--lr", cfg.hp.lr, "Adam learning rate");
  cmd->add_option("--epochs", cfg.hp.epochs, "Training epochs");
  cmd->add_option("--seed", cfg.hp.seed, "Random seed");
  cmd->add_option("--progress-every", cfg.progress_every, "Epoch log cadence (0 silences)");
}

void add_data_flags(CLI::App* cmd, RunConfig& cfg, bool test_required) {
  cmd->add_option("--train", cfg.train_path, "Training ratings file")
      ->required()
      ->check(CLI::ExistingFile);
  auto* test = cmd->add_option("--test", cfg.test_path, "Test ratings file");
  if (test_required) test->required()->check(CLI::ExistingFile);
  cmd->add_option("--delimiter", cfg.delimiter, "Field delimiter (single char or 'tab')");
  cmd->add_option("--out", cfg.out_dir, "Output directory");
}

// The echo doubles as a --config file that reproduces the run.
fs::path prepare_out_dir(const CLI::App& cmd, const RunConfig& cfg) {
  const fs::path out(cfg.out_dir);
  fs::create_directories(out);
  std::ofstream resolved(out / "config.resolved");
  resolved << '[' << cmd.get_name() << "]\n" << cmd.config_to_str(true, false);
  return out;
}

RatingDataset load_train(const RunConfig& cfg) {
  return build_dataset(parse_movielens(cfg.train_path, delimiter_char(cfg.delimiter)));
}

std::optional<AlignedTest> load_test(const RunConfig& cfg, const RatingDataset& train) {
  if (cfg.test_path.empty()) return std::nullopt;
  return align_test(parse_movielens(cfg.test_path, delimiter_char(cfg.delimiter)), train);
}

EpochCallback progress_logger(const RunConfig& cfg) {
  const int every = cfg.progress_every;
  if (every <= 0) return {};
  return [every](const EpochRecord& rec) {
    if (rec.epoch % every != 0) return;
    std::cout << "epoch " << rec.epoch << "  loss " << fmt(rec.train_loss, "%.6f") << "  ce "
              << fmt(rec.ce, "%.6f");
    if (std::isfinite(rec.test_rmse)) std::cout << "  test_rmse " << fmt(rec.test_rmse, "%.6f");
    std::cout << '\n';
  };
}

std::string schedule_string(const TrainReport& report, char sep = ' ') {
  std::string s;
  for (std::size_t l = 0; l < report.dropout_schedule.size(); ++l) {
    if (l) s += sep;
    s += fmt(report.dropout_schedule[l], "%.4g");
  }
  return s;
}

void write_epoch_csv(const fs::path& path, const TrainReport& report) {
  std::ofstream csv(path);
  const std::string schedule = schedule_string(report, ';');
  csv << "epoch,train_loss,ce,nrr,test_rmse,p_schedule\n";
  for (const auto& e : report.epochs) {
    csv << e.epoch << ',' << fmt(e.train_loss) << ',' << fmt(e.ce) << ',' << fmt(e.nrr) << ','
        << (std::isfinite(e.test_rmse) ? fmt(e.test_rmse) : "") << ',' << schedule << '\n';
  }
}

int cmd_analyze(const CLI::App& app, const RunConfig& cfg) {
  const fs::path out = prepare_out_dir(app, cfg);
  const RatingDataset train = load_train(cfg);
  const HeuristicReport rep = analyze(train);

  std::ofstream csv(out / "report.csv");
  csv << "metric,value,coverage\n";
  csv << "density," << fmt(rep.density) << ",1\n";
  csv << "pcc_aur," << opt_fmt(rep.pcc_aur) << ',' << fmt(rep.coverage_aur) << '\n';
  csv << "pcc_air," << opt_fmt(rep.pcc_air) << ',' << fmt(rep.coverage_air) << '\n';
  csv << "pcc_mcr," << opt_fmt(rep.pcc_mcr) << ',' << fmt(rep.coverage_mcr) << '\n';
  csv << "pcc_scf," << opt_fmt(rep.pcc_scf) << ',' << fmt(rep.coverage_scf) << '\n';

  std::ofstream txt(out / "report.txt");
  txt << "local-graph heuristic analysis\n";
  txt << "  ratings:  " << rep.pair_count << "\n";
  txt << "  users:    " << train.n_users << "\n";
  txt << "  items:    " << train.n_items << "\n";
  txt << "  density:  " << fmt(rep.density, "%.4f") << "\n";
  const auto row = [&](const char* name, const std::optional<double>& v, double cov) {
    txt << "  " << name << ":  pcc " << (v ? fmt(*v, "%.4f") : std::string("undefined"))
        << "  coverage " << fmt(cov, "%.4f") << "\n";
  };
  row("AUR", rep.pcc_aur, rep.coverage_aur);
  row("AIR", rep.pcc_air, rep.coverage_air);
  row("MCR", rep.pcc_mcr, rep.coverage_mcr);
  row("SCF", rep.pcc_scf, rep.coverage_scf);
  std::cout << "analyze: density " << fmt(rep.density, "%.4f") << ", reports in " << out.string()
            << '\n';
  return 0;
}

int cmd_train(const CLI::App& app, const RunConfig& cfg) {
  cfg.hp.validate();
  const fs::path out = prepare_out_dir(app, cfg);
  RatingDataset train = load_train(cfg);
  std::optional<AlignedTest> aligned;
  if (cfg.node_holdout_fraction > 0.0) {
    if (!cfg.test_path.empty())
      throw std::runtime_error("--node-holdout and --test are mutually exclusive");
    const RatingDataset all = std::move(train);
    auto [rest, held] = node_holdout(all, cfg.node_holdout_fraction, cfg.hp.seed);
    std::vector<RawRating> held_raw;
    held_raw.reserve(held.triples.size());
    for (const auto& t : held.triples)
      held_raw.push_back({all.user_tokens[t.user], all.item_tokens[t.item], all.rating_of(t), {}});
    train = std::move(rest);
    aligned = align_test(held_raw, train);
    std::cout << "node-holdout: " << held.triples.size() << " ratings of "
              << all.triples.size() << " held out for unseen-user evaluation\n";
  } else {
    aligned = load_test(cfg, train);
  }

  const FitResult result =
      fit(train, cfg.hp, aligned ? &*aligned : nullptr, progress_logger(cfg));

  save_checkpoint((out / "ckpt.bin").string(), result.best_params, cfg.hp);
  write_epoch_csv(out / "report.csv", result.report);

  std::ofstream txt(out / "report.txt");
  txt << "training run\n";
  txt << "  train:            " << cfg.train_path << " (" << train.triples.size()
      << " ratings, " << train.n_users << " users, " << train.n_items << " items)\n";
  txt << "  epochs:           " << result.report.epochs.size() << "\n";
  txt << "  dropout schedule: " << schedule_string(result.report) << "\n";
  txt << "  final train loss: " << fmt(result.report.final_train_loss) << "\n";
  if (aligned) {
    txt << "  best test rmse:   " << fmt(result.report.best_test_rmse) << " at epoch "
        << result.report.best_epoch << "\n";
  }
  txt << "  checkpoint:       ckpt.bin (best-test parameters)\n";

  std::cout << "train: done";
  if (aligned) std::cout << ", best test rmse " << fmt(result.report.best_test_rmse, "%.6f");
  std::cout << ", outputs in " << out.string() << '\n';
  return 0;
}

int cmd_eval(const CLI::App& app, const RunConfig& cfg) {
  const fs::path out = prepare_out_dir(app, cfg);
  const Checkpoint ck = load_checkpoint(cfg.ckpt_path);
  const RatingDataset train = load_train(cfg);
  if (train.n_users != ck.params.n_users || train.n_items != ck.params.n_items)
    throw std::runtime_error("checkpoint dims (" + std::to_string(ck.params.n_users) + "x" +
                             std::to_string(ck.params.n_items) +
                             ") do not match the training file (" +
                             std::to_string(train.n_users) + "x" + std::to_string(train.n_items) +
                             ")");
  const auto aligned = load_test(cfg, train);
  if (!aligned) throw std::runtime_error("eval requires --test");

  const ModelParams ready = prepare_eval_params(ck.params, train, *aligned);
  const RatingGraph graph =
      build_graph(train, aligned->dataset.n_users, aligned->dataset.n_items);
  const double rmse = evaluate_rmse(ready, graph, ck.hp, *aligned);

  std::ofstream csv(out / "report.csv");
  csv << "metric,value\n";
  csv << "test_rmse," << fmt(rmse) << '\n';
  csv << "test_pairs," << aligned->dataset.triples.size() << '\n';
  csv << "unseen_users," << aligned->unseen_user_count() << '\n';
  csv << "unseen_items," << aligned->unseen_item_count() << '\n';

  std::ofstream txt(out / "report.txt");
  txt << "evaluation\n";
  txt << "  checkpoint:   " << cfg.ckpt_path << "\n";
  txt << "  test pairs:   " << aligned->dataset.triples.size() << "\n";
  txt << "  unseen users: " << aligned->unseen_user_count() << "\n";
  txt << "  unseen items: " << aligned->unseen_item_count() << "\n";
  txt << "  test rmse:    " << fmt(rmse) << "\n";

  std::cout << "eval: test rmse " << fmt(rmse, "%.6f") << ", outputs in " << out.string() << '\n';
  return 0;
}

int cmd_ablate_sparsity(const CLI::App& app, const RunConfig& cfg) {
  cfg.hp.validate();
  const fs::path out = prepare_out_dir(app, cfg);
  const RatingDataset train = load_train(cfg);
  const auto aligned = load_test(cfg, train);

  std::vector<std::pair<std::string, double>> ratios;
  {
    std::string item;
    std::istringstream in(cfg.ratio_list);
    while (std::getline(in, item, ',')) ratios.emplace_back(item, std::stod(item));
  }

  std::ofstream csv(out / "report.csv");
  csv << "ratio,train_triples,best_test_rmse,best_epoch\n";
  std::ofstream txt(out / "report.txt");
  txt << "sparsity ablation (shared test set)\n";
  for (const auto& [token, ratio] : ratios) {
    const RatingDataset sub = subsample(train, ratio, cfg.hp.seed);
    const FitResult result = fit(sub, cfg.hp, &*aligned, progress_logger(cfg));
    csv << token << ',' << sub.triples.size() << ',' << fmt(result.report.best_test_rmse) << ','
        << result.report.best_epoch << '\n';
    txt << "  ratio " << token << ": " << sub.triples.size()
        << " ratings, best test rmse " << fmt(result.report.best_test_rmse, "%.6f") << "\n";
    std::cout << "ablate-sparsity: ratio " << token << " -> rmse "
              << fmt(result.report.best_test_rmse, "%.6f") << '\n';
  }
  return 0;
}

int cmd_ablate_layers(const CLI::App& app, const RunConfig& cfg) {
  cfg.hp.validate();
  const fs::path out = prepare_out_dir(app, cfg);
  const RatingDataset train = load_train(cfg);
  const auto aligned = load_test(cfg, train);

  std::ofstream csv(out / "report.csv");
  csv << "layers,best_test_rmse,best_epoch\n";
  std::ofstream txt(out / "report.txt");
  txt << "encoder depth ablation\n";
  for (int layers = 1; layers <= 5; ++layers) {
    RunConfig arm = cfg;
    arm.hp.layers = layers;
    const FitResult result = fit(train, arm.hp, &*aligned, progress_logger(arm));
    csv << layers << ',' << fmt(result.report.best_test_rmse) << ','
        << result.report.best_epoch << '\n';
    txt << "  L=" << layers << ": best test rmse "
        << fmt(result.report.best_test_rmse, "%.6f") << "\n";
    std::cout << "ablate-layers: L=" << layers << " -> rmse "
              << fmt(result.report.best_test_rmse, "%.6f") << '\n';
  }
  return 0;
}

int cmd_gradcheck(const CLI::App& app, const RunConfig& cfg) {
  const fs::path out = prepare_out_dir(app, cfg);
  const auto results = gradcheck::run_all(cfg.hp.seed);

  std::ofstream csv(out / "report.csv");
  csv << "check,max_rel_err,pass\n";
  std::ofstream txt(out / "report.txt");
  txt << "gradient checks (central finite differences)\n";
  bool all_pass = true;
  for (const auto& r : results) {
    csv << r.name << ',' << fmt(r.max_rel_err) << ',' << (r.pass ? "1" : "0") << '\n';
    txt << "  " << r.name << ": rel err " << fmt(r.max_rel_err, "%.3e")
        << (r.pass ? "  pass" : "  FAIL") << "\n";
    std::cout << "gradcheck " << r.name << ": " << fmt(r.max_rel_err, "%.3e")
              << (r.pass ? " pass" : " FAIL") << '\n';
    all_pass = all_pass && r.pass;
  }
  return all_pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"IMC-GAE rating-matrix completion"};
  app.require_subcommand(1);
  app.fallthrough(true);
  app.option_defaults()->always_capture_default(true);
  // Precedence: flags > config file > defaults. A config file addresses a
  // subcommand through its [section]; config.resolved is written in that form.
  app.set_config("--config", "", "Config file; subcommand options live in its [section]");

  RunConfig cfg;

  auto* analyze_cmd = app.add_subcommand("analyze", "Heuristic correlation analysis");
  add_data_flags(analyze_cmd, cfg, false);

  auto* train_cmd = app.add_subcommand("train", "Train and checkpoint a model");
  add_data_flags(train_cmd, cfg, false);
  add_hyper_flags(train_cmd, cfg);
  train_cmd->add_option("--node-holdout", cfg.node_holdout_fraction,
                        "Hold out this fraction of users from --train for unseen-user evaluation")
      ->check(CLI::Range(0.0, 0.99));

  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint on a test file");
  add_data_flags(eval_cmd, cfg, true);
  eval_cmd->add_option("--ckpt", cfg.ckpt_path, "Checkpoint path")
      ->required()
      ->check(CLI::ExistingFile);

  auto* sparsity_cmd = app.add_subcommand("ablate-sparsity", "Train across subsample ratios");
  add_data_flags(sparsity_cmd, cfg, true);
  add_hyper_flags(sparsity_cmd, cfg);
  sparsity_cmd->add_option("--ratio-list", cfg.ratio_list, "Comma-separated subsample ratios");

  auto* layers_cmd = app.add_subcommand("ablate-layers", "Train with 1..5 encoder layers");
  add_data_flags(layers_cmd, cfg, true);
  add_hyper_flags(layers_cmd, cfg);

  auto* grad_cmd = app.add_subcommand("gradcheck", "Finite-difference gradient verification");
  grad_cmd->add_option("--seed", cfg.hp.seed, "Random seed");
  grad_cmd->add_option("--out", cfg.out_dir, "Output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (analyze_cmd->parsed()) return cmd_analyze(*analyze_cmd, cfg);
    if (train_cmd->parsed()) return cmd_train(*train_cmd, cfg);
    if (eval_cmd->parsed()) return cmd_eval(*eval_cmd, cfg);
    if (sparsity_cmd->parsed()) return cmd_ablate_sparsity(*sparsity_cmd, cfg);
    if (layers_cmd->parsed()) return cmd_ablate_layers(*layers_cmd, cfg);
    if (grad_cmd->parsed()) return cmd_gradcheck(*grad_cmd, cfg);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
