// Command-line front end: kpgen <subcommand> [--config FILE] [--set key=value ...]

#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "kpgen/config.h"
#include "kpgen/pipeline.h"

int main(int argc, char** argv) {
  CLI::App app{"Keyphrase extraction, generation and merging pipeline"};
  app.require_subcommand(1);

  std::string config_path;
  bool toy_defaults = false;
  std::vector<std::string> sets;
  std::string seed, threads, mode, profile, work_dir;
  kpgen::RunOptions opts;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "key = value configuration file");
    sub->add_flag("--toy", toy_defaults, "start from the toy-corpus defaults instead of full-size ones");
    sub->add_option("--set", sets, "override one key (key=value); repeatable");
    sub->add_option("--seed", seed, "random seed");
    sub->add_option("--threads", threads, "worker threads for predict");
    sub->add_option("--mode", mode, "KG-KE, KG-KR, KG-KE-KR or KG-KE-KR-M");
    sub->add_option("--profile", profile, "kp20k, other or semeval");
    sub->add_option("--work-dir", work_dir, "artifact directory");
    sub->add_flag("--force", opts.force, "accept artifacts built under a different config");
  };

  const std::vector<std::pair<std::string, std::string>> commands = {
      {"preprocess", "deduplicate the training set, build the vocabulary"},
      {"build-index", "build the retrieval index over the training set"},
      {"train", "train the joint extractor/generator"},
      {"train-scorer", "train the candidate scorer"},
      {"predict", "produce ranked keyphrases"},
      {"evaluate", "score predictions against gold keyphrases"},
      {"make-toy", "write the synthetic toy corpus"},
  };
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    add_common(sub);
    if (name == "predict" || name == "evaluate") {
      sub->add_option("--split", opts.split, "train, valid or test")->capture_default_str();
      sub->add_option("--out", opts.output, "output path");
    }
    if (name == "predict") sub->add_option("--input", opts.input, "JSONL documents to predict for");
    if (name == "evaluate") {
      sub->add_option("--pred", opts.pred_path, "prediction JSONL");
      sub->add_option("--gold", opts.gold_path, "gold JSONL");
    }
    if (name == "make-toy") sub->add_option("--out", opts.output, "output directory");
  }

  CLI11_PARSE(app, argc, argv);
  const std::string name = app.get_subcommands().front()->get_name();

  kpgen::PipelineConfig cfg = toy_defaults ? kpgen::toy_config() : kpgen::PipelineConfig{};
  try {
    if (!config_path.empty()) cfg = kpgen::load_config(config_path, cfg);
    for (const auto& kv : sets) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw std::invalid_argument("--set expects key=value, got '" + kv + "'");
      cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (!seed.empty()) cfg.set("seed", seed);
    if (!threads.empty()) cfg.set("threads", threads);
    if (!mode.empty()) cfg.set("mode", mode);
    if (!profile.empty()) cfg.set("profile", profile);
    if (!work_dir.empty()) cfg.set("work_dir", work_dir);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return kpgen::run_subcommand(name, cfg, opts, std::cerr);
}
