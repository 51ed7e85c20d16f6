// SPDX-License-Identifier: Apache-2.0
#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "awdlm/awdlm.h"

namespace {

struct CliError {
  int code;
};

void check(awdlm_status status, const std::string& what) {
  if (status == AWDLM_OK) return;
  std::cerr << "awdlm: " << what << ": " << awdlm_status_string(status) << ": " << awdlm_last_error() << "\n";
  throw CliError{static_cast<int>(status)};
}

using ConfigPtr = std::unique_ptr<awdlm_config, decltype(&awdlm_config_destroy)>;
using ModelPtr = std::unique_ptr<awdlm_model, decltype(&awdlm_model_destroy)>;

ConfigPtr wrap(awdlm_config* c) { return {c, &awdlm_config_destroy}; }
ModelPtr wrap(awdlm_model* m) { return {m, &awdlm_model_destroy}; }

std::vector<std::string> split_lines(const char* text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);)
    if (!line.empty()) out.push_back(line);
  return out;
}

std::string flag_name(std::string key) {
  for (char& c : key)
    if (c == '_') c = '-';
  return "--" + key;
}

void print_line(const char* line, void*) {
  std::fputs(line, stdout);
  std::fputc('\n', stdout);
  std::fflush(stdout);
}

// Config resolution shared by the training-type subcommands: profile,
// then config file, then one flag per config key, then --set pairs.
struct ConfigOptions {
  std::string profile = "ptb";
  std::string file;
  std::vector<std::string> sets;
  std::map<std::string, std::string> flags;
  bool profile_given = false;

  void attach(CLI::App* app) {
    app->add_option("--profile", profile, "ptb, wt2 or tiny")->check(CLI::IsMember({"ptb", "wt2", "tiny"}));
    app->add_option("--config", file, "file of 'key = value' lines");
    app->add_option("--set", sets, "key=value override (repeatable)");
    for (const auto& key : split_lines(awdlm_config_keys())) {
      if (key == "profile") continue;
      app->add_option(flag_name(key), flags[key], "config key " + key);
    }
  }

  void apply(awdlm_config* c, const CLI::App* app) const {
    if (!file.empty()) check(awdlm_config_load_file(c, file.c_str()), "config file");
    for (const auto& [key, value] : flags)
      if (app->count(flag_name(key)) > 0) check(awdlm_config_set(c, key.c_str(), value.c_str()), "--" + key);
    for (const auto& kv : sets) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) {
        std::cerr << "awdlm: --set expects key=value, got '" << kv << "'\n";
        throw CliError{2};
      }
      check(awdlm_config_set(c, kv.substr(0, eq).c_str(), kv.substr(eq + 1).c_str()), "--set " + kv);
    }
  }

  ConfigPtr build(const CLI::App* app) const {
    awdlm_config* c = nullptr;
    check(awdlm_config_create(profile.c_str(), &c), "profile");
    ConfigPtr cfg = wrap(c);
    apply(cfg.get(), app);
    return cfg;
  }
};

std::string config_value(const awdlm_config* c, const char* key) {
  size_t needed = 0;
  awdlm_config_get(c, key, nullptr, 0, &needed);
  std::string buf(needed, '\0');
  check(awdlm_config_get(c, key, buf.data(), buf.size(), &needed), std::string("config key ") + key);
  buf.resize(needed - 1);
  return buf;
}

std::string config_dump(const awdlm_config* c) {
  size_t needed = 0;
  awdlm_config_dump(c, nullptr, 0, &needed);
  std::string buf(needed, '\0');
  check(awdlm_config_dump(c, buf.data(), buf.size(), &needed), "config dump");
  buf.resize(needed - 1);
  return buf;
}

ModelPtr load_model(const std::string& path) {
  awdlm_model* m = nullptr;
  check(awdlm_model_load(path.c_str(), &m), "load " + path);
  return wrap(m);
}

ConfigPtr model_config(const awdlm_model* m) {
  awdlm_config* c = nullptr;
  check(awdlm_model_config(m, &c), "model config");
  return wrap(c);
}

std::size_t model_bptt(const awdlm_model* m) { return std::stoul(config_value(model_config(m).get(), "bptt")); }

void print_info(const awdlm_model* m) {
  awdlm_model_info info{};
  check(awdlm_model_info_get(m, &info), "model info");
  std::printf("# model: vocab=%zu embed=%zu hidden=%zu layers=%zu parameters=%zu epochs=%zu steps=%zu "
              "averaging=%d fine_tuned=%d best_valid=%.4f\n",
              info.vocab, info.embed, info.hidden, info.layers, info.parameters, info.epochs, info.steps,
              info.triggered, info.fine_tuned, info.best_valid);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"AWD-LSTM language model trainer and evaluator"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(awdlm_version()));

  // train
  ConfigOptions train_cfg;
  std::string train_out;
  std::string train_resume;
  bool train_finetune = false;
  auto* train = app.add_subcommand("train", "train a model (NT-ASGD), optionally followed by fine-tuning");
  train_cfg.attach(train);
  train->add_option("--out", train_out, "directory for best/final checkpoints");
  train->add_option("--resume", train_resume, "continue from this checkpoint");
  train->add_flag("--finetune", train_finetune, "run the fine-tuning phase afterwards");

  // finetune
  ConfigOptions ft_cfg;
  std::string ft_model, ft_out;
  auto* finetune = app.add_subcommand("finetune", "fine-tune a trained checkpoint (averaging from step 0)");
  finetune->add_option("--model", ft_model, "trained checkpoint")->required();
  finetune->add_option("--out", ft_out, "directory for checkpoints");
  ft_cfg.attach(finetune);

  // eval
  std::string ev_model, ev_corpus;
  std::size_t ev_batch = 1, ev_bptt = 0;
  auto* eval = app.add_subcommand("eval", "perplexity of a checkpoint on a corpus");
  eval->add_option("--model", ev_model)->required();
  eval->add_option("--corpus", ev_corpus)->required();
  eval->add_option("--batch", ev_batch, "evaluation batch size");
  eval->add_option("--bptt", ev_bptt, "window length (default: the model's bptt)");

  // cache-eval
  std::string ce_model, ce_corpus;
  std::size_t ce_bptt = 0;
  awdlm_cache_params ce_params{2000, 0.1, 1.0};
  auto* cache_eval = app.add_subcommand("cache-eval", "perplexity with the neural cache");
  cache_eval->add_option("--model", ce_model)->required();
  cache_eval->add_option("--corpus", ce_corpus)->required();
  cache_eval->add_option("--window", ce_params.window);
  cache_eval->add_option("--lambda", ce_params.lambda);
  cache_eval->add_option("--theta", ce_params.theta);
  cache_eval->add_option("--bptt", ce_bptt);

  // cache-tune
  std::string ct_model, ct_corpus;
  std::size_t ct_bptt = 0;
  std::vector<std::size_t> ct_windows;
  std::vector<double> ct_lambdas, ct_thetas;
  auto* cache_tune = app.add_subcommand("cache-tune", "grid-search cache window, lambda and theta");
  cache_tune->add_option("--model", ct_model)->required();
  cache_tune->add_option("--corpus", ct_corpus, "usually the validation split")->required();
  cache_tune->add_option("--windows", ct_windows)->delimiter(',');
  cache_tune->add_option("--lambdas", ct_lambdas)->delimiter(',');
  cache_tune->add_option("--thetas", ct_thetas)->delimiter(',');
  cache_tune->add_option("--bptt", ct_bptt);

  // analyze-cache
  std::string ac_model, ac_corpus, ac_out;
  std::size_t ac_bptt = 0, ac_rows = 20;
  awdlm_cache_params ac_params{2000, 0.1, 1.0};
  auto* analyze = app.add_subcommand("analyze-cache", "per-word loss change from the cache");
  analyze->add_option("--model", ac_model)->required();
  analyze->add_option("--corpus", ac_corpus)->required();
  analyze->add_option("--window", ac_params.window);
  analyze->add_option("--lambda", ac_params.lambda);
  analyze->add_option("--theta", ac_params.theta);
  analyze->add_option("--rows", ac_rows);
  analyze->add_option("--bptt", ac_bptt);
  analyze->add_option("--out", ac_out, "write the report here instead of stdout");

  // ablate
  ConfigOptions ab_cfg;
  std::vector<std::string> ab_names;
  std::string ab_out;
  auto* ablate = app.add_subcommand("ablate", "train with one technique disabled and report a table row");
  ablate->add_option("--name", ab_names, "ablation name (repeatable, or 'all')")->required();
  ablate->add_option("--out", ab_out, "directory for checkpoints");
  ab_cfg.attach(ablate);

  // config
  ConfigOptions show_cfg;
  auto* show = app.add_subcommand("config", "print the effective configuration");
  show_cfg.attach(show);

  // synth
  std::string sy_kind = "ptb-like", sy_out;
  std::size_t sy_tokens = 10000, sy_vocab = 1000;
  std::uint64_t sy_seed = 1;
  auto* synth = app.add_subcommand("synth", "write a synthetic corpus");
  synth->add_option("--kind", sy_kind)->check(CLI::IsMember({"ptb-like", "topics", "random"}));
  synth->add_option("--tokens", sy_tokens);
  synth->add_option("--vocab", sy_vocab, "word count (topic count for 'topics')");
  synth->add_option("--seed", sy_seed);
  synth->add_option("--out", sy_out)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) {
      ConfigPtr cfg = train_cfg.build(train);
      const char* out = train_out.empty() ? nullptr : train_out.c_str();
      awdlm_model* m = nullptr;
      if (train_resume.empty()) {
        check(awdlm_train(cfg.get(), out, &print_line, nullptr, &m), "train");
      } else {
        check(awdlm_resume(train_resume.c_str(), cfg.get(), out, &print_line, nullptr, &m), "resume");
      }
      ModelPtr model = wrap(m);
      if (train_finetune) {
        awdlm_model* f = nullptr;
        check(awdlm_finetune(model.get(), cfg.get(), out, &print_line, nullptr, &f), "finetune");
        model = wrap(f);
      }
      print_info(model.get());
    } else if (*finetune) {
      ModelPtr trained = load_model(ft_model);
      ConfigPtr cfg = model_config(trained.get());
      ft_cfg.apply(cfg.get(), finetune);
      awdlm_model* f = nullptr;
      check(awdlm_finetune(trained.get(), cfg.get(), ft_out.empty() ? nullptr : ft_out.c_str(), &print_line,
                           nullptr, &f),
            "finetune");
      ModelPtr model = wrap(f);
      print_info(model.get());
    } else if (*eval) {
      ModelPtr model = load_model(ev_model);
      const std::size_t bptt = ev_bptt ? ev_bptt : model_bptt(model.get());
      double ppl = 0.0;
      check(awdlm_eval(model.get(), ev_corpus.c_str(), ev_batch, bptt, &ppl), "eval");
      std::printf("perplexity\t%.4f\n", ppl);
    } else if (*cache_eval) {
      ModelPtr model = load_model(ce_model);
      const std::size_t bptt = ce_bptt ? ce_bptt : model_bptt(model.get());
      double base = 0.0, ppl = 0.0;
      check(awdlm_eval(model.get(), ce_corpus.c_str(), 1, bptt, &base), "eval");
      check(awdlm_cache_eval(model.get(), ce_corpus.c_str(), &ce_params, bptt, &ppl), "cache-eval");
      std::printf("perplexity\t%.4f\nwith_cache\t%.4f\n", base, ppl);
    } else if (*cache_tune) {
      ModelPtr model = load_model(ct_model);
      const std::size_t bptt = ct_bptt ? ct_bptt : model_bptt(model.get());
      awdlm_cache_params best{};
      double ppl = 0.0, base = 0.0;
      check(awdlm_cache_tune(model.get(), ct_corpus.c_str(), bptt, ct_windows.empty() ? nullptr : ct_windows.data(),
                             ct_windows.size(), ct_lambdas.empty() ? nullptr : ct_lambdas.data(), ct_lambdas.size(),
                             ct_thetas.empty() ? nullptr : ct_thetas.data(), ct_thetas.size(), &best, &ppl, &base),
            "cache-tune");
      std::printf("window\t%zu\nlambda\t%g\ntheta\t%g\nperplexity\t%.4f\nwithout_cache\t%.4f\n", best.window,
                  best.lambda, best.theta, ppl, base);
    } else if (*analyze) {
      ModelPtr model = load_model(ac_model);
      const std::size_t bptt = ac_bptt ? ac_bptt : model_bptt(model.get());
      size_t needed = 0;
      awdlm_analyze_cache(model.get(), ac_corpus.c_str(), &ac_params, bptt, ac_rows, nullptr, 0, &needed);
      std::string report(needed ? needed : 1, '\0');
      check(awdlm_analyze_cache(model.get(), ac_corpus.c_str(), &ac_params, bptt, ac_rows, report.data(),
                                report.size(), &needed),
            "analyze-cache");
      report.resize(needed - 1);
      if (ac_out.empty()) {
        std::cout << report;
      } else {
        std::ofstream(ac_out) << report;
      }
    } else if (*ablate) {
      ConfigPtr cfg = ab_cfg.build(ablate);
      std::vector<std::string> names;
      for (const auto& n : ab_names) {
        if (n == "all") {
          for (const auto& a : split_lines(awdlm_ablation_names())) names.push_back(a);
        } else {
          names.push_back(n);
        }
      }
      std::vector<awdlm_ablation_row> rows;
      for (const auto& n : names) {
        awdlm_ablation_row row{};
        const std::string dir = ab_out.empty() ? std::string() : ab_out + "/" + n;
        check(awdlm_ablate(cfg.get(), n.c_str(), dir.empty() ? nullptr : dir.c_str(), &print_line, nullptr, &row),
              "ablate " + n);
        rows.push_back(row);
      }
      std::printf("model\tparameters\tvalidation\ttest\n");
      for (const auto& r : rows) {
        const std::string label = std::string(r.name) == "baseline" ? "baseline" : "-- " + std::string(r.name);
        std::printf("%s\t%zu\t%.2f\t%.2f\n", label.c_str(), r.parameters, r.valid_ppl, r.test_ppl);
      }
    } else if (*show) {
      ConfigPtr cfg = show_cfg.build(show);
      std::cout << config_dump(cfg.get());
    } else if (*synth) {
      check(awdlm_synthesize(sy_kind.c_str(), sy_tokens, sy_vocab, sy_seed, sy_out.c_str()), "synth");
    }
  } catch (const CliError& e) {
    return e.code;
  }
  return 0;
}
