// SPDX-License-Identifier: Apache-2.0
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <vector>

#include "corpus/synthetic.hpp"
#include "doctest.h"
#include "harness/checkpoint.hpp"
#include "harness/config.hpp"
#include "harness/data.hpp"
#include "harness/trainer.hpp"
#include "model/inference.hpp"
#include "support/oracles.hpp"

using namespace awdlm;

namespace {

Dataset tiny_dataset() {
  const std::string text = synthesize_random_text(200, 20, 10, 3);
  return make_dataset(text, text, text);
}

RunConfig quick_config(std::size_t epochs) {
  RunConfig c = profile_config("tiny");
  c.hidden = 24;
  c.embed = 12;
  c.epochs = epochs;
  c.finetune_epochs = 0;
  return c;
}

bool same_parameters(const LMParameters<float>& a, const LMParameters<float>& b) {
  auto ta = a.tensors();
  auto tb = b.tensors();
  if (ta.size() != tb.size()) return false;
  for (std::size_t i = 0; i < ta.size(); ++i)
    if (ta[i]->shape() != tb[i]->shape() || ta[i]->storage() != tb[i]->storage()) return false;
  return true;
}

void write_file(const std::filesystem::path& p, const std::string& s) {
  std::ofstream out(p, std::ios::binary);
  out << s;
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode{0};
}

}  // namespace

TEST_CASE("default configuration") {
  RunConfig c;
  CHECK(c.layers == 3);
  CHECK(c.hidden == 1150);
  CHECK(c.embed == 400);
  CHECK(c.lr == 30.0);
  CHECK(c.clip == 0.25);
  CHECK(c.dropouti == 0.4);
  CHECK(c.dropouth == 0.3);
  CHECK(c.dropout == 0.4);
  CHECK(c.dropoute == 0.1);
  CHECK(c.wdrop == 0.5);
  CHECK(c.alpha == 2.0);
  CHECK(c.beta == 1.0);
  CHECK(c.nonmono == 5);
  CHECK(c.epochs == 750);
  CHECK(c.batch == 40);
  CHECK(c.bptt == 70);
  CHECK(c.bptt_std == 5.0);
  CHECK(c.bptt_prob == 0.95);
  CHECK(profile_config("ptb") == c);
  RunConfig wt2 = profile_config("wt2");
  CHECK(wt2.batch == 80);
  CHECK(wt2.dropouti == 0.65);
  CHECK(config_diff(c, wt2) == std::vector<std::string>{"batch", "dropouti", "profile"});
  RunConfig tiny = profile_config("tiny");
  CHECK(tiny.layers == 2);
  CHECK(tiny.hidden == 64);
  CHECK(tiny.embed == 32);
  CHECK(tiny.batch == 4);
  CHECK(tiny.bptt == 20);
  CHECK_THROWS_AS(profile_config("huge"), Error);
}

TEST_CASE("configuration keys") {
  RunConfig c;
  SUBCASE("set and get round trip") {
    c.set("lr", "12.5");
    c.set("variable_length", "false");
    c.set("optimizer", "sgd");
    c.set("seed", "18446744073709551615");
    CHECK(c.lr == 12.5);
    CHECK_FALSE(c.variable_length);
    CHECK(c.get("seed") == "18446744073709551615");
    for (const auto& key : config_keys()) {
      RunConfig d;
      d.set(key, c.get(key));
      CHECK(d.get(key) == c.get(key));
    }
  }
  SUBCASE("bad keys and values") {
    CHECK_THROWS_AS(c.set("learning_rate", "1"), Error);
    CHECK_THROWS_AS(c.set("lr", "fast"), Error);
    CHECK_THROWS_AS(c.set("layers", "-2"), Error);
    CHECK_THROWS_AS(c.get("nope"), Error);
    c.dropout = 1.0;
    CHECK_THROWS_AS(c.validate(), Error);
    c = RunConfig{};
    c.optimizer = "adam";
    CHECK_THROWS_AS(c.validate(), Error);
  }
  SUBCASE("config text") {
    apply_config_text(c, "# comment\nhidden = 200\n\n  lr=7 # trailing\n");
    CHECK(c.hidden == 200);
    CHECK(c.lr == 7.0);
    CHECK(code_of([&] { apply_config_text(c, "hidden 200\n"); }) == ErrorCode::format);
  }
  SUBCASE("dump is sorted and parses back") {
    c.hidden = 321;
    const std::string d = c.dump();
    RunConfig back;
    apply_config_text(back, d);
    CHECK(back == c);
    std::vector<std::string> keys;
    std::istringstream in(d);
    for (std::string line; std::getline(in, line);) keys.push_back(line.substr(0, line.find(' ')));
    CHECK(std::is_sorted(keys.begin(), keys.end()));
    CHECK(keys.size() == config_keys().size());
  }
}

TEST_CASE("corpus paths") {
  oracle::TempDir dir("paths");
  write_file(dir.path / "t.txt", "a b\n");
  CHECK(resolve_data_path((dir.path / "t.txt").string()) == dir.path / "t.txt");
  ::setenv(kDataDirEnv, dir.path.c_str(), 1);
  CHECK(resolve_data_path("t.txt") == dir.path / "t.txt");
  ::unsetenv(kDataDirEnv);
  CHECK(code_of([] { resolve_data_path("/no/such/file.txt"); }) == ErrorCode::io);

  RunConfig c = profile_config("tiny");
  c.train = (dir.path / "t.txt").string();
  c.valid = (dir.path / "missing.txt").string();
  c.test = c.train;
  try {
    load_dataset(c);
    FAIL("missing corpus accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::io);
    CHECK(std::string(e.what()).find("missing.txt") != std::string::npos);
  }
}

TEST_CASE("strict encoding rejects unknown words") {
  Dataset d = make_dataset("a b c\n", "a b\n", "c a\n");
  CHECK(d.vocab.size() == 5);
  CHECK(encode_strict(std::vector<std::string>{"a", "<eos>"}, d.vocab).size() == 2);
  try {
    encode_strict(std::vector<std::string>{"a", "zebra"}, d.vocab);
    FAIL("unknown word accepted");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("zebra") != std::string::npos);
  }
}

TEST_CASE("metric rows") {
  MetricRow r{3, 12.5, 20.25, 30.0, true};
  CHECK(format_metric_row(r) == "3\t12.5000\t20.2500\t30\t1");
  CHECK(std::string(kMetricHeader) == "epoch\ttrain_ppl\tvalid_ppl\tlr\ttriggered");
}

TEST_CASE("checkpoints") {
  Dataset data = tiny_dataset();
  RunConfig cfg = quick_config(8);
  cfg.nonmono = 1;
  Trainer t(cfg, data);
  while (!t.finished()) t.run_epoch();
  const Checkpoint ckpt = t.checkpoint();
  const std::string bytes = serialize_checkpoint(ckpt);

  SUBCASE("serialize, parse, serialize is byte-identical") {
    const Checkpoint back = parse_checkpoint(bytes);
    CHECK(serialize_checkpoint(back) == bytes);
    CHECK(same_parameters(back.params, ckpt.params));
    CHECK(back.state == ckpt.state);
    CHECK(back.metrics == ckpt.metrics);
    CHECK(back.rng_counter == ckpt.rng_counter);
    CHECK(back.vocab == ckpt.vocab);
    CHECK(same_parameters(back.model(), ckpt.model()));
  }
  SUBCASE("file round trip") {
    oracle::TempDir dir("ckpt");
    save_checkpoint(dir.path / "m.ckpt", ckpt);
    CHECK(serialize_checkpoint(load_checkpoint(dir.path / "m.ckpt")) == bytes);
    CHECK(code_of([&] { load_checkpoint(dir.path / "absent.ckpt"); }) == ErrorCode::io);
  }
  SUBCASE("damaged files are rejected") {
    auto expect = [&](const std::string& b, const std::string& fragment) {
      try {
        parse_checkpoint(b);
        FAIL("damaged checkpoint accepted");
      } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::format);
        CHECK(std::string(e.what()).find(fragment) != std::string::npos);
      }
    };
    expect(bytes.substr(0, bytes.size() / 2), "truncated");
    expect(bytes.substr(0, 10), "truncated");
    std::string magic = bytes;
    magic[0] = 'X';
    expect(magic, "bad magic");
    std::string version = bytes;
    version[7] = 9;
    expect(version, "version");
    std::string flipped = bytes;
    flipped[bytes.size() / 2] ^= 0x40;
    expect(flipped, "CRC");
    expect(bytes + "x", "trailing");
  }
}

TEST_CASE("training is deterministic") {
  Dataset data = tiny_dataset();
  RunConfig cfg = quick_config(6);
  std::vector<std::string> log1, log2;
  train(cfg, data, RunOptions{{}, [&](const std::string& s) { log1.push_back(s); }});
  train(cfg, data, RunOptions{{}, [&](const std::string& s) { log2.push_back(s); }});
  CHECK(log1 == log2);
  CHECK(std::find(log1.begin(), log1.end(), "# alpha = 0.02") != log1.end());
  CHECK(std::find(log1.begin(), log1.end(), std::string(kMetricHeader)) != log1.end());
  cfg.seed = 2;
  std::vector<std::string> log3;
  train(cfg, data, RunOptions{{}, [&](const std::string& s) { log3.push_back(s); }});
  CHECK(log3 != log1);
}

TEST_CASE("an interrupted run resumes exactly") {
  Dataset data = tiny_dataset();
  RunConfig cfg = quick_config(20);
  cfg.nonmono = 2;
  Trainer whole(cfg, data);
  while (!whole.finished()) whole.run_epoch();

  RunConfig first = cfg;
  first.epochs = 9;
  Trainer part(first, data);
  while (!part.finished()) part.run_epoch();
  const Checkpoint snap = parse_checkpoint(serialize_checkpoint(part.checkpoint()));
  Trainer rest = Trainer::resume(snap, cfg, data);
  while (!rest.finished()) rest.run_epoch();

  CHECK(rest.metrics() == whole.metrics());
  CHECK(rest.state() == whole.state());
  CHECK(serialize_checkpoint(rest.checkpoint()) == serialize_checkpoint(whole.checkpoint()));

  RunConfig changed = cfg;
  changed.hidden = 30;
  CHECK(code_of([&] { Trainer::resume(snap, changed, data); }) == ErrorCode::state);
}

TEST_CASE("fine-tuning") {
  Dataset data = tiny_dataset();
  RunConfig cfg = quick_config(40);
  const Checkpoint trained = train(cfg, data);
  const double before = evaluate(trained, data.valid, cfg.eval_batch, cfg.bptt);

  SUBCASE("a zero-epoch budget returns the input weights") {
    const Checkpoint tuned = fine_tune(trained, cfg, data);
    CHECK(same_parameters(tuned.model(), trained.model()));
    CHECK(tuned.phase == "finetune");
  }
  SUBCASE("fine-tuning does not degrade validation perplexity") {
    RunConfig ft = cfg;
    ft.finetune_epochs = 15;
    const Checkpoint tuned = fine_tune(trained, ft, data);
    CHECK(tuned.state.triggered);
    CHECK(tuned.state.trigger == 0);
    const double after = evaluate(tuned, data.valid, cfg.eval_batch, cfg.bptt);
    CHECK(after <= before * 1.05);
  }
  SUBCASE("the stopping rule fires on stagnation") {
    // Held-out text from the same word pool: the training text gets
    // memorised, so validation perplexity stops improving.
    const std::string train_text = synthesize_random_text(200, 20, 10, 3);
    Dataset held = make_dataset(train_text, synthesize_random_text(200, 20, 10, 4), train_text);
    RunConfig ft = cfg;
    ft.finetune_epochs = 200;
    ft.nonmono = 1;
    const Checkpoint start = train(cfg, held);
    Trainer t = Trainer::fine_tune_from(start, ft, held);
    while (!t.finished()) t.run_epoch();
    const auto& m = t.metrics();
    REQUIRE(m.size() >= 3);
    CHECK(m.size() < 200);
    std::vector<double> logs;
    for (std::size_t i = 0; i + 1 < m.size(); ++i) logs.push_back(m[i].valid_ppl);
    CHECK(oracle::algorithm1_triggers(logs, m.back().valid_ppl, 1));
    logs.pop_back();
    CHECK_FALSE(oracle::algorithm1_triggers(logs, m[m.size() - 2].valid_ppl, 1));
  }
}

TEST_CASE("evaluation") {
  Dataset data = tiny_dataset();
  RunConfig cfg = quick_config(20);
  Trainer t(cfg, data);
  while (!t.finished()) t.run_epoch();
  const Checkpoint ckpt = t.checkpoint();

  SUBCASE("evaluation draws no random numbers") {
    const double a = evaluate(ckpt, data.valid, 2, 20);
    CHECK(evaluate(ckpt, data.valid, 2, 20) == a);
    // Same training stream, validation sets of different lengths: if
    // validation sampled anything the generators would drift apart.
    const std::string text = synthesize_random_text(200, 20, 10, 3);
    Dataset short_valid = make_dataset(text, text.substr(0, 60), text);
    Trainer x(cfg, data), y(cfg, short_valid);
    REQUIRE(short_valid.vocab == data.vocab);
    REQUIRE(short_valid.valid.size() < data.valid.size());
    for (int e = 0; e < 3; ++e) {
      x.run_epoch();
      y.run_epoch();
      CHECK(x.rng().counter() == y.rng().counter());
    }
  }
  SUBCASE("batch size barely matters") {
    std::vector<int> ids;
    for (int r = 0; r < 10; ++r) ids.insert(ids.end(), data.valid.begin(), data.valid.begin() + 200);
    const double one = evaluate(ckpt, ids, 1, 20);
    const double two = evaluate(ckpt, ids, 2, 20);
    CHECK(std::abs(one - two) / one < 1e-3);
  }
  SUBCASE("corpus files") {
    oracle::TempDir dir("eval");
    write_file(dir.path / "bad.txt", "w1 unseenword\n");
    CHECK(code_of([&] { evaluate(ckpt, dir.path / "bad.txt", 1, 20); }) == ErrorCode::invalid_argument);
    CHECK(code_of([&] { evaluate(ckpt, dir.path / "none.txt", 1, 20); }) == ErrorCode::io);
  }
  SUBCASE("uniform model") {
    Checkpoint zero = ckpt;
    for (auto* p : zero.params.tensors()) p->fill(0.0f);
    zero.state = TrainerState{};
    CHECK(evaluate(zero, data.valid, 2, 20) == doctest::Approx(static_cast<double>(data.vocab.size())).epsilon(1e-6));
  }
}

TEST_CASE("ablations") {
  RunConfig base = profile_config("tiny");
  SUBCASE("each ablation changes only its own keys") {
    const std::map<std::string, std::vector<std::string>> expected = {
        {"baseline", {}},
        {"fine-tuning", {"finetune_epochs"}},
        {"nt-asgd", {"optimizer"}},
        {"variable-lengths", {"variable_length"}},
        {"embedding-dropout", {"dropoute"}},
        {"weight-decay", {"wdecay"}},
        {"ar-tar", {"alpha", "beta"}},
        {"full-sized-embedding", {"embed"}},
        {"weight-dropping", {"wdrop"}},
    };
    CHECK(ablation_names().size() == expected.size());
    for (const auto& name : ablation_names()) {
      CAPTURE(name);
      REQUIRE(expected.count(name));
      CHECK(config_diff(base, ablation_config(base, name)) == expected.at(name));
    }
    CHECK(ablation_config(base, "ar-tar").alpha == 0.0);
    CHECK(ablation_config(base, "nt-asgd").optimizer == "sgd");
  }
  SUBCASE("full-sized embedding has more parameters") {
    RunConfig big = ablation_config(base, "full-sized-embedding");
    CHECK(big.embed == big.hidden);
    Rng r1(1), r2(1);
    auto p0 = init_parameters<float>(base.model_shape(100), r1);
    auto p1 = init_parameters<float>(big.model_shape(100), r2);
    CHECK(p1.parameter_count() > p0.parameter_count());
  }
  SUBCASE("unknown names list the valid ones") {
    try {
      ablation_config(base, "dropout-everything");
      FAIL("unknown ablation accepted");
    } catch (const Error& e) {
      const std::string msg = e.what();
      CHECK(msg.find("dropout-everything") != std::string::npos);
      CHECK(msg.find("weight-dropping") != std::string::npos);
    }
  }
  SUBCASE("ar-tar ablation at tiny scale") {
    Dataset data = tiny_dataset();
    RunConfig cfg = quick_config(3);
    cfg.finetune_epochs = 2;
    std::vector<std::string> log;
    AblationRow row = run_ablation(cfg, "ar-tar", data, RunOptions{{}, [&](const std::string& s) { log.push_back(s); }});
    CHECK(row.name == "ar-tar");
    CHECK(row.valid_ppl > 0.0);
    CHECK(row.test_ppl > 0.0);
    CHECK(std::find(log.begin(), log.end(), "# alpha = 0") != log.end());
    CHECK(std::find(log.begin(), log.end(), "# beta = 0") != log.end());
    CHECK(format_ablation_row(row).rfind("-- ar-tar\t", 0) == 0);
  }
}
