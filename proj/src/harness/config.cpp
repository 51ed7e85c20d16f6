// SPDX-License-Identifier: Apache-2.0
#include "harness/config.hpp"

#include <algorithm>
#include <charconv>
#include <concepts>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>

#include "common/error.hpp"

namespace awdlm {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string format(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}
template <std::unsigned_integral U>
std::string format(U v) {
  return std::to_string(v);
}
std::string format(bool v) { return v ? "true" : "false"; }
std::string format(const std::string& v) { return v; }

void parse(const std::string& key, const std::string& text, double& out) {
  const char* first = text.data();
  const char* last = first + text.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  if (ec != std::errc() || ptr != last) fail(ErrorCode::invalid_argument, key + ": not a number: '" + text + "'");
}

template <std::unsigned_integral U>
void parse(const std::string& key, const std::string& text, U& out) {
  const char* first = text.data();
  const char* last = first + text.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  if (ec != std::errc() || ptr != last)
    fail(ErrorCode::invalid_argument, key + ": not a non-negative integer: '" + text + "'");
}

void parse(const std::string& key, const std::string& text, bool& out) {
  if (text == "true" || text == "1" || text == "yes" || text == "on") {
    out = true;
  } else if (text == "false" || text == "0" || text == "no" || text == "off") {
    out = false;
  } else {
    fail(ErrorCode::invalid_argument, key + ": not a boolean: '" + text + "'");
  }
}

void parse(const std::string&, const std::string& text, std::string& out) { out = text; }

struct KeySpec {
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
};

#define AWDLM_KEY(name)                                                     \
  {                                                                         \
    #name, KeySpec {                                                        \
      [](const RunConfig& c) { return format(c.name); },                    \
      [](RunConfig& c, const std::string& v) { parse(#name, v, c.name); }   \
    }                                                                       \
  }

const std::map<std::string, KeySpec>& key_table() {
  static const std::map<std::string, KeySpec> table = {
      AWDLM_KEY(profile),   AWDLM_KEY(layers),     AWDLM_KEY(hidden),          AWDLM_KEY(embed),
      AWDLM_KEY(batch),     AWDLM_KEY(eval_batch), AWDLM_KEY(test_batch),      AWDLM_KEY(bptt),
      AWDLM_KEY(bptt_std),  AWDLM_KEY(bptt_prob),  AWDLM_KEY(variable_length), AWDLM_KEY(dropouti),
      AWDLM_KEY(dropouth),  AWDLM_KEY(dropout),    AWDLM_KEY(dropoute),        AWDLM_KEY(wdrop),
      AWDLM_KEY(alpha),     AWDLM_KEY(beta),       AWDLM_KEY(lr),              AWDLM_KEY(clip),
      AWDLM_KEY(wdecay),    AWDLM_KEY(epochs),     AWDLM_KEY(nonmono),         AWDLM_KEY(optimizer),
      AWDLM_KEY(finetune_epochs), AWDLM_KEY(train), AWDLM_KEY(valid),           AWDLM_KEY(test),
      AWDLM_KEY(vocab_cap), AWDLM_KEY(seed),
  };
  return table;
}

#undef AWDLM_KEY

const KeySpec& lookup(const std::string& key) {
  const auto& table = key_table();
  auto it = table.find(key);
  if (it == table.end()) {
    std::string known;
    for (const auto& [k, _] : table) known += (known.empty() ? "" : ", ") + k;
    fail(ErrorCode::invalid_argument, "unknown config key '" + key + "' (known: " + known + ")");
  }
  return it->second;
}

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> out;
    for (const auto& [k, _] : key_table()) out.push_back(k);
    return out;
  }();
  return keys;
}

void RunConfig::set(const std::string& key, const std::string& value) { lookup(key).set(*this, trim(value)); }

std::string RunConfig::get(const std::string& key) const { return lookup(key).get(*this); }

std::map<std::string, std::string> RunConfig::to_map() const {
  std::map<std::string, std::string> out;
  for (const auto& [k, spec] : key_table()) out[k] = spec.get(*this);
  return out;
}

std::string RunConfig::dump() const {
  std::string out;
  for (const auto& [k, v] : to_map()) out += k + " = " + v + "\n";
  return out;
}

void RunConfig::validate() const {
  AWDLM_REQUIRE(layers >= 1, "layers must be at least 1");
  AWDLM_REQUIRE(hidden >= 1 && embed >= 1, "hidden and embed must be positive");
  AWDLM_REQUIRE(embed <= hidden, "embed must not exceed hidden");
  AWDLM_REQUIRE(batch >= 1 && eval_batch >= 1 && test_batch >= 1, "batch sizes must be positive");
  AWDLM_REQUIRE(bptt >= 1, "bptt must be positive");
  AWDLM_REQUIRE(lr > 0.0, "lr must be positive");
  AWDLM_REQUIRE(clip > 0.0, "clip must be positive");
  AWDLM_REQUIRE(wdecay >= 0.0, "wdecay must be non-negative");
  AWDLM_REQUIRE(alpha >= 0.0 && beta >= 0.0, "alpha and beta must be non-negative");
  AWDLM_REQUIRE(nonmono >= 1, "nonmono must be at least 1");
  AWDLM_REQUIRE(optimizer == "ntasgd" || optimizer == "sgd",
                "optimizer must be 'ntasgd' or 'sgd', got '" + optimizer + "'");
  dropout_rates().validate();
  bptt_schedule().validate();
}

DropoutRates RunConfig::dropout_rates() const { return {dropouti, dropouth, dropout, dropoute, wdrop}; }

BpttSchedule RunConfig::bptt_schedule() const {
  if (!variable_length) return BpttSchedule::fixed(bptt);
  return BpttSchedule::with_default_clamps(bptt, bptt_prob, bptt_std);
}

ModelShape RunConfig::model_shape(std::size_t vocab) const {
  ModelShape s{vocab, embed, hidden, layers};
  s.validate();
  return s;
}

RunConfig profile_config(const std::string& name) {
  RunConfig c;
  if (name == "ptb") return c;
  if (name == "wt2") {
    c.profile = "wt2";
    c.batch = 80;
    c.dropouti = 0.65;
    return c;
  }
  if (name == "tiny") {
    c.profile = "tiny";
    c.layers = 2;
    c.hidden = 64;
    c.embed = 32;
    c.batch = 4;
    c.eval_batch = 4;
    c.test_batch = 1;
    c.bptt = 20;
    c.bptt_std = 2.0;
    c.dropouti = 0.1;
    c.dropouth = 0.1;
    c.dropout = 0.1;
    c.dropoute = 0.05;
    c.wdrop = 0.2;
    c.alpha = 0.02;
    c.beta = 0.02;
    c.lr = 10.0;
    c.epochs = 300;
    c.finetune_epochs = 30;
    return c;
  }
  fail(ErrorCode::invalid_argument, "unknown profile '" + name + "' (known: ptb, wt2, tiny)");
}

void apply_config_text(RunConfig& config, const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      fail(ErrorCode::format, "config line " + std::to_string(number) + ": expected 'key = value'");
    config.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
}

void apply_config_file(RunConfig& config, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io, "cannot open config file " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  apply_config_text(config, text.str());
}

std::vector<std::string> config_diff(const RunConfig& a, const RunConfig& b) {
  std::vector<std::string> out;
  const auto ma = a.to_map();
  const auto mb = b.to_map();
  for (const auto& [k, v] : ma)
    if (mb.at(k) != v) out.push_back(k);
  return out;
}

std::filesystem::path resolve_data_path(const std::string& path) {
  std::filesystem::path p(path);
  if (std::filesystem::exists(p)) return p;
  if (p.is_relative()) {
    if (const char* dir = std::getenv(kDataDirEnv); dir && *dir) {
      const auto candidate = std::filesystem::path(dir) / p;
      if (std::filesystem::exists(candidate)) return candidate;
    }
  }
  fail(ErrorCode::io, "corpus file not found: " + path);
}

}  // namespace awdlm
