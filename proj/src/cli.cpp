// Copyright 2026 The causex Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "causex/cli.hpp"

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include "CLI11.hpp"
#include "causex/corpus.hpp"
#include "causex/embeddings.hpp"
#include "causex/error.hpp"
#include "causex/explain.hpp"
#include "causex/model.hpp"
#include "causex/report.hpp"
#include "causex/rng.hpp"
#include "causex/similarity.hpp"
#include "json.hpp"

namespace causex {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr std::string_view kModule = "cli";
constexpr int kManifestVersion = 1;

struct Options {
  // inputs
  std::string data;
  std::string format;
  std::string embeddings;
  int dim = 100;
  std::string model;
  std::string explanations;
  std::vector<std::string> scores;
  std::vector<std::string> metrics;
  std::string split_name = "test";
  // prepare
  size_t n_train = SplitCounts{}.train;
  size_t n_val = SplitCounts{}.validation;
  size_t n_test = SplitCounts{}.test;
  // train
  std::string arch = "cnn";
  int epochs = 20;
  int batch_size = 128;
  int max_len = 265;
  double lr = 1.46e-3;
  bool trainable_embeddings = false;
  // explain
  std::string method = "lime";
  int samples = 1000;
  double kernel_width = 25.0;
  double ridge = 1.0;
  int steps = 300;
  std::string baseline = "zero_embedding";
  int topk = 10;
  bool gold_target = false;
  // similarity
  std::string measure = "cosine";
  std::string solver = "exact";
  std::string cost = "sqeuclidean";
  double epsilon = 0.0;
  bool keep_stopwords = false;
  // common
  uint64_t seed = 0;
  int jobs = 1;
  std::string out;
  std::string config;
  std::string expect_manifest;
};

// Options that never change output bytes and are left out of manifests.
const std::vector<std::string> kUnrecorded = {"help", "config", "jobs", "out", "expect-manifest"};

void add_common(CLI::App* sub, Options& o, bool with_seed) {
  sub->add_option("--config", o.config, "JSON file of flag values (explicit flags win)");
  sub->add_option("--jobs", o.jobs, "worker threads")->check(CLI::PositiveNumber);
  sub->add_option("--out", o.out, "output path");
  if (with_seed) sub->add_option("--seed", o.seed, "random seed");
}

void add_data_format(CLI::App* sub, Options& o) {
  sub->add_option("--format", o.format, "csv|jsonl (default: from the file extension)")
      ->check(CLI::IsMember({"csv", "jsonl"}));
}

void add_embeddings(CLI::App* sub, Options& o) {
  sub->add_option("--embeddings", o.embeddings, "pretrained vectors, `token f1 ... fd` per line");
  sub->add_option("--dim", o.dim, "embedding dimension")->check(CLI::PositiveNumber);
}

void add_train_flags(CLI::App* sub, Options& o) {
  sub->add_option("--epochs", o.epochs)->check(CLI::PositiveNumber);
  sub->add_option("--batch-size", o.batch_size)->check(CLI::PositiveNumber);
  sub->add_option("--max-len", o.max_len)->check(CLI::PositiveNumber);
  sub->add_option("--lr", o.lr, "learning rate (default 1.46e-3, 0.0005 for cnn_lstm)")
      ->check(CLI::PositiveNumber);
  sub->add_flag("--trainable-embeddings", o.trainable_embeddings);
}

void add_explain_flags(CLI::App* sub, Options& o) {
  sub->add_option("--samples", o.samples, "LIME perturbation samples")->check(CLI::Range(10, 1000000));
  sub->add_option("--kernel-width", o.kernel_width)->check(CLI::PositiveNumber);
  sub->add_option("--ridge", o.ridge, "LIME ridge penalty")->check(CLI::PositiveNumber);
  sub->add_option("--steps", o.steps, "IG Riemann steps")->check(CLI::PositiveNumber);
  sub->add_option("--baseline", o.baseline, "IG baseline")
      ->check(CLI::IsMember({"zero_embedding", "pad_token"}));
  sub->add_flag("--gold-target", o.gold_target, "explain the gold class instead of the prediction");
}

void add_similarity_flags(CLI::App* sub, Options& o) {
  sub->add_option("--solver", o.solver)->check(CLI::IsMember({"exact", "sinkhorn"}));
  sub->add_option("--cost", o.cost, "WMD ground cost")->check(CLI::IsMember({"sqeuclidean", "euclidean"}));
  sub->add_option("--epsilon", o.epsilon, "Sinkhorn epsilon (default 0.01 * mean cost)");
  sub->add_flag("--keep-stopwords", o.keep_stopwords);
}

void add_topk(CLI::App* sub, Options& o) {
  sub->add_option("--topk", o.topk, "keywords per explanation")->check(CLI::PositiveNumber);
}

// Values from --config fill every option that was not given explicitly.
void apply_config(CLI::App* sub, const Options& o) {
  if (o.config.empty()) return;
  json j;
  try {
    j = json::parse(read_file(o.config, kModule));
  } catch (const json::exception& e) {
    fail(ErrorKind::kSchema, kModule, "config " + o.config + ": " + e.what());
  }
  if (!j.is_object()) fail(ErrorKind::kSchema, kModule, "config " + o.config + " must hold a JSON object");
  for (const auto& [key, value] : j.items()) {
    CLI::Option* opt = sub->get_option_no_throw("--" + key);
    if (opt == nullptr || key == "config") {
      fail(ErrorKind::kInvalidArgument, kModule,
           "config key '" + key + "' is not a flag of '" + sub->get_name() + "'");
    }
    if (opt->count() > 0) continue;
    auto text = [](const json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); };
    if (value.is_array()) {
      for (const auto& v : value) opt->add_result(text(v));
    } else {
      opt->add_result(text(value));
    }
    try {
      opt->run_callback();
    } catch (const CLI::Error& e) {
      fail(ErrorKind::kInvalidArgument, kModule, "config key '" + key + "': " + e.what());
    }
  }
}

bool given(const CLI::App* sub, const std::string& flag) {
  const CLI::Option* opt = sub->get_option_no_throw(flag);
  return opt != nullptr && opt->count() > 0;
}

void require(const CLI::App* sub, std::initializer_list<const char*> flags) {
  for (const char* f : flags) {
    if (!given(sub, f)) {
      fail(ErrorKind::kInvalidArgument, kModule, sub->get_name() + ": missing required flag " + f);
    }
  }
}

json recorded_flags(const CLI::App* sub) {
  json j = json::object();
  for (const CLI::Option* opt : sub->get_options()) {
    const std::string name = opt->get_single_name();
    if (std::find(kUnrecorded.begin(), kUnrecorded.end(), name) != kUnrecorded.end()) continue;
    if (opt->get_expected_max() == 0) {
      j[name] = opt->count() > 0;
    } else if (opt->count() > 0) {
      const auto& res = opt->results();
      j[name] = res.size() == 1 && opt->get_expected_max() <= 1 ? json(res.front()) : json(res);
    } else {
      j[name] = opt->get_default_str();
    }
  }
  return j;
}

json input_entry(const fs::path& path) {
  json e;
  e["path"] = path.generic_string();
  if (fs::is_directory(path)) {
    e["files"] = json::object();
    for (const char* f : {"train.jsonl", "val.jsonl", "test.jsonl", "split.json"}) {
      if (fs::exists(path / f)) e["files"][f] = file_sha256(path / f);
    }
  } else {
    e["sha256"] = file_sha256(path);
  }
  return e;
}

void write_json(const fs::path& path, const json& j) { write_file(path, j.dump(2) + "\n", kModule); }

void ensure_parent(const fs::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
    if (ec) fail(ErrorKind::kIo, kModule, "cannot create " + path.parent_path().string() + ": " + ec.message());
  }
}

// Manifest beside a single-file output: <file>.manifest.json.
void write_file_manifest(const CLI::App* sub, const fs::path& output, const json& inputs) {
  json m;
  m["version"] = kManifestVersion;
  m["command"] = sub->get_name();
  m["flags"] = recorded_flags(sub);
  m["inputs"] = inputs;
  m["outputs"] = {{output.filename().generic_string(), file_sha256(output)}};
  write_json(fs::path(output.string() + ".manifest.json"), m);
}

DataFormat data_format(const Options& o) {
  if (!o.format.empty()) return parse_data_format(o.format);
  const std::string ext = fs::path(o.data).extension().string();
  return ext == ".jsonl" || ext == ".json" ? DataFormat::kJsonl : DataFormat::kCsv;
}

EmbeddingTable read_embeddings(const Options& o, std::ostream& err) {
  std::vector<std::string> warnings;
  EmbeddingTable table = load_embeddings(o.embeddings, o.dim, &warnings);
  for (const auto& w : warnings) err << "warning [embeddings]: " << w << "\n";
  return table;
}

const std::vector<Document>& split_part(const CorpusSplit& s, const std::string& name) {
  if (name == "train") return s.train;
  if (name == "val") return s.validation;
  return s.test;
}

std::vector<Document> all_documents(const CorpusSplit& s) {
  std::vector<Document> docs = s.train;
  docs.insert(docs.end(), s.validation.begin(), s.validation.end());
  docs.insert(docs.end(), s.test.begin(), s.test.end());
  return docs;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

// ---- phase implementations shared by the subcommands and `pipeline` ------

CorpusSplit do_prepare(const Options& o, uint64_t seed) {
  const auto docs = load_dataset(o.data, data_format(o));
  return split(docs, SplitCounts{o.n_train, o.n_val, o.n_test}, seed);
}

Model do_train(const Options& o, ArchKind kind, const CorpusSplit& s, const EmbeddingTable& table,
               uint64_t seed, bool lr_given, std::ostream& err) {
  Architecture arch = Architecture::defaults(kind);
  arch.trainable_embeddings = o.trainable_embeddings;
  std::vector<std::string> vocab;
  std::unordered_set<std::string> seen;
  for (const auto& d : s.train) {
    for (const auto& t : d.tokens) {
      if (seen.insert(t).second) vocab.push_back(t);
    }
  }
  TrainConfig cfg = TrainConfig::defaults_for(kind);
  cfg.epochs = o.epochs;
  cfg.batch_size = o.batch_size;
  if (lr_given) cfg.learning_rate = o.lr;
  cfg.seed = seed;
  Model model = init_model(arch, table, seed, vocab, o.max_len);
  auto result = train(std::move(model), s.train, s.validation, cfg, o.jobs);
  const auto& last = result.history.back();
  err << "[train] " << arch_id(kind) << ": " << cfg.epochs << " epochs, final loss "
      << last.train_loss;
  if (last.val_accuracy) err << ", validation accuracy " << *last.val_accuracy;
  err << "\n";
  // Round-trip through the file format so that later phases see exactly
  // the stored float32 parameters.
  return model_from_bytes(model_to_bytes(result.model));
}

json metrics_json(const Model& model, const MetricsReport& m, const std::string& split_name) {
  json j = metrics_to_json(m);
  j["model"] = std::string(arch_label(model.architecture().kind));
  j["split"] = split_name;
  return j;
}

std::vector<Explanation> do_explain(const Options& o, const Model& model, ExplainMethod method,
                                    std::span<const Document> docs, uint64_t seed) {
  ExplainRunConfig cfg;
  cfg.method = method;
  cfg.lime.n_samples = o.samples;
  cfg.lime.kernel_width = o.kernel_width;
  cfg.lime.ridge_lambda = o.ridge;
  cfg.lime.seed = seed;
  cfg.ig.steps = o.steps;
  cfg.ig.baseline = parse_baseline(o.baseline);
  cfg.gold_target = o.gold_target;
  cfg.jobs = o.jobs;
  cfg.lime.validate();
  cfg.ig.validate();
  return explain_documents(model, docs, cfg);
}

std::string explanations_jsonl(std::span<const Explanation> expl, int topk) {
  std::string out;
  for (const auto& e : expl) out += explanation_to_json(e, topk).dump() + "\n";
  return out;
}

std::vector<Explanation> read_explanations(const fs::path& path) {
  const std::string text = read_file(path, kModule);
  std::vector<Explanation> out;
  std::istringstream in(text);
  std::string line;
  size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      fail(ErrorKind::kSchema, kModule, path.string() + " line " + std::to_string(n) + ": " + e.what());
    }
    out.push_back(explanation_from_json(j));
  }
  return out;
}

SimilarityOptions similarity_options(const Options& o) {
  SimilarityOptions s;
  s.remove_stopwords = !o.keep_stopwords;
  s.cost = parse_ground_cost(o.cost);
  s.solver = parse_solver(o.solver);
  s.sinkhorn_epsilon = o.epsilon;
  return s;
}

// Report rows and F1 vectors -> consistency results, matching each
// "<model>+<method>" row to the F1 row of <model>.
ReportInputs assemble_report(const std::vector<ScoreRecord>& records, std::vector<F1Row> f1_rows) {
  ReportInputs in;
  for (Measure m : {Measure::kCosine, Measure::kWmd}) {
    std::vector<ScoreRecord> subset;
    for (const auto& r : records) {
      if (r.measure == m) subset.push_back(r);
    }
    for (auto& rep : class_tables(subset, m)) in.reports.push_back(std::move(rep));
  }
  for (const auto& rep : in.reports) {
    const std::string model = rep.method.substr(0, rep.method.find('+'));
    for (const auto& row : f1_rows) {
      if (row.model == model) {
        in.consistency.push_back(consistency_for(rep, row.metrics.per_class_f1));
        break;
      }
    }
  }
  in.f1_rows = std::move(f1_rows);
  return in;
}

// ---- subcommands ----------------------------------------------------------

int cmd_prepare(CLI::App* sub, const Options& o, std::ostream& err) {
  require(sub, {"--data", "--out"});
  const CorpusSplit s = do_prepare(o, o.seed);
  write_split(s, o.out);
  json m;
  m["version"] = kManifestVersion;
  m["command"] = "prepare";
  m["flags"] = recorded_flags(sub);
  m["inputs"] = {{"data", input_entry(o.data)}};
  m["outputs"] = build_manifest(o.out, json::object(), fs::path(o.out) / "manifest.json")["files"];
  write_json(fs::path(o.out) / "manifest.json", m);
  err << "[prepare] " << s.train.size() << " train, " << s.validation.size() << " validation, "
      << s.test.size() << " test documents\n";
  return kExitOk;
}

int cmd_train(CLI::App* sub, const Options& o, std::ostream& err) {
  require(sub, {"--data", "--embeddings", "--out"});
  const CorpusSplit s = read_split(o.data);
  const EmbeddingTable table = read_embeddings(o, err);
  const Model model = do_train(o, parse_arch(o.arch), s, table, o.seed, given(sub, "--lr"), err);
  ensure_parent(o.out);
  save_model(o.out, model);
  write_file_manifest(sub, o.out, {{"data", input_entry(o.data)}, {"embeddings", input_entry(o.embeddings)}});
  return kExitOk;
}

int cmd_evaluate(CLI::App* sub, const Options& o, std::ostream& err) {
  require(sub, {"--model", "--data", "--out"});
  const Model model = load_model(o.model);
  const CorpusSplit s = read_split(o.data);
  const MetricsReport m = evaluate(model, split_part(s, o.split_name), o.jobs);
  ensure_parent(o.out);
  write_json(o.out, metrics_json(model, m, o.split_name));
  write_file_manifest(sub, o.out, {{"model", input_entry(o.model)}, {"data", input_entry(o.data)}});
  err << "[evaluate] accuracy " << m.accuracy << "\n";
  return kExitOk;
}

int cmd_explain(CLI::App* sub, const Options& o, std::ostream& err) {
  require(sub, {"--model", "--data", "--out"});
  const Model model = load_model(o.model);
  const CorpusSplit s = read_split(o.data);
  const auto& docs = split_part(s, o.split_name);
  const auto expl = do_explain(o, model, parse_method(o.method), docs, o.seed);
  ensure_parent(o.out);
  write_file(o.out, explanations_jsonl(expl, o.topk), kModule);
  write_file_manifest(sub, o.out, {{"model", input_entry(o.model)}, {"data", input_entry(o.data)}});
  err << "[explain] " << expl.size() << " documents\n";
  return kExitOk;
}

int cmd_similarity(CLI::App* sub, const Options& o, std::ostream& err) {
  require(sub, {"--explanations", "--data", "--embeddings", "--out"});
  const auto expl = read_explanations(o.explanations);
  const auto docs = all_documents(read_split(o.data));
  const EmbeddingTable table = read_embeddings(o, err);
  const auto records = score_explanations(expl, docs, table, parse_measure(o.measure), o.topk,
                                          similarity_options(o), o.jobs);
  ensure_parent(o.out);
  write_file(o.out, scores_to_csv(records), kModule);
  write_file_manifest(sub, o.out,
                      {{"explanations", input_entry(o.explanations)},
                       {"data", input_entry(o.data)},
                       {"embeddings", input_entry(o.embeddings)}});
  const auto usable = std::count_if(records.begin(), records.end(), [](const ScoreRecord& r) { return r.usable(); });
  err << "[similarity] " << usable << " of " << records.size() << " records usable\n";
  return kExitOk;
}

int cmd_report(CLI::App* sub, const Options& o, std::ostream& err) {
  require(sub, {"--scores", "--out"});
  std::vector<ScoreRecord> records;
  json inputs = json::object();
  for (const auto& p : o.scores) {
    auto r = scores_from_csv(read_file(p, kModule));
    records.insert(records.end(), r.begin(), r.end());
    inputs["scores"].push_back(input_entry(p));
  }
  std::vector<F1Row> f1_rows;
  for (const auto& p : o.metrics) {
    json j;
    try {
      j = json::parse(read_file(p, kModule));
      f1_rows.push_back({j.at("model").get<std::string>(), metrics_from_json(j)});
    } catch (const json::exception& e) {
      fail(ErrorKind::kSchema, kModule, "metrics file " + p + ": " + e.what());
    }
    inputs["metrics"].push_back(input_entry(p));
  }
  const auto written = render_report(assemble_report(records, std::move(f1_rows)), o.out);
  json m;
  m["version"] = kManifestVersion;
  m["command"] = "report";
  m["flags"] = recorded_flags(sub);
  m["inputs"] = inputs;
  m["outputs"] = build_manifest(o.out, json::object(), fs::path(o.out) / "manifest.json")["files"];
  write_json(fs::path(o.out) / "manifest.json", m);
  err << "[report] wrote " << written.size() << " files to " << o.out << "\n";
  return kExitOk;
}

std::vector<ArchKind> arch_list(const std::string& s) {
  if (s == "all") return {ArchKind::kLstm, ArchKind::kBiLstm, ArchKind::kCnn, ArchKind::kCnnLstm};
  std::vector<ArchKind> out;
  for (const auto& a : split_list(s)) out.push_back(parse_arch(a));
  if (out.empty()) fail(ErrorKind::kInvalidArgument, kModule, "--arch is empty");
  return out;
}

std::vector<ExplainMethod> method_list(const std::string& s) {
  if (s == "all") return {ExplainMethod::kLime, ExplainMethod::kIg};
  std::vector<ExplainMethod> out;
  for (const auto& m : split_list(s)) out.push_back(parse_method(m));
  if (out.empty()) fail(ErrorKind::kInvalidArgument, kModule, "--method is empty");
  return out;
}

std::vector<Measure> measure_list(const std::string& s) {
  if (s == "all") return {Measure::kCosine, Measure::kWmd};
  std::vector<Measure> out;
  for (const auto& m : split_list(s)) out.push_back(parse_measure(m));
  if (out.empty()) fail(ErrorKind::kInvalidArgument, kModule, "--measure is empty");
  return out;
}

int cmd_pipeline(CLI::App* sub, const Options& o, std::ostream& err) {
  require(sub, {"--data", "--embeddings", "--out"});
  const auto archs = arch_list(o.arch);
  const auto methods = method_list(o.method);
  const auto measures = measure_list(o.measure);
  const SimilarityOptions sim_opts = similarity_options(o);
  const fs::path root = o.out;

  // One global seed fans out to one derived seed per phase and model.
  for (const char* dir : {"models", "metrics", "explanations", "scores"}) {
    std::error_code ec;
    fs::create_directories(root / dir, ec);
    if (ec) fail(ErrorKind::kIo, kModule, "cannot create " + (root / dir).string() + ": " + ec.message());
  }
  const uint64_t split_seed = derive_seed(o.seed, "split");
  const CorpusSplit s = do_prepare(o, split_seed);
  write_split(s, root / "splits");
  err << "[prepare] " << s.train.size() << " train, " << s.validation.size() << " validation, "
      << s.test.size() << " test documents\n";
  const EmbeddingTable table = read_embeddings(o, err);

  json seeds;
  seeds["split"] = split_seed;
  json train_configs = json::object();
  std::vector<F1Row> f1_rows;
  std::vector<ScoreRecord> records;
  for (ArchKind kind : archs) {
    const std::string id(arch_id(kind));
    const uint64_t train_seed = derive_seed(o.seed, "train/" + id);
    seeds["train/" + id] = train_seed;
    const Model model = do_train(o, kind, s, table, train_seed, given(sub, "--lr"), err);
    save_model(root / "models" / (id + ".bin"), model);
    const MetricsReport metrics = evaluate(model, s.test, o.jobs);
    write_json(root / "metrics" / (id + ".json"), metrics_json(model, metrics, "test"));
    err << "[evaluate] " << id << ": accuracy " << metrics.accuracy << "\n";
    f1_rows.push_back({std::string(arch_label(kind)), metrics});
    train_configs[id] = train_config_to_json(*model.train_config);

    for (ExplainMethod method : methods) {
      const std::string tag = id + "_" + std::string(method_id(method));
      const uint64_t explain_seed = derive_seed(o.seed, "explain/" + tag);
      seeds["explain/" + tag] = explain_seed;
      const auto expl = do_explain(o, model, method, s.test, explain_seed);
      write_file(root / "explanations" / (tag + ".jsonl"), explanations_jsonl(expl, o.topk), kModule);
      err << "[explain] " << tag << ": " << expl.size() << " documents\n";
      for (Measure measure : measures) {
        const auto scored = score_explanations(expl, s.test, table, measure, o.topk, sim_opts, o.jobs);
        write_file(root / "scores" / (tag + "_" + std::string(measure_id(measure)) + ".csv"),
                   scores_to_csv(scored), kModule);
        records.insert(records.end(), scored.begin(), scored.end());
      }
    }
  }
  render_report(assemble_report(records, std::move(f1_rows)), root / "report");

  json config;
  config["version"] = kManifestVersion;
  config["command"] = "pipeline";
  config["flags"] = recorded_flags(sub);
  config["seeds"] = seeds;
  config["training"] = train_configs;
  config["similarity"] = sim_opts.to_json();
  config["inputs"] = {{"data", input_entry(o.data)}, {"embeddings", input_entry(o.embeddings)}};
  const fs::path manifest_path = root / "manifest.json";
  const json manifest = build_manifest(root, config, manifest_path);
  write_json(manifest_path, manifest);
  err << "[pipeline] manifest " << manifest_path.string() << "\n";

  if (!o.expect_manifest.empty()) {
    json expected;
    try {
      expected = json::parse(read_file(o.expect_manifest, kModule));
    } catch (const json::exception& e) {
      fail(ErrorKind::kSchema, kModule, "expected manifest: " + std::string(e.what()));
    }
    if (expected != manifest) {
      err << "error [" << kModule << "]: run differs from " << o.expect_manifest << "\n";
      const json& ef = expected.value("files", json::object());
      for (const auto& [name, hash] : manifest["files"].items()) {
        if (!ef.contains(name)) {
          err << "  new file " << name << "\n";
        } else if (ef[name] != hash) {
          err << "  changed " << name << "\n";
        }
      }
      for (const auto& [name, hash] : ef.items()) {
        if (!manifest["files"].contains(name)) err << "  missing " << name << "\n";
      }
      if (expected.value("config", json()) != manifest["config"]) err << "  configuration differs\n";
      return kExitMismatch;
    }
    err << "[pipeline] matches " << o.expect_manifest << "\n";
  }
  return kExitOk;
}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidArgument:
      return kExitUsage;
    case ErrorKind::kNotFound:
    case ErrorKind::kIo:
      return kExitIo;
    case ErrorKind::kSchema:
      return kExitSchema;
    case ErrorKind::kNumeric:
      return kExitNumeric;
  }
  return kExitFailure;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Classifier explanation consistency toolkit", "causex"};
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);

  CLI::App* prepare = app.add_subcommand("prepare", "split a labelled corpus into train/val/test");
  prepare->add_option("--data", o.data, "corpus file (csv or jsonl)");
  add_data_format(prepare, o);
  prepare->add_option("--train", o.n_train, "training documents");
  prepare->add_option("--val", o.n_val, "validation documents");
  prepare->add_option("--test", o.n_test, "test documents");
  add_common(prepare, o, true);

  CLI::App* train_cmd = app.add_subcommand("train", "train a classifier");
  train_cmd->add_option("--data", o.data, "split directory");
  add_embeddings(train_cmd, o);
  train_cmd->add_option("--arch", o.arch)->check(CLI::IsMember({"mean_mlp", "cnn", "lstm", "bilstm", "cnn_lstm"}));
  add_train_flags(train_cmd, o);
  add_common(train_cmd, o, true);

  CLI::App* evaluate_cmd = app.add_subcommand("evaluate", "per-class F1 and accuracy of a model");
  evaluate_cmd->add_option("--model", o.model);
  evaluate_cmd->add_option("--data", o.data, "split directory");
  evaluate_cmd->add_option("--split", o.split_name)->check(CLI::IsMember({"train", "val", "test"}));
  add_common(evaluate_cmd, o, false);

  CLI::App* explain_cmd = app.add_subcommand("explain", "token attributions with LIME or IG");
  explain_cmd->add_option("--model", o.model);
  explain_cmd->add_option("--data", o.data, "split directory");
  explain_cmd->add_option("--split", o.split_name)->check(CLI::IsMember({"train", "val", "test"}));
  explain_cmd->add_option("--method", o.method)->check(CLI::IsMember({"lime", "ig"}));
  add_explain_flags(explain_cmd, o);
  add_topk(explain_cmd, o);
  add_common(explain_cmd, o, true);

  CLI::App* similarity_cmd = app.add_subcommand("similarity", "score explanations against inferences");
  similarity_cmd->add_option("--explanations", o.explanations);
  similarity_cmd->add_option("--data", o.data, "split directory");
  add_embeddings(similarity_cmd, o);
  similarity_cmd->add_option("--measure", o.measure)->check(CLI::IsMember({"cosine", "wmd"}));
  add_similarity_flags(similarity_cmd, o);
  add_topk(similarity_cmd, o);
  add_common(similarity_cmd, o, false);

  CLI::App* report_cmd = app.add_subcommand("report", "per-class tables and consistency analysis");
  report_cmd->add_option("--scores", o.scores, "score CSV files");
  report_cmd->add_option("--metrics", o.metrics, "metrics JSON files");
  add_common(report_cmd, o, false);

  CLI::App* pipeline_cmd = app.add_subcommand("pipeline", "run every phase end to end");
  pipeline_cmd->add_option("--data", o.data, "corpus file (csv or jsonl)");
  add_data_format(pipeline_cmd, o);
  pipeline_cmd->add_option("--train", o.n_train, "training documents");
  pipeline_cmd->add_option("--val", o.n_val, "validation documents");
  pipeline_cmd->add_option("--test", o.n_test, "test documents");
  add_embeddings(pipeline_cmd, o);
  pipeline_cmd->add_option("--arch", o.arch, "architecture, comma list or 'all'");
  add_train_flags(pipeline_cmd, o);
  pipeline_cmd->add_option("--method", o.method, "lime|ig, comma list or 'all'");
  add_explain_flags(pipeline_cmd, o);
  add_topk(pipeline_cmd, o);
  pipeline_cmd->add_option("--measure", o.measure, "cosine|wmd, comma list or 'all'");
  add_similarity_flags(pipeline_cmd, o);
  pipeline_cmd->add_option("--expect-manifest", o.expect_manifest,
                           "compare the new manifest with this one");
  add_common(pipeline_cmd, o, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "error [" << kModule << "]: " << e.what() << "\n";
    err << app.help();
    return kExitUsage;
  }

  try {
    CLI::App* sub = app.get_subcommands().front();
    apply_config(sub, o);
    const std::string name = sub->get_name();
    if (name == "prepare") return cmd_prepare(sub, o, err);
    if (name == "train") return cmd_train(sub, o, err);
    if (name == "evaluate") return cmd_evaluate(sub, o, err);
    if (name == "explain") return cmd_explain(sub, o, err);
    if (name == "similarity") return cmd_similarity(sub, o, err);
    if (name == "report") return cmd_report(sub, o, err);
    return cmd_pipeline(sub, o, err);
  } catch (const Error& e) {
    err << "error [" << e.module() << "]: " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}

}  // namespace causex
