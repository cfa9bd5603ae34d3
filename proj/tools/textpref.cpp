// textpref: build multilingual text-quality preference datasets by seeded
// degradation of a parallel corpus, drive rating models through fixed
// evaluation prompts, and score the judged records.

#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "textpref/config.hpp"
#include "textpref/corpus.hpp"
#include "textpref/degrade.hpp"
#include "textpref/dpo.hpp"
#include "textpref/http_backend.hpp"
#include "textpref/judge.hpp"
#include "textpref/metrics.hpp"
#include "textpref/pipeline.hpp"
#include "textpref/prefdata.hpp"
#include "textpref/prompts.hpp"
#include "textpref/records.hpp"
#include "textpref/registry.hpp"
#include "textpref/report.hpp"

#ifndef TEXTPREF_DATA_DIR
#define TEXTPREF_DATA_DIR "data"
#endif

namespace {

using namespace textpref;

constexpr const char* kVersion = "textpref 1.0.0 (schema 1)";

std::string default_templates_dir() {
  if (const char* env = std::getenv("TEXTPREF_TEMPLATES")) return env;
  return std::string(TEXTPREF_DATA_DIR) + "/templates";
}

std::string default_registry_path() {
  return std::string(TEXTPREF_DATA_DIR) + "/languages.csv";
}

const CLI::Validator EnvExpand(
    [](std::string& s) {
      s = expand_env_vars(s);
      return std::string();
    },
    "ENV");

RatingSupport parse_range(const std::string& spec) {
  const auto colon = spec.find(':');
  if (colon == std::string::npos)
    throw ValidationError("range must look like lo:hi, got '" + spec + "'");
  try {
    RatingSupport s;
    s.lo = std::stoi(spec.substr(0, colon));
    s.hi = std::stoi(spec.substr(colon + 1));
    if (s.lo > s.hi) throw ValidationError("range lo > hi: " + spec);
    return s;
  } catch (const std::invalid_argument&) {
    throw ValidationError("range must look like lo:hi, got '" + spec + "'");
  }
}

GroupOptions make_group_options(const std::string& group_by, double epsilon,
                                const std::string& unparsed,
                                bool allow_unknown, RatingSupport support) {
  GroupOptions opts;
  opts.epsilon = epsilon;
  opts.policy = unparsed_policy_from_string(unparsed);
  opts.allow_unknown = allow_unknown;
  opts.support = support;
  const auto colon = group_by.find(':');
  if (colon != std::string::npos) opts.model = group_by.substr(colon + 1);
  return opts;
}

void write_or_stdout(const std::string& path, const std::string& content) {
  if (path == "-") std::cout << content;
  else write_file(path, content);
}

struct IngestArgs {
  std::vector<std::string> inputs;
  std::string format = "jsonl";
  std::string out;
};

int cmd_ingest(const IngestArgs& a) {
  Corpus corpus;
  for (const auto& path : a.inputs) {
    Corpus part = a.format == "tsv" ? Corpus::load_tsv(path)
                                    : Corpus::load_jsonl(path);
    corpus = corpus.empty() ? std::move(part) : merge(corpus, part);
  }
  corpus.save_jsonl(a.out);
  std::cerr << "ingested " << corpus.size() << " passages across "
            << corpus.by_lang().size() << " languages\n";
  return 0;
}

struct SampleArgs {
  std::string in, out, registry, exclude_file;
  std::size_t n = 20;
  std::uint64_t seed = 0;
  bool degradable_only = false;
  bool allow_unknown = false;
};

int cmd_sample(const SampleArgs& a) {
  Corpus corpus = Corpus::load_jsonl(a.in);
  if (a.degradable_only) {
    const Registry registry = Registry::load(a.registry);
    corpus = filter_degradable(corpus, registry, a.allow_unknown);
  }
  std::vector<std::string> exclude;
  if (!a.exclude_file.empty()) {
    std::ifstream in(a.exclude_file);
    if (!in) throw ValidationError("cannot open exclude list: " + a.exclude_file);
    std::string id;
    while (std::getline(in, id))
      if (!id.empty()) exclude.push_back(id);
  }
  const Corpus sampled =
      sample_per_language(corpus, a.n, sub_seed(a.seed, "sample"), exclude);
  sampled.save_jsonl(a.out);
  std::cerr << "sampled " << sampled.size() << " passages ("
            << sampled.by_lang().size() << " languages x " << a.n << ")\n";
  return 0;
}

struct DegradeArgs {
  std::string in, registry, out;
  std::uint64_t seed = 0;
  int min_moved = 3, max_moved = 6;
  bool strict = false;
  bool allow_unknown = false;
};

int cmd_degrade(const DegradeArgs& a) {
  const Corpus corpus = Corpus::load_jsonl(a.in);
  const Registry registry = Registry::load(a.registry);
  ShuffleParams params{a.min_moved, a.max_moved, sub_seed(a.seed, "degrade")};
  DegradeReport report;
  const Corpus degraded = build_degraded_corpus(corpus, registry, params,
                                               &report, a.strict,
                                               a.allow_unknown);
  degraded.save_jsonl(a.out);
  for (const auto& [lang, count] : report.skipped_languages)
    std::cerr << "skipped non-degradable language " << lang << " (" << count
              << " passages)\n";
  for (const auto& [id, reason] : report.failures)
    std::cerr << "could not degrade passage " << id << ": " << reason << "\n";
  std::cerr << "degraded " << report.degraded << " passages\n";
  return 0;
}

struct BuildDpoArgs {
  std::string in, out, templates;
};

int cmd_build_dpo(const BuildDpoArgs& a) {
  const Corpus corpus = Corpus::load_jsonl(a.in);
  const TemplateSet templates = TemplateSet::load(a.templates);
  const auto triples = build_triples(corpus, templates);
  const std::size_t n = export_triples(triples, a.out);
  std::cerr << "wrote " << n << " preference triples\n";
  return 0;
}

struct RenderArgs {
  std::string kind = "quality";
  std::string in, out, templates;
  bool inference = false;
};

int cmd_render_prompts(const RenderArgs& a) {
  const Corpus corpus = Corpus::load_jsonl(a.in);
  const TemplateSet templates = TemplateSet::load(a.templates);
  const PromptKind kind = prompt_kind_from_string(a.kind);
  const auto items = prompts_from_corpus(corpus, templates, kind, a.inference);
  save_prompt_items(items, a.out);
  std::cerr << "rendered " << items.size() << " prompts\n";
  return 0;
}

struct JudgeArgs {
  std::string prompts, out, range = "0:1";
  std::string endpoint, model, api_key;
  std::string stub, stub_default = "[[1]]";
  int stub_latency_ms = 0;
  double stub_fail_rate = 0.0;
  std::uint64_t stub_fail_seed = 0;
  std::string toy_model;
  int max_in_flight = 4;
  int timeout_ms = 30000;
  int retries = 2;
  double temperature = 0.0;
  int max_tokens = 16;
};

int cmd_judge(const JudgeArgs& a) {
  const auto items = load_prompt_items(a.prompts);
  const RatingSupport support = parse_range(a.range);

  EndpointConfig cfg;
  cfg.base_url = a.endpoint;
  cfg.model_name = a.model;
  cfg.api_key = a.api_key;
  cfg.max_in_flight = a.max_in_flight;
  cfg.timeout = std::chrono::milliseconds(a.timeout_ms);
  cfg.max_retries = a.retries;
  cfg.temperature = a.temperature;
  cfg.max_tokens = a.max_tokens;

  std::unique_ptr<JudgeBackend> backend;
  if (!a.stub.empty()) {
    StubBackend::Options opts;
    opts.default_response = a.stub_default;
    opts.max_latency_ms = a.stub_latency_ms;
    opts.fail_rate = a.stub_fail_rate;
    opts.fail_seed = a.stub_fail_seed;
    backend = std::make_unique<StubBackend>(StubBackend::from_script(a.stub, opts));
    cfg.backoff.clear();
  } else if (!a.toy_model.empty()) {
    backend = std::make_unique<ToyBackend>(load_model(a.toy_model));
    cfg.backoff.clear();
  } else if (!a.endpoint.empty()) {
    backend = std::make_unique<HttpBackend>(cfg);
  } else {
    throw ValidationError("judge: pick a backend (--endpoint, --stub or --toy)");
  }

  const auto records = judge_batch(items, *backend, cfg, support);
  save_records(records, a.out);
  std::size_t unparseable = 0;
  for (const auto& r : records)
    if (!r.predicted) ++unparseable;
  std::cerr << "judged " << records.size() << " prompts";
  if (unparseable)
    std::cerr << "; warning: " << unparseable << " unparseable responses";
  std::cerr << "\n";
  return 0;  // degraded runs still exit 0; the records carry the errors
}

struct TrainToyArgs {
  std::string pairs, corpus, out;
  ToyTrainConfig cfg;
};

int cmd_train_toy(const TrainToyArgs& a) {
  std::vector<TextPair> pairs;
  if (!a.pairs.empty()) pairs = load_pairs(a.pairs);
  else if (!a.corpus.empty()) pairs = pairs_from_corpus(Corpus::load_jsonl(a.corpus));
  else throw ValidationError("train-toy: need --pairs or --corpus");
  const ToyJudgeModel model = train_toy_judge(pairs, a.cfg);
  save_model(model, a.out);
  std::cerr << "trained on " << pairs.size() << " pairs; threshold "
            << fmt_double(model.threshold) << "; model written to " << a.out
            << "\n";
  return 0;
}

struct ScoreArgs {
  std::string records, registry, out = "-";
  std::string group_by = "all";
  std::string format = "csv";
  std::string unparsed = "drop";
  std::string range = "0:1";
  double epsilon = 1e-6;
  bool allow_unknown = false;
  bool summarize = false;
};

int cmd_score(const ScoreArgs& a) {
  const auto records = load_records(a.records);
  const Registry registry = Registry::load(a.registry);
  const RatingSupport support = parse_range(a.range);
  const auto dim = group_dimension_from_string(a.group_by);
  const auto opts = make_group_options(a.group_by, a.epsilon, a.unparsed,
                                       a.allow_unknown, support);
  const auto groups = group_metrics(records, registry, dim, opts);

  // KL estimator choices ride along as table metadata
  std::string title = "metrics by " + a.group_by +
                      " (kl=normal||degraded, epsilon=" + fmt_double(a.epsilon, 6) +
                      ", unparsed=" + a.unparsed + ")";
  std::vector<TableSpec> tables = {table_from_groups(std::move(title), groups)};
  if (a.summarize)
    tables.push_back(summary_table("mean over groups", groups));

  std::ostringstream out;
  emit(tables, table_format_from_string(a.format), out);
  write_or_stdout(a.out, out.str());
  return 0;
}

struct ReportArgs {
  std::string in, baseline, out = "-";
  std::string format = "md";
  std::string metric = "f1";
  std::size_t top_bottom = 0;
  bool summarize = false;
  bool stamp = false;
};

GroupReport group_from_row(const std::vector<std::string>& row,
                           const std::string& where) {
  if (row.size() != 5)
    throw ValidationError(where + ": expected 5 columns (group,n,mcc,kl,f1_macro)");
  GroupReport g;
  g.key = row[0];
  try {
    g.n = static_cast<std::size_t>(std::stoull(row[1]));
    if (!row[2].empty()) g.mcc = std::stod(row[2]);
    if (!row[3].empty()) g.kl = std::stod(row[3]);
    g.f1_macro = std::stod(row[4]);
  } catch (const std::exception&) {
    throw ValidationError(where + ": non-numeric metric cell");
  }
  return g;
}

std::vector<GroupReport> load_score_csv(const std::string& path) {
  const TableSpec table = parse_table_csv(read_file(path));
  if (table.columns != std::vector<std::string>{"group", "n", "mcc", "kl", "f1_macro"})
    throw ValidationError(path + ": not a score table (header mismatch)");
  std::vector<GroupReport> out;
  for (std::size_t i = 0; i < table.rows.size(); ++i)
    out.push_back(group_from_row(table.rows[i], path + ": row " + std::to_string(i)));
  return out;
}

int cmd_report(const ReportArgs& a) {
  const auto groups = load_score_csv(a.in);
  std::vector<TableSpec> tables;
  if (!a.baseline.empty()) {
    const auto base = load_score_csv(a.baseline);
    const auto deltas =
        percent_improvement(base, groups, metric_field_from_string(a.metric));
    tables.push_back(table_from_improvements(
        "improvement in " + a.metric + " (%) over baseline", deltas));
  }
  if (a.top_bottom > 0)
    tables.push_back(top_bottom_table(
        "top/bottom " + std::to_string(a.top_bottom) + " by " + a.metric,
        groups, metric_field_from_string(a.metric), a.top_bottom));
  if (a.summarize) tables.push_back(summary_table("mean over groups", groups));
  if (tables.empty()) tables.push_back(table_from_groups("metrics", groups));

  std::ostringstream out;
  std::string stamp_text;
  if (a.stamp) {
    char buf[64];
    const std::time_t now = std::time(nullptr);
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    stamp_text = buf;
  }
  emit(tables, table_format_from_string(a.format), out, a.stamp, stamp_text);
  write_or_stdout(a.out, out.str());
  return 0;
}

int cmd_pipeline(const RunConfig& cfg) {
  const PipelineResult result = run_pipeline(cfg, std::cerr);
  std::cout << "languages=" << result.languages << " normal=" << result.normal
            << " degraded=" << result.degraded << " triples=" << result.triples
            << " records=" << result.records
            << " unparseable=" << result.unparseable << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multilingual text-quality preference data toolkit"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  const std::string templates_default = default_templates_dir();
  const std::string registry_default = default_registry_path();

  IngestArgs ingest;
  auto* ing = app.add_subcommand("ingest", "load, validate and merge corpora");
  ing->add_option("--in", ingest.inputs, "input corpus file(s)")->required();
  ing->add_option("--format", ingest.format, "input format")
      ->check(CLI::IsMember({"jsonl", "tsv"}));
  ing->add_option("--out", ingest.out, "output corpus JSONL")->required();

  SampleArgs sample;
  auto* smp = app.add_subcommand("sample", "seeded per-language sampling");
  smp->add_option("--in", sample.in, "input corpus JSONL")->required();
  smp->add_option("--n", sample.n, "passages per language")->required();
  smp->add_option("--seed", sample.seed, "global seed")->required();
  smp->add_option("--exclude", sample.exclude_file,
                  "file of passage ids to exclude (one per line)");
  smp->add_flag("--degradable-only", sample.degradable_only,
                "keep only languages the registry marks degradable");
  smp->add_option("--registry", sample.registry, "language registry CSV")
      ->default_val(registry_default);
  smp->add_flag("--allow-unknown", sample.allow_unknown,
                "tolerate languages missing from the registry");
  smp->add_option("--out", sample.out, "output corpus JSONL")->required();

  DegradeArgs degrade;
  auto* deg = app.add_subcommand("degrade", "build shuffled low-quality twins");
  deg->add_option("--in", degrade.in, "normal-only corpus JSONL")->required();
  deg->add_option("--registry", degrade.registry, "language registry CSV")
      ->default_val(registry_default);
  deg->add_option("--seed", degrade.seed, "global seed")->required();
  deg->add_option("--min", degrade.min_moved, "minimum displaced tokens");
  deg->add_option("--max", degrade.max_moved, "maximum displaced tokens");
  deg->add_flag("--strict", degrade.strict,
                "fail the run when a degradable-language passage is too short");
  deg->add_flag("--allow-unknown", degrade.allow_unknown,
                "skip languages missing from the registry");
  deg->add_option("--out", degrade.out, "output corpus JSONL")->required();

  BuildDpoArgs build_dpo;
  auto* bld = app.add_subcommand("build-dpo", "preference triples from a corpus");
  bld->add_option("--in", build_dpo.in, "labeled corpus JSONL")->required();
  bld->add_option("--templates", build_dpo.templates, "prompt templates dir")
      ->default_val(templates_default);
  bld->add_option("--out", build_dpo.out, "output triples JSONL")->required();

  RenderArgs render;
  auto* ren = app.add_subcommand("render-prompts", "render evaluation prompts");
  ren->add_option("--kind", render.kind, "prompt kind")
      ->check(CLI::IsMember({"quality", "mela", "sentiment", "summarize"}));
  ren->add_option("--in", render.in, "corpus JSONL")->required();
  ren->add_flag("--inference", render.inference, "append the answer cue");
  ren->add_option("--templates", render.templates, "prompt templates dir")
      ->default_val(templates_default);
  ren->add_option("--out", render.out, "output prompts JSONL")->required();

  JudgeArgs judge;
  auto* jdg = app.add_subcommand("judge", "run prompts against a rating model");
  jdg->add_option("--prompts", judge.prompts, "prompts JSONL")->required();
  jdg->add_option("--endpoint", judge.endpoint,
                  "chat-completions base URL, e.g. http://host:8000/v1")
      ->transform(EnvExpand);
  jdg->add_option("--model", judge.model, "model name sent to the endpoint");
  jdg->add_option("--api-key", judge.api_key, "bearer token")
      ->envname("TEXTPREF_API_KEY")
      ->transform(EnvExpand);
  jdg->add_option("--stub", judge.stub, "scripted stub JSONL (id -> response)");
  jdg->add_option("--stub-default", judge.stub_default,
                  "stub response for unknown ids");
  jdg->add_option("--stub-latency", judge.stub_latency_ms,
                  "stub latency injection upper bound (ms)");
  jdg->add_option("--stub-fail-rate", judge.stub_fail_rate,
                  "fraction of ids that always fail transport")
      ->check(CLI::Range(0.0, 1.0));
  jdg->add_option("--stub-fail-seed", judge.stub_fail_seed,
                  "seed for failure injection");
  jdg->add_option("--toy", judge.toy_model, "toy judge model file");
  jdg->add_option("--range", judge.range, "rating range lo:hi");
  jdg->add_option("--max-in-flight", judge.max_in_flight,
                  "concurrent request cap")
      ->check(CLI::PositiveNumber);
  jdg->add_option("--timeout", judge.timeout_ms, "per-request timeout (ms)");
  jdg->add_option("--retries", judge.retries, "retries after a failed request");
  jdg->add_option("--temperature", judge.temperature, "sampling temperature");
  jdg->add_option("--max-tokens", judge.max_tokens, "completion token cap");
  jdg->add_option("--out", judge.out, "output records JSONL")->required();

  TrainToyArgs train;
  auto* trn = app.add_subcommand("train-toy", "train the toy quality judge");
  trn->add_option("--pairs", train.pairs, "pairs JSONL ({good, bad})");
  trn->add_option("--corpus", train.corpus,
                  "merged corpus JSONL (pairs derived from degraded twins)");
  trn->add_option("--lr", train.cfg.lr, "learning rate");
  trn->add_option("--epochs", train.cfg.epochs, "training epochs");
  trn->add_option("--batch", train.cfg.batch_size, "mini-batch size");
  trn->add_option("--dim", train.cfg.dim, "feature dimension (power of two)");
  trn->add_option("--ngram", train.cfg.ngram_order, "character n-gram order");
  trn->add_option("--seed", train.cfg.seed, "training seed");
  trn->add_option("--out", train.out, "output model file")->required();

  ScoreArgs score;
  auto* scr = app.add_subcommand("score", "grouped MCC/KL/F1 over records");
  scr->add_option("--records", score.records, "records JSONL")->required();
  scr->add_option("--registry", score.registry, "language registry CSV")
      ->default_val(registry_default);
  scr->add_option("--group-by", score.group_by,
                  "all|language|resource_level|hr_lr|family|script|supported_by:<model>");
  scr->add_option("--format", score.format, "csv|md");
  scr->add_option("--epsilon", score.epsilon, "KL smoothing epsilon")
      ->check(CLI::PositiveNumber);
  scr->add_option("--unparsed", score.unparsed, "drop|wrong");
  scr->add_option("--range", score.range, "rating range lo:hi");
  scr->add_flag("--allow-unknown", score.allow_unknown,
                "group unknown languages under 'Unknown'");
  scr->add_flag("--summarize", score.summarize, "append mean +/- 95% CI rows");
  scr->add_option("--out", score.out, "output path or - for stdout");

  ReportArgs report;
  auto* rpt = app.add_subcommand("report", "tables from score output");
  rpt->add_option("--in", report.in, "score CSV")->required();
  rpt->add_option("--baseline", report.baseline,
                  "baseline score CSV for % improvement");
  rpt->add_option("--metric", report.metric, "mcc|kl|f1");
  rpt->add_option("--top-bottom", report.top_bottom,
                  "emit top/bottom-k rows by --metric");
  rpt->add_flag("--summarize", report.summarize, "append mean +/- 95% CI rows");
  rpt->add_option("--format", report.format, "csv|md");
  rpt->add_flag("--stamp", report.stamp, "include a generation timestamp");
  rpt->add_option("--out", report.out, "output path or - for stdout");

  RunConfig pipeline;
  pipeline.templates_dir = templates_default;
  pipeline.registry_path = registry_default;
  std::string pipeline_config;
  auto* pip = app.add_subcommand(
      "pipeline", "dataset creation, toy training and evaluation in one run");
  pip->add_option("--config", pipeline_config,
                  "TOML run configuration (flags override file values)")
      ->check(CLI::ExistingFile);
  std::map<std::string, CLI::Option*> pipe_opts;
  pipe_opts["seed"] = pip->add_option("--seed", pipeline.seed, "global seed");
  pipe_opts["registry"] =
      pip->add_option("--registry", pipeline.registry_path, "language registry CSV");
  pipe_opts["corpus"] =
      pip->add_option("--corpus", pipeline.corpus_paths, "corpus JSONL file(s)");
  pipe_opts["templates"] =
      pip->add_option("--templates", pipeline.templates_dir, "prompt templates dir");
  pipe_opts["out-dir"] =
      pip->add_option("--out-dir", pipeline.out_dir, "artifact directory");
  pipe_opts["n"] = pip->add_option("--n", pipeline.sample_n, "passages per language");
  pipe_opts["min"] =
      pip->add_option("--min", pipeline.min_moved, "minimum displaced tokens");
  pipe_opts["max"] =
      pip->add_option("--max", pipeline.max_moved, "maximum displaced tokens");
  pipe_opts["strict"] =
      pip->add_flag("--strict", pipeline.strict, "fail on undegradable passages");
  pipe_opts["allow-unknown"] =
      pip->add_flag("--allow-unknown", pipeline.allow_unknown,
                    "tolerate languages missing from the registry");
  pipe_opts["stub"] =
      pip->add_option("--stub", pipeline.stub_script, "scripted stub JSONL");
  pipe_opts["max-in-flight"] =
      pip->add_option("--max-in-flight", pipeline.max_in_flight,
                      "concurrent judge request cap");
  pipe_opts["epsilon"] =
      pip->add_option("--epsilon", pipeline.epsilon, "KL smoothing epsilon");
  pipe_opts["unparsed"] =
      pip->add_option("--unparsed", pipeline.unparsed, "drop|wrong");
  pipe_opts["group-by"] =
      pip->add_option("--group-by", pipeline.group_by, "report grouping dimension");
  pipe_opts["toy-lr"] =
      pip->add_option("--toy-lr", pipeline.toy.lr, "toy judge learning rate");
  pipe_opts["toy-epochs"] =
      pip->add_option("--toy-epochs", pipeline.toy.epochs, "toy judge epochs");
  pipe_opts["toy-batch"] =
      pip->add_option("--toy-batch", pipeline.toy.batch_size, "toy judge batch size");
  pipe_opts["toy-dim"] =
      pip->add_option("--toy-dim", pipeline.toy.dim, "toy judge feature dimension");
  pipe_opts["toy-ngram"] = pip->add_option("--toy-ngram", pipeline.toy.ngram_order,
                                           "toy judge n-gram order");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*ing) return cmd_ingest(ingest);
    if (*smp) return cmd_sample(sample);
    if (*deg) return cmd_degrade(degrade);
    if (*bld) return cmd_build_dpo(build_dpo);
    if (*ren) return cmd_render_prompts(render);
    if (*jdg) return cmd_judge(judge);
    if (*trn) return cmd_train_toy(train);
    if (*scr) return cmd_score(score);
    if (*rpt) return cmd_report(report);
    if (*pip) {
      if (!pipeline_config.empty()) {
        RunConfig merged;
        merged.templates_dir = templates_default;
        merged.registry_path = registry_default;
        apply_run_config_file(pipeline_config, merged);
        const auto set = [&](const char* key) {
          return pipe_opts.at(key)->count() > 0;
        };
        if (set("seed")) merged.seed = pipeline.seed;
        if (set("registry")) merged.registry_path = pipeline.registry_path;
        if (set("corpus")) merged.corpus_paths = pipeline.corpus_paths;
        if (set("templates")) merged.templates_dir = pipeline.templates_dir;
        if (set("out-dir")) merged.out_dir = pipeline.out_dir;
        if (set("n")) merged.sample_n = pipeline.sample_n;
        if (set("min")) merged.min_moved = pipeline.min_moved;
        if (set("max")) merged.max_moved = pipeline.max_moved;
        if (set("strict")) merged.strict = pipeline.strict;
        if (set("allow-unknown")) merged.allow_unknown = pipeline.allow_unknown;
        if (set("stub")) merged.stub_script = pipeline.stub_script;
        if (set("max-in-flight")) merged.max_in_flight = pipeline.max_in_flight;
        if (set("epsilon")) merged.epsilon = pipeline.epsilon;
        if (set("unparsed")) merged.unparsed = pipeline.unparsed;
        if (set("group-by")) merged.group_by = pipeline.group_by;
        if (set("toy-lr")) merged.toy.lr = pipeline.toy.lr;
        if (set("toy-epochs")) merged.toy.epochs = pipeline.toy.epochs;
        if (set("toy-batch")) merged.toy.batch_size = pipeline.toy.batch_size;
        if (set("toy-dim")) merged.toy.dim = pipeline.toy.dim;
        if (set("toy-ngram")) merged.toy.ngram_order = pipeline.toy.ngram_order;
        pipeline = merged;
      }
      return cmd_pipeline(pipeline);
    }
    std::cerr << "no subcommand\n";
    return 1;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
