#pragma once

#include <filesystem>
#include <memory>
#include <ostream>
#include <string>
#include <vector>

#include "textpref/corpus.hpp"
#include "textpref/degrade.hpp"
#include "textpref/dpo.hpp"
#include "textpref/judge.hpp"
#include "textpref/metrics.hpp"
#include "textpref/prefdata.hpp"
#include "textpref/prompts.hpp"
#include "textpref/registry.hpp"
#include "textpref/report.hpp"

namespace textpref {

/// Everything a full run needs. One global seed; every stage derives its own
/// sub-seed from it, so a single number reproduces a whole run.
struct RunConfig {
  std::uint64_t seed = 0;
  std::string registry_path;
  std::vector<std::string> corpus_paths;
  std::string templates_dir;
  std::string out_dir = "out";

  std::size_t sample_n = 20;
  int min_moved = 3;
  int max_moved = 6;
  bool strict = false;
  bool allow_unknown = false;

  // judge backend: stub script wins, then HTTP endpoint, else a toy judge is
  // trained in-process on the generated pairs
  std::string stub_script;
  std::string endpoint;
  std::string model_name = "textpref-toy";
  std::string api_key;
  int max_in_flight = 4;
  int max_retries = 2;

  double epsilon = 1e-6;
  std::string unparsed = "drop";
  std::string group_by = "hr_lr";

  ToyTrainConfig toy;
};

inline void validate_config(const RunConfig& cfg) {
  namespace fs = std::filesystem;
  if (cfg.registry_path.empty() || !fs::exists(cfg.registry_path))
    throw ValidationError("registry path does not exist: '" +
                          cfg.registry_path + "'");
  if (cfg.corpus_paths.empty())
    throw ValidationError("no corpus paths configured");
  for (const auto& p : cfg.corpus_paths)
    if (!fs::exists(p))
      throw ValidationError("corpus path does not exist: '" + p + "'");
  if (cfg.templates_dir.empty() || !fs::exists(cfg.templates_dir))
    throw ValidationError("templates dir does not exist: '" +
                          cfg.templates_dir + "'");
  if (!cfg.stub_script.empty() && !fs::exists(cfg.stub_script))
    throw ValidationError("stub script does not exist: '" + cfg.stub_script +
                          "'");
  unparsed_policy_from_string(cfg.unparsed);
  group_dimension_from_string(cfg.group_by);
}

struct PipelineResult {
  std::size_t languages = 0;
  std::size_t normal = 0;
  std::size_t degraded = 0;
  std::size_t merged = 0;
  std::size_t triples = 0;
  std::size_t prompts = 0;
  std::size_t records = 0;
  std::size_t unparseable = 0;
  std::vector<GroupReport> report;
};

/// Dataset creation, (optional) toy-judge training, judging and scoring,
/// end to end, writing each stage's artifact under out_dir.
inline PipelineResult run_pipeline(const RunConfig& cfg, std::ostream& log) {
  namespace fs = std::filesystem;
  validate_config(cfg);
  const Registry registry = Registry::load(cfg.registry_path);
  const TemplateSet templates = TemplateSet::load(cfg.templates_dir);
  const fs::path out(cfg.out_dir);
  fs::create_directories(out);

  // (1) dataset creation: ingest -> keep degradable -> sample -> degrade
  Corpus base;
  for (const auto& p : cfg.corpus_paths) {
    Corpus part = Corpus::load_jsonl(p);
    base = base.empty() ? std::move(part) : merge(base, part);
  }
  const Corpus eligible = filter_degradable(base, registry, cfg.allow_unknown);
  const Corpus sampled =
      sample_per_language(eligible, cfg.sample_n, sub_seed(cfg.seed, "sample"));
  sampled.save_jsonl(out / "sampled.jsonl");

  ShuffleParams params{cfg.min_moved, cfg.max_moved, sub_seed(cfg.seed, "degrade")};
  DegradeReport degrade_report;
  const Corpus degraded = build_degraded_corpus(sampled, registry, params,
                                                &degrade_report, cfg.strict,
                                                cfg.allow_unknown);
  degraded.save_jsonl(out / "degraded.jsonl");
  for (const auto& [lang, count] : degrade_report.skipped_languages)
    log << "skipped non-degradable language " << lang << " (" << count
        << " passages)\n";
  for (const auto& [id, reason] : degrade_report.failures)
    log << "could not degrade passage " << id << ": " << reason << "\n";

  const Corpus merged = merge(sampled, degraded);
  merged.save_jsonl(out / "merged.jsonl");

  const auto triples = build_triples(merged, templates);
  export_triples(triples, out / "triples.jsonl");

  // (2) model: scripted stub, HTTP endpoint, or an in-process toy judge
  std::unique_ptr<JudgeBackend> backend;
  if (!cfg.stub_script.empty()) {
    backend = std::make_unique<StubBackend>(
        StubBackend::from_script(cfg.stub_script));
  } else if (!cfg.endpoint.empty()) {
    throw ValidationError(
        "run_pipeline: HTTP endpoints are supported via the judge subcommand; "
        "pipeline runs use --stub or the built-in toy judge");
  } else {
    const auto pairs = pairs_from_corpus(merged);
    ToyTrainConfig toy_cfg = cfg.toy;
    toy_cfg.seed = sub_seed(cfg.seed, "toy-judge");
    const ToyJudgeModel model = train_toy_judge(pairs, toy_cfg);
    save_model(model, out / "model.bin");
    log << "trained toy judge on " << pairs.size() << " pairs\n";
    backend = std::make_unique<ToyBackend>(model);
  }

  // (3) evaluation: render -> judge -> score
  const auto prompts =
      prompts_from_corpus(merged, templates, PromptKind::quality_binary);
  save_prompt_items(prompts, out / "prompts.jsonl");

  EndpointConfig ep;
  ep.max_in_flight = cfg.max_in_flight;
  ep.max_retries = cfg.max_retries;
  ep.backoff.clear();  // in-process backends need no backoff waits
  const auto records = judge_batch(prompts, *backend, ep, {0, 1});
  save_records(records, out / "records.jsonl");

  GroupOptions opts;
  opts.epsilon = cfg.epsilon;
  opts.policy = unparsed_policy_from_string(cfg.unparsed);
  opts.allow_unknown = cfg.allow_unknown;
  const auto dim = group_dimension_from_string(cfg.group_by);
  if (dim == GroupDimension::SupportedBy) {
    const auto colon = cfg.group_by.find(':');
    if (colon != std::string::npos) opts.model = cfg.group_by.substr(colon + 1);
  }
  auto report = group_metrics(records, registry, dim, opts);

  {
    const TableSpec grouped =
        table_from_groups("metrics by " + cfg.group_by, report);
    write_file(out / "report.csv", render_table(grouped, TableFormat::Csv));
    std::ostringstream md;
    md << render_table(grouped, TableFormat::Markdown) << '\n';
    const auto by_lang =
        group_metrics(records, registry, GroupDimension::Language, opts);
    md << render_table(summary_table("mean over languages", by_lang),
                       TableFormat::Markdown);
    write_file(out / "report.md", md.str());
  }

  PipelineResult result;
  result.languages = sampled.by_lang().size();
  result.normal = sampled.size();
  result.degraded = degraded.size();
  result.merged = merged.size();
  result.triples = triples.size();
  result.prompts = prompts.size();
  result.records = records.size();
  for (const auto& r : records)
    if (!r.predicted) ++result.unparseable;
  result.report = std::move(report);

  log << "pipeline: " << result.normal << " normal + " << result.degraded
      << " degraded passages, " << result.triples << " triples, "
      << result.records << " records (" << result.unparseable
      << " unparseable)\n";
  return result;
}

}  // namespace textpref
