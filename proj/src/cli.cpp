#include "cfexplain/cli.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <fstream>
#include <memory>
#include <mutex>
#include <optional>
#include <thread>

#include <CLI11.hpp>

#include "cfexplain/datasets.hpp"
#include "cfexplain/dcr_eval.hpp"
#include "cfexplain/errors.hpp"
#include "cfexplain/lexicon_oracle.hpp"
#include "cfexplain/llm_gateway.hpp"
#include "cfexplain/pipelines.hpp"
#include "cfexplain/prompt_templates.hpp"
#include "cfexplain/reporting.hpp"

namespace cfx {

namespace {

constexpr const char* kOracleModelName = "lexicon-oracle";

struct BackendOptions {
  std::string backend = "oracle";
  std::string lexicon;
  std::string endpoint;
  std::string model;
  double temperature = 0.0;
  int max_retries = 3;
  double timeout_s = 60.0;
  std::string api_key_env = "OPENAI_API_KEY";
  std::uint64_t seed = 0;
  std::string alias;
};

struct DatasetOptions {
  std::string path;
  std::string kind;
};

void add_backend_options(CLI::App* cmd, BackendOptions& o) {
  cmd->add_option("--backend", o.backend, "oracle or remote")
      ->check(CLI::IsMember({"oracle", "remote"}))
      ->capture_default_str();
  cmd->add_option("--lexicon", o.lexicon, "Lexicon file for the oracle backend");
  cmd->add_option("--endpoint", o.endpoint, "Chat-completions URL for the remote backend");
  cmd->add_option("--model", o.model, "Model name sent to the remote backend");
  cmd->add_option("--temperature", o.temperature, "Sampling temperature")->capture_default_str();
  cmd->add_option("--max-retries", o.max_retries, "Transport and parse retries")
      ->capture_default_str();
  cmd->add_option("--timeout", o.timeout_s, "Per-request timeout in seconds")->capture_default_str();
  cmd->add_option("--api-key-env", o.api_key_env, "Environment variable holding the API key")
      ->capture_default_str();
  cmd->add_option("--seed", o.seed, "Seed for sampling documents and oracle jitter")
      ->capture_default_str();
  cmd->add_option("--alias", o.alias, "Short backend name used in tables, e.g. G4");
}

void add_dataset_options(CLI::App* cmd, DatasetOptions& o) {
  cmd->add_option("--dataset", o.path, "Tab-separated corpus: text<TAB>label");
  cmd->add_option("--dataset-kind", o.kind, "amazon, sst2 or imdb (inferred from the file name)");
}

DatasetKind resolve_kind(const DatasetOptions& o) {
  if (!o.kind.empty()) {
    const auto kind = parse_dataset_kind(o.kind);
    if (!kind) throw ConfigError("unknown --dataset-kind '" + o.kind + "' (amazon, sst2, imdb)");
    return *kind;
  }
  std::string stem = std::filesystem::path(o.path).stem().string();
  std::transform(stem.begin(), stem.end(), stem.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  for (DatasetKind k : {DatasetKind::Amazon, DatasetKind::Sst2, DatasetKind::Imdb}) {
    if (stem.find(to_string(k)) != std::string::npos) return k;
  }
  throw ConfigError("cannot infer the dataset kind from '" + o.path + "'; pass --dataset-kind");
}

BackendConfig backend_config(const BackendOptions& o) {
  BackendConfig c;
  if (!o.endpoint.empty()) c.endpoint_url = o.endpoint;
  if (!o.model.empty()) {
    c.model_name = o.model;
  } else if (o.backend == "oracle") {
    c.model_name = kOracleModelName;
  }
  c.temperature = o.temperature;
  c.max_retries = o.max_retries;
  c.timeout = std::chrono::milliseconds(static_cast<long long>(o.timeout_s * 1000.0));
  c.api_key_env_var = o.api_key_env;
  c.validate();
  return c;
}

// Builds the backend before any document is touched so credential and
// lexicon problems surface as configuration errors.
std::unique_ptr<LlmGateway> make_gateway(const BackendOptions& o) {
  const BackendConfig config = backend_config(o);
  std::shared_ptr<Backend> backend;
  if (o.backend == "oracle") {
    if (o.lexicon.empty()) throw ConfigError("--backend oracle needs --lexicon <file>");
    backend = std::make_shared<LexiconOracle>(Lexicon::load(o.lexicon), o.seed);
  } else {
    backend = std::make_shared<HttpBackend>(config);
  }
  return std::make_unique<LlmGateway>(std::move(backend), config);
}

std::map<std::string, std::string> backend_config_map(const BackendOptions& o,
                                                       const BackendConfig& c) {
  std::map<std::string, std::string> m = {
      {"backend", o.backend},
      {"model", c.model_name},
      {"temperature", format_decimal(c.temperature)},
      {"max-retries", std::to_string(c.max_retries)},
      {"timeout", format_decimal(o.timeout_s)},
      {"seed", std::to_string(o.seed)},
  };
  if (o.backend == "oracle") {
    m["lexicon"] = o.lexicon;
  } else {
    m["endpoint"] = c.endpoint_url;
    m["api-key-env"] = c.api_key_env_var;
  }
  if (!o.alias.empty()) m["alias"] = o.alias;
  return m;
}

std::string join(const std::vector<std::string>& parts, char sep) {
  std::string out;
  for (const auto& p : parts) {
    if (!out.empty()) out += sep;
    out += p;
  }
  return out;
}

// Runs fn(i) for i in [0, n) on at most `workers` threads. The first
// exception stops further scheduling and is rethrown after all threads join.
template <typename Fn>
void parallel_for(std::size_t n, int workers, Fn&& fn) {
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = n;
      }
    }
  };
  const std::size_t threads = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(workers, 1)), 1,
                                                      std::max<std::size_t>(n, 1));
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

void write_text(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << content;
}

// Inserts `--key=value` for every config-file key not already given as a flag,
// directly after the subcommand name so that CLI11 sees a single command line.
std::vector<std::string> merge_config_file(std::vector<std::string> args) {
  std::optional<std::string> config_path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) config_path = args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) config_path = args[i].substr(9);
  }
  if (!config_path) return args;
  const auto sub = std::find_if(args.begin(), args.end(),
                                [](const std::string& a) { return !a.empty() && a[0] != '-'; });
  if (sub == args.end()) return args;

  std::vector<std::string> injected;
  for (const auto& [key, value] : read_config_file(*config_path)) {
    if (key == "config") continue;
    const std::string flag = "--" + key;
    const bool given = std::any_of(args.begin(), args.end(), [&](const std::string& a) {
      return a == flag || a.rfind(flag + "=", 0) == 0;
    });
    if (!given) injected.push_back(flag + "=" + value);
  }
  args.insert(std::next(sub), injected.begin(), injected.end());
  return args;
}

// ---------------------------------------------------------------------------
// explain

struct ExplainOptions {
  BackendOptions backend;
  DatasetOptions dataset;
  std::vector<std::string> approaches{"all"};
  std::vector<int> ks;
  int n = 100;
  int max_words = 0;
  int workers = 1;
  std::string out = "runs.jsonl";
};

std::vector<Approach> resolve_approaches(const std::vector<std::string>& names) {
  std::vector<Approach> out;
  for (const auto& name : names) {
    if (name == "all") {
      for (Approach a : {Approach::DP, Approach::CFP, Approach::CFS}) {
        if (std::find(out.begin(), out.end(), a) == out.end()) out.push_back(a);
      }
      continue;
    }
    const auto a = parse_approach(name);
    if (!a) throw ConfigError("unknown --approach '" + name + "' (dp, cfp, cfs, all)");
    if (std::find(out.begin(), out.end(), *a) == out.end()) out.push_back(*a);
  }
  if (out.empty()) throw ConfigError("--approach is empty");
  return out;
}

int cmd_explain(const ExplainOptions& o, std::ostream& out, std::ostream& err) {
  if (o.dataset.path.empty()) throw ConfigError("explain needs --dataset <file>");
  const DatasetKind kind = resolve_kind(o.dataset);
  const std::vector<Approach> approaches = resolve_approaches(o.approaches);
  const std::vector<int> ks = o.ks.empty() ? default_ks(kind) : o.ks;
  for (int k : ks) {
    if (k < 1) throw ConfigError("--k values must be >= 1");
  }
  if (o.workers < 1) throw ConfigError("--workers must be >= 1");

  auto gateway = make_gateway(o.backend);

  const Corpus corpus = load_corpus(o.dataset.path, kind);
  if (!corpus.malformed.empty()) {
    err << "warning: skipped " << corpus.malformed.size() << " malformed line(s) in "
        << o.dataset.path << " (first: line " << corpus.malformed.front().line << ", "
        << corpus.malformed.front().reason << ")\n";
  }
  SamplePlan plan;
  plan.n = o.n;
  plan.seed = o.backend.seed;
  if (o.max_words > 0) plan.max_words = o.max_words;
  const std::vector<Document> docs = sample(corpus.documents, plan);

  std::map<std::string, std::string> config = backend_config_map(o.backend, gateway->config());
  config["command"] = "explain";
  config["dataset"] = o.dataset.path;
  config["dataset-kind"] = std::string(to_string(kind));
  {
    std::vector<std::string> names;
    for (Approach a : approaches) names.emplace_back(to_string(a));
    config["approach"] = join(names, ',');
    std::vector<std::string> kstr;
    for (int k : ks) kstr.push_back(std::to_string(k));
    config["k"] = join(kstr, ',');
  }
  config["n"] = std::to_string(o.n);
  if (o.max_words > 0) config["max-words"] = std::to_string(o.max_words);
  config["workers"] = std::to_string(o.workers);
  config["out"] = o.out;

  struct Job {
    const Document* doc;
    Approach approach;
    int k;
  };
  std::vector<Job> jobs;
  for (const auto& doc : docs) {
    for (Approach a : approaches) {
      for (int k : ks) jobs.push_back({&doc, a, k});
    }
  }

  std::vector<RunRecord> records(jobs.size());
  parallel_for(jobs.size(), o.workers, [&](std::size_t i) {
    const Job& job = jobs[i];
    RunRecord r;
    r.backend = gateway->identity();
    r.backend_alias = o.backend.alias;
    r.dataset_kind = kind;
    r.seed = o.backend.seed;
    r.document = *job.doc;
    r.approach = job.approach;
    r.k = job.k;
    r.config = config;
    try {
      r.explanation = run_approach(job.approach, *job.doc, job.k, *gateway);
    } catch (const DocumentFailed& e) {
      r.failure = e.what();
    }
    r.timestamp = utc_timestamp();
    records[i] = std::move(r);
  });

  RunLogWriter writer(o.out, /*truncate=*/true);
  std::size_t failed = 0;
  for (const auto& r : records) {
    writer.append(r);
    if (r.failure) ++failed;
  }
  const CallStats calls = gateway->stats();
  out << "explain: " << records.size() << " record(s) for " << docs.size() << " document(s) -> "
      << o.out << " (" << failed << " failed, " << calls.calls_made << " calls, "
      << calls.retries_used << " retries)\n";
  return failed > 0 ? kExitPartial : kExitOk;
}

// ---------------------------------------------------------------------------
// evaluate

struct EvaluateOptions {
  BackendOptions backend;
  std::string log;
  std::string out;
  int workers = 1;
};

int cmd_evaluate(const EvaluateOptions& o, std::ostream& out, std::ostream&) {
  if (o.log.empty()) throw ConfigError("evaluate needs --log <run log>");
  if (o.workers < 1) throw ConfigError("--workers must be >= 1");
  auto gateway = make_gateway(o.backend);
  std::vector<RunRecord> records = load_runs(o.log);

  const BackendIdentity identity = gateway->identity();
  std::vector<std::size_t> pending;
  std::size_t skipped = 0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const RunRecord& r = records[i];
    if (!r.explanation) continue;
    if (r.dcr) {
      ++skipped;
      continue;
    }
    if (!(r.backend == identity)) {
      throw ConfigError("record " + std::to_string(i + 1) + " was explained by model '" +
                        r.backend.model_name + "' at temperature " +
                        format_decimal(r.backend.temperature) +
                        "; the decision-changing score must use that same backend, but '" +
                        identity.model_name + "' at temperature " +
                        format_decimal(identity.temperature) + " is configured");
    }
    pending.push_back(i);
  }

  parallel_for(pending.size(), o.workers, [&](std::size_t j) {
    RunRecord& r = records[pending[j]];
    Document doc = r.document;
    doc.dataset_kind = r.dataset_kind;
    r.dcr = decision_changing_score(doc, *r.explanation, *gateway);
  });

  const std::string target = o.out.empty() ? o.log : o.out;
  persist(records, target);

  std::size_t excluded = 0;
  for (std::size_t i : pending) excluded += records[i].dcr->excluded ? 1 : 0;
  out << "evaluate: scored " << pending.size() - excluded << ", excluded " << excluded
      << ", already evaluated " << skipped << " -> " << target << "\n";
  return excluded > 0 ? kExitPartial : kExitOk;
}

// ---------------------------------------------------------------------------
// report

struct ReportOptions {
  std::string log;
  std::string csv_out;
  std::string curves_out;
};

int cmd_report(const ReportOptions& o, std::ostream& out, std::ostream&) {
  if (o.log.empty()) throw ConfigError("report needs --log <run log>");
  const std::vector<RunRecord> records = load_runs(o.log);
  const ResultsTable table = build_table(records);
  if (table.rows.empty()) throw EmptyInput("no evaluated records in " + o.log);
  out << table.to_text();
  if (!o.csv_out.empty()) write_text(o.csv_out, table.to_csv());
  if (!o.curves_out.empty()) emit_k_curves(records, o.curves_out);
  return kExitOk;
}

// ---------------------------------------------------------------------------
// heatmap

struct HeatmapOptions {
  BackendOptions backend;
  DatasetOptions dataset;
  std::string doc_id;
  std::string text;
  std::string approach = "cfp";
  int k = 3;
  int n = 10;
  bool allow_zero_temperature = false;
  std::string out = "heatmap.html";
  std::string log;
};

int cmd_heatmap(const HeatmapOptions& o, std::ostream& out, std::ostream&) {
  if (o.n <= 1) throw ConfigError("--n must be greater than 1 for a weight vector");
  const auto approach = parse_approach(o.approach);
  if (!approach || *approach == Approach::DP)
    throw ConfigError("heatmap --approach must be cfp or cfs");
  if (o.backend.temperature <= 0.0 && !o.allow_zero_temperature) {
    throw ConfigError("heatmap needs --temperature > 0 (or --allow-zero-temperature)");
  }

  Document doc;
  if (!o.text.empty()) {
    doc.id = "text";
    doc.text = o.text;
    doc.dataset_kind = o.dataset.kind.empty() ? DatasetKind::Amazon : resolve_kind(o.dataset);
  } else {
    if (o.dataset.path.empty() || o.doc_id.empty())
      throw ConfigError("heatmap needs --text, or --dataset with --doc-id");
    const DatasetKind kind = resolve_kind(o.dataset);
    const Corpus corpus = load_corpus(o.dataset.path, kind);
    const auto it = std::find_if(corpus.documents.begin(), corpus.documents.end(),
                                 [&](const Document& d) { return d.id == o.doc_id; });
    if (it == corpus.documents.end())
      throw ConfigError("no document with id " + o.doc_id + " in " + o.dataset.path);
    doc = *it;
  }
  doc.word_count = static_cast<int>(tokenize(doc.text).tokens.size());

  auto gateway = make_gateway(o.backend);
  const WeightVector weights =
      run_sampled(doc, o.k, o.n, *approach, *gateway, SamplingOptions{o.allow_zero_temperature});
  emit_heatmap(doc, weights, o.out);

  if (!o.log.empty()) {
    RunRecord r;
    r.timestamp = utc_timestamp();
    r.backend = gateway->identity();
    r.backend_alias = o.backend.alias;
    r.dataset_kind = doc.dataset_kind;
    r.seed = o.backend.seed;
    r.document = doc;
    r.approach = *approach;
    r.k = o.k;
    r.config = backend_config_map(o.backend, gateway->config());
    r.config["command"] = "heatmap";
    r.config["n"] = std::to_string(o.n);
    r.config["out"] = o.out;
    r.weights = weights;
    RunLogWriter(o.log).append(r);
  }
  out << "heatmap: " << weights.runs << "/" << weights.requested_runs << " run(s) -> " << o.out
      << "\n";
  return weights.excluded_runs > 0 ? kExitPartial : kExitOk;
}

}  // namespace

std::map<std::string, std::string> read_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path.string());
  std::map<std::string, std::string> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": expected key=value");
    }
    std::string key = trim(std::string_view(t).substr(0, eq));
    while (!key.empty() && key[0] == '-') key.erase(0, 1);
    if (key.empty()) {
      throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": empty key");
    }
    out[key] = trim(std::string_view(t).substr(eq + 1));
  }
  return out;
}

int run_cli(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Counterfactual-guided top-k word explanations for black-box sentiment classifiers"};
  app.require_subcommand(1);
  std::string config_file;

  ExplainOptions explain;
  auto* explain_cmd = app.add_subcommand("explain", "Run explanation pipelines over a sampled corpus");
  explain_cmd->add_option("--config", config_file, "key=value file; flags override it");
  add_backend_options(explain_cmd, explain.backend);
  add_dataset_options(explain_cmd, explain.dataset);
  explain_cmd->add_option("--approach", explain.approaches, "dp, cfp, cfs or all")
      ->delimiter(',')
      ->capture_default_str();
  explain_cmd->add_option("--k", explain.ks, "Comma-separated k values (dataset default)")
      ->delimiter(',');
  explain_cmd->add_option("--n", explain.n, "Documents to sample")->capture_default_str();
  explain_cmd->add_option("--max-words", explain.max_words, "Truncate documents to this many words");
  explain_cmd->add_option("--workers", explain.workers, "Concurrent documents")->capture_default_str();
  explain_cmd->add_option("--out", explain.out, "Run log to write")->capture_default_str();

  EvaluateOptions evaluate;
  auto* evaluate_cmd = app.add_subcommand("evaluate", "Add decision-changing scores to a run log");
  evaluate_cmd->add_option("--config", config_file, "key=value file; flags override it");
  add_backend_options(evaluate_cmd, evaluate.backend);
  evaluate_cmd->add_option("--log", evaluate.log, "Run log to evaluate");
  evaluate_cmd->add_option("--out", evaluate.out, "Output log (defaults to rewriting --log)");
  evaluate_cmd->add_option("--workers", evaluate.workers, "Concurrent documents")
      ->capture_default_str();

  ReportOptions report;
  auto* report_cmd = app.add_subcommand("report", "Print the results table of an evaluated log");
  report_cmd->add_option("--config", config_file, "key=value file; flags override it");
  report_cmd->add_option("--log", report.log, "Evaluated run log");
  report_cmd->add_option("--csv-out", report.csv_out, "Write the table as CSV");
  report_cmd->add_option("--curves-out", report.curves_out, "Write DCR-vs-k series as CSV");

  HeatmapOptions heatmap;
  heatmap.backend.temperature = 1.0;
  auto* heatmap_cmd = app.add_subcommand("heatmap", "Sample explanations and render a word heatmap");
  heatmap_cmd->add_option("--config", config_file, "key=value file; flags override it");
  add_backend_options(heatmap_cmd, heatmap.backend);
  add_dataset_options(heatmap_cmd, heatmap.dataset);
  heatmap_cmd->add_option("--doc-id", heatmap.doc_id, "Document id (1-based line number)");
  heatmap_cmd->add_option("--text", heatmap.text, "Explain this text instead of a corpus line");
  heatmap_cmd->add_option("--approach", heatmap.approach, "cfp or cfs")->capture_default_str();
  heatmap_cmd->add_option("--k", heatmap.k, "Words per run")->capture_default_str();
  heatmap_cmd->add_option("--n", heatmap.n, "Sampling runs (> 1)")->capture_default_str();
  heatmap_cmd->add_flag("--allow-zero-temperature", heatmap.allow_zero_temperature,
                        "Permit sampling at temperature 0");
  heatmap_cmd->add_option("--out", heatmap.out, "HTML file to write")->capture_default_str();
  heatmap_cmd->add_option("--log", heatmap.log, "Append the weight vector to this run log");

  try {
    std::vector<std::string> args = merge_config_file(raw_args);
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  }

  try {
    if (*explain_cmd) return cmd_explain(explain, out, err);
    if (*evaluate_cmd) return cmd_evaluate(evaluate, out, err);
    if (*report_cmd) return cmd_report(report, out, err);
    return cmd_heatmap(heatmap, out, err);
  } catch (const AllRunsFailed& e) {
    err << "error: " << e.what() << "\n";
    return kExitPartial;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  }
}

int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run_cli(args, out, err);
}

}  // namespace cfx
