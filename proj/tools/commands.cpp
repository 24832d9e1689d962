#include "commands.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "tweetembed/checkpoint.hpp"
#include "tweetembed/corpus.hpp"
#include "tweetembed/dataset.hpp"
#include "tweetembed/embeddings.hpp"
#include "tweetembed/errors.hpp"
#include "tweetembed/evaluation.hpp"
#include "tweetembed/hashing.hpp"
#include "tweetembed/synthetic.hpp"
#include "tweetembed/trainer.hpp"

namespace tweetembed::app {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------- file helpers

std::ifstream open_input(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read '" + path.string() + "'");
  return in;
}

std::vector<std::string> read_lines(const fs::path& path) {
  auto in = open_input(path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  if (in.bad()) throw InputError("error while reading '" + path.string() + "'");
  return lines;
}

void write_file(const fs::path& path, const std::function<void(std::ostream&)>& fill) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write '" + path.string() + "'");
  fill(out);
  out.flush();
  if (!out) throw InputError("error while writing '" + path.string() + "'");
}

fs::path with_suffix(const fs::path& path, std::string_view suffix) {
  return fs::path(path.string() + std::string(suffix));
}

fs::path manifest_path(const fs::path& output) { return with_suffix(output, ".manifest.json"); }

json file_entry(const fs::path& path) {
  return {{"name", path.filename().string()}, {"fnv1a64", to_hex(hash_file(path))}};
}

std::string utc_now() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string percent_label(double fraction) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%03ld", std::lround(fraction * 100));
  return buf;
}

// One manifest per subcommand run. Inputs and outputs are recorded by base
// name and content hash, so moving a run directory does not change it.
// Timestamps are left out in deterministic mode.
class Manifest {
 public:
  Manifest(std::string subcommand, bool deterministic) : deterministic_(deterministic) {
    j_["subcommand"] = std::move(subcommand);
    j_["tool_version"] = kToolVersion;
    j_["deterministic"] = deterministic;
    j_["config"] = json::object();
    j_["inputs"] = json::array();
    j_["outputs"] = json::array();
    j_["results"] = json::object();
    if (!deterministic) j_["started_utc"] = utc_now();
  }

  json& config() { return j_["config"]; }
  json& results() { return j_["results"]; }
  void input(const fs::path& path) { j_["inputs"].push_back(file_entry(path)); }
  void output(const fs::path& path) { j_["outputs"].push_back(file_entry(path)); }
  const json& data() const { return j_; }

  void write(const fs::path& path) {
    if (!deterministic_) j_["finished_utc"] = utc_now();
    write_file(path, [&](std::ostream& o) { o << j_.dump(2) << '\n'; });
  }

 private:
  bool deterministic_;
  json j_;
};

struct Context {
  std::ostream& out;
  std::ostream& err;
};

// ------------------------------------------------------------------- ingest

struct IngestOptions {
  std::string corpus;
  std::string db;
  std::string dict;
  unsigned threads = 1;
  bool deterministic = false;
};

struct IngestSummary {
  NGramDatabase db;
  Dictionary dict;
};

IngestSummary do_ingest(const IngestOptions& opt, Context& ctx) {
  const auto tweets = read_lines(opt.corpus);
  IngestSummary s;
  s.db = count_ngrams(tweets, opt.threads);
  s.dict = build_dictionary(s.db);
  if (s.db.empty()) {
    ctx.err << "warning: '" << opt.corpus << "' contains no tokens; the database is empty\n";
  }
  write_file(opt.db, [&](std::ostream& o) { write_database(s.db, o); });
  write_file(opt.dict, [&](std::ostream& o) { write_dictionary(s.dict, o); });

  Manifest m("ingest", opt.deterministic);
  m.config() = {{"threads", opt.threads}};
  m.input(opt.corpus);
  m.output(opt.db);
  m.output(opt.dict);
  m.results() = {{"tweets", s.db.total_tweets},
                 {"tokens", s.db.total_tokens},
                 {"distinct_5grams", s.db.distinct()},
                 {"dictionary_size", s.dict.size()}};
  m.write(manifest_path(opt.db));

  ctx.out << "tweets\t" << s.db.total_tweets << '\n'
          << "tokens\t" << s.db.total_tokens << '\n'
          << "distinct_5grams\t" << s.db.distinct() << '\n'
          << "dictionary_size\t" << s.dict.size() << '\n';
  return s;
}

// ------------------------------------------------------------------ dataset

struct DatasetOptions {
  std::string db;
  std::string out;
  std::size_t vocab_size = 0;
  double fraction = 1.0;
  double validation_ratio = kDefaultValidationRatio;
  std::uint64_t seed = kDefaultSplitSeed;
  bool include_boundary = false;
  bool deterministic = false;
};

struct DatasetSummary {
  std::size_t available = 0;
  DatasetFile file;
};

void check_fraction(double fraction) {
  if (!(fraction > 0 && fraction <= 1)) {
    throw std::invalid_argument("fraction must lie in (0, 1], got " + std::to_string(fraction));
  }
}

DatasetSummary do_dataset(const DatasetOptions& opt, const NGramDatabase& db, Context& ctx) {
  check_fraction(opt.fraction);
  const Dictionary dict = build_dictionary(db);
  const Vocabulary vocab = select_vocabulary(dict, opt.vocab_size);
  const auto tuples = filter_ngrams(db, vocab, opt.include_boundary);
  if (tuples.size() < 2) {
    throw InputError("only " + std::to_string(tuples.size()) + " usable 5-grams for |V| = " +
                     std::to_string(opt.vocab_size) + "; need at least 2 to split");
  }
  DatasetSummary s;
  s.available = tuples.size();
  s.file.vocab_size = vocab.size();
  s.file.vocab_fingerprint = vocab.fingerprint();
  s.file.include_boundary = opt.include_boundary;
  s.file.split = split_dataset(tuples, opt.validation_ratio, opt.fraction, opt.seed);
  write_file(opt.out, [&](std::ostream& o) { write_dataset(s.file, o); });

  Manifest m("dataset", opt.deterministic);
  m.config() = {{"vocab_size", opt.vocab_size},
                {"fraction", opt.fraction},
                {"validation_ratio", opt.validation_ratio},
                {"seed", opt.seed},
                {"include_boundary", opt.include_boundary}};
  m.input(opt.db);
  m.output(opt.out);
  m.results() = {{"available_5grams", s.available},
                 {"train", s.file.split.train.size()},
                 {"validation", s.file.split.validation.size()},
                 {"vocab_fingerprint", to_hex(s.file.vocab_fingerprint)}};
  m.write(manifest_path(opt.out));

  ctx.out << "vocab_size\tavailable_5grams\ttrain\tvalidation\n"
          << vocab.size() << '\t' << s.available << '\t' << s.file.split.train.size() << '\t'
          << s.file.split.validation.size() << '\n';
  return s;
}

NGramDatabase load_database(const fs::path& path) {
  auto in = open_input(path);
  return read_database(in);
}

// -------------------------------------------------------------------- train

struct TrainOptions {
  std::string dataset;
  std::string out;
  std::string log;  // defaults to <out>.log.tsv
  std::size_t input_dim = 64;
  std::size_t context_dim = 64;
  bool sigmoid_logits = false;
  TrainConfig train;
  bool quiet = false;
};

struct TrainSummary {
  TrainResult result;
  std::size_t train_tuples = 0;
  double mean_seconds = 0;
};

fs::path log_path_for(const TrainOptions& opt) {
  return opt.log.empty() ? with_suffix(opt.out, ".log.tsv") : fs::path(opt.log);
}

// Wall-clock times are not reproducible. In deterministic mode they are
// written as zero everywhere except the .timing.tsv sidecar.
EpochLog reproducible(EpochLog log, bool deterministic) {
  if (deterministic) log.wall_seconds = 0;
  return log;
}

std::string loss_text(double x) {
  std::ostringstream s;
  s << json(x).dump();
  return s.str();
}

TrainSummary do_train(const TrainOptions& opt, Context& ctx) {
  auto in = open_input(opt.dataset);
  const DatasetFile data = read_dataset(in);
  const ModelHyper hyper{data.vocab_size, opt.input_dim, opt.context_dim, opt.sigmoid_logits};
  hyper.validate();
  TrainConfig cfg = opt.train;
  cfg.validate();
  cfg.checkpoint_path = opt.out;
  cfg.vocab_fingerprint = data.vocab_fingerprint;

  const fs::path log_path = log_path_for(opt);
  const fs::path timing_path = with_suffix(opt.out, ".timing.tsv");
  std::ofstream log(log_path, std::ios::binary | std::ios::trunc);
  std::ofstream timing(timing_path, std::ios::binary | std::ios::trunc);
  if (!log) throw InputError("cannot write '" + log_path.string() + "'");
  if (!timing) throw InputError("cannot write '" + timing_path.string() + "'");
  log << "#epoch\ttrain_loss\tval_loss\tsecs\n";
  timing << "epoch\tsecs\n";
  const bool det = cfg.deterministic;
  if (!opt.quiet) ctx.out << "epoch\ttrain_loss\tval_loss\tsecs\n";
  cfg.on_epoch = [&](const EpochLog& e) {
    const auto line = format_epoch_line(reproducible(e, det));
    log << line << '\n' << std::flush;
    char secs[32];
    std::snprintf(secs, sizeof secs, "%.6f", e.wall_seconds);
    timing << e.epoch << '\t' << secs << '\n' << std::flush;
    if (!opt.quiet) ctx.out << line << '\n' << std::flush;
  };

  Manifest m("train", det);
  m.config() = {{"vocab_size", hyper.vocab_size},
                {"emb_dim", hyper.input_dim},
                {"ctx_dim", hyper.context_dim},
                {"sigmoid_logits", hyper.sigmoid_logits},
                {"epochs", cfg.epochs},
                {"batch_size", cfg.batch_size},
                {"learning_rate", cfg.adam.learning_rate},
                {"beta1", cfg.adam.beta1},
                {"beta2", cfg.adam.beta2},
                {"epsilon", cfg.adam.epsilon},
                {"seed", cfg.seed},
                {"split_seed", data.split.seed},
                {"threads", cfg.threads},
                {"patience", cfg.patience},
                {"divergence_factor", cfg.divergence_factor},
                {"include_boundary", data.include_boundary}};
  m.input(opt.dataset);

  TrainSummary s;
  s.train_tuples = data.split.train.size();
  try {
    s.result = train(data.split, hyper, cfg);
  } catch (const DivergenceError&) {
    log.close();
    timing.close();
    ctx.err << "error: training diverged; "
            << (fs::exists(opt.out) ? "the last good checkpoint is kept at '" + opt.out + "'"
                                    : std::string("no epoch completed, no checkpoint written"))
            << '\n';
    throw;
  }
  log.close();
  timing.close();
  if (!log || !timing) throw InputError("error while writing the run log");

  const auto& logs = s.result.logs;
  s.mean_seconds = timing_report(logs).mean_seconds;
  m.output(opt.out);
  m.output(log_path);
  m.results() = {{"epochs_run", logs.size()},
                 {"initial_train_loss", s.result.initial_train_loss},
                 {"initial_validation_loss", s.result.initial_validation_loss},
                 {"final_train_loss", logs.back().train_loss},
                 {"final_validation_loss", logs.back().validation_loss},
                 {"stopped_early", s.result.stopped_early},
                 {"clamped_losses", s.result.clamped_losses},
                 {"train_tuples", data.split.train.size()},
                 {"validation_tuples", data.split.validation.size()}};
  if (!det) m.results()["avg_secs_per_epoch"] = s.mean_seconds;
  m.write(manifest_path(opt.out));
  if (!opt.quiet) {
    ctx.out << "#initial\t" << loss_text(s.result.initial_train_loss) << '\t'
            << loss_text(s.result.initial_validation_loss) << '\n';
  }
  return s;
}

// ------------------------------------------------------------- export/eval

Vocabulary vocabulary_for(const Checkpoint& ckpt, const fs::path& dict_path) {
  auto in = open_input(dict_path);
  const Dictionary dict = read_dictionary(in);
  const auto v = ckpt.params.hyper.vocab_size;
  if (v > dict.size()) {
    throw InputError("checkpoint has |V| = " + std::to_string(v) + " but '" + dict_path.string() +
                     "' lists only " + std::to_string(dict.size()) + " words");
  }
  Vocabulary vocab = select_vocabulary(dict, v);
  if (vocab.fingerprint() != ckpt.vocab_fingerprint) {
    throw InputError("vocabulary mismatch: the top " + std::to_string(v) + " words of '" +
                     dict_path.string() + "' hash to " + to_hex(vocab.fingerprint()) +
                     " but the checkpoint was trained on " + to_hex(ckpt.vocab_fingerprint));
  }
  return vocab;
}

EmbeddingSource parse_source(const std::string& s) {
  if (s == "output") return EmbeddingSource::Output;
  if (s == "input") return EmbeddingSource::Input;
  throw std::invalid_argument("embedding source must be 'output' or 'input', got '" + s + "'");
}

EmbeddingTable table_from_checkpoint(const fs::path& ckpt_path, const fs::path& dict_path,
                                     EmbeddingSource source) {
  const Checkpoint ckpt = load_checkpoint(ckpt_path);
  const Vocabulary vocab = vocabulary_for(ckpt, dict_path);
  Fnv1a h;
  h.update_u64(hash_file(ckpt_path));
  h.update_u64(hash_file(dict_path));
  h.update_u64(source == EmbeddingSource::Output ? 0 : 1);
  return export_embeddings(ckpt.params, vocab, source, h.digest());
}

EmbeddingTable load_embeddings(const fs::path& path) {
  auto in = open_input(path);
  char magic[8] = {};
  in.read(magic, sizeof magic);
  const bool binary = in.gcount() == 8 && std::string_view(magic, 8) == "TWEMBVEC";
  in.clear();
  in.seekg(0);
  return binary ? read_embeddings_binary(in) : read_embeddings_text(in);
}

struct ExportOptions {
  std::string checkpoint;
  std::string dict;
  std::string out;
  std::string binary;
  std::string source = "output";
  bool deterministic = false;
};

EmbeddingTable do_export(const ExportOptions& opt, Context& ctx) {
  const auto source = parse_source(opt.source);
  EmbeddingTable table = table_from_checkpoint(opt.checkpoint, opt.dict, source);
  write_file(opt.out, [&](std::ostream& o) { write_embeddings_text(table, o); });
  if (!opt.binary.empty()) {
    write_file(opt.binary, [&](std::ostream& o) { write_embeddings_binary(table, o); });
  }
  Manifest m("export", opt.deterministic);
  m.config() = {{"source", opt.source}};
  m.input(opt.checkpoint);
  m.input(opt.dict);
  m.output(opt.out);
  if (!opt.binary.empty()) m.output(opt.binary);
  m.results() = {{"words", table.size()},
                 {"dim", table.dim()},
                 {"manifest_hash", to_hex(table.manifest_hash())}};
  m.write(manifest_path(opt.out));
  ctx.out << "words\t" << table.size() << "\ndim\t" << table.dim() << '\n';
  return table;
}

struct EvalOptions {
  std::string embeddings;
  std::string checkpoint;
  std::string dict;
  std::string source = "output";
  std::string classes;
  std::string equivalences;
  std::vector<double> membership{0.70, 0.80};
  std::vector<double> distinction{0.70, 0.80};
  std::vector<double> equivalence{0.85, 0.95};
  std::string out;
  std::string table;
  bool deterministic = false;
};

SuiteThresholds thresholds_of(const EvalOptions& opt) {
  const auto pair = [](const std::vector<double>& v, const char* what) {
    if (v.size() != 2) throw std::invalid_argument(std::string(what) + " needs two thresholds");
    return ThresholdPair{v[0], v[1]};
  };
  return {pair(opt.membership, "class membership"), pair(opt.distinction, "class distinction"),
          pair(opt.equivalence, "word equivalence")};
}

EvaluationReport do_eval(const EvalOptions& opt, Context& ctx) {
  const auto thresholds = thresholds_of(opt);
  Manifest m("eval", opt.deterministic);
  EmbeddingTable table;
  if (!opt.embeddings.empty()) {
    if (!opt.checkpoint.empty()) {
      throw std::invalid_argument("give either --embeddings or --checkpoint, not both");
    }
    table = load_embeddings(opt.embeddings);
    m.input(opt.embeddings);
  } else {
    if (opt.checkpoint.empty() || opt.dict.empty()) {
      throw std::invalid_argument("eval needs --embeddings, or --checkpoint with --dict");
    }
    table = table_from_checkpoint(opt.checkpoint, opt.dict, parse_source(opt.source));
    m.input(opt.checkpoint);
    m.input(opt.dict);
  }
  std::vector<GoldClass> classes;
  {
    auto in = open_input(opt.classes);
    classes = read_classes(in);
    m.input(opt.classes);
  }
  std::vector<EquivalencePair> pairs;
  if (!opt.equivalences.empty()) {
    auto in = open_input(opt.equivalences);
    pairs = read_equivalences(in);
    m.input(opt.equivalences);
  }
  m.config() = {{"membership_thresholds", {thresholds.membership.low, thresholds.membership.high}},
                {"distinction_thresholds",
                 {thresholds.distinction.low, thresholds.distinction.high}},
                {"equivalence_thresholds",
                 {thresholds.equivalence.low, thresholds.equivalence.high}},
                {"source", opt.source}};

  EvaluationReport report;
  report.reports = run_intrinsic_suite(table, classes, pairs, thresholds);
  report.manifest = m.data();
  report.manifest["results"] = {{"table_words", table.size()},
                                {"manifest_hash", to_hex(table.manifest_hash())}};
  if (!opt.out.empty()) {
    write_file(opt.out, [&](std::ostream& o) { write_report_json(report, o); });
  }
  const std::string text = format_report_table(report.reports);
  if (!opt.table.empty()) write_file(opt.table, [&](std::ostream& o) { o << text; });
  ctx.out << text;
  return report;
}

// ------------------------------------------------------------------ nearest

struct NearestOptions {
  std::string embeddings;
  std::string word;
  std::size_t k = 10;
};

void do_nearest(const NearestOptions& opt, Context& ctx) {
  const EmbeddingTable table = load_embeddings(opt.embeddings);
  const auto tokens = tokenize_tweet(opt.word);
  const std::string query = tokens.size() == 1 ? tokens.front() : opt.word;
  char buf[32];
  for (const auto& n : nearest(table, query, opt.k)) {
    std::snprintf(buf, sizeof buf, "%.6f", n.cosine);
    ctx.out << n.word << '\t' << buf << '\n';
  }
}

// --------------------------------------------------------------------- grid

struct GridOptions {
  std::string corpus;
  std::string out;
  std::vector<std::size_t> vocab_sizes{256, 1024, 4096};
  std::vector<double> fractions{0.25, 0.5, 0.75, 1.0};
  double validation_ratio = kDefaultValidationRatio;
  bool include_boundary = false;
  std::string classes;
  std::string equivalences;
  TrainOptions train;
  EvalOptions eval;
};

struct GridRow {
  std::size_t vocab_size = 0;
  double fraction = 0;
  std::size_t available = 0;
  std::size_t train_tuples = 0;
  std::size_t epochs = 0;
  double mean_seconds = 0;
  double final_train = 0;
  double final_validation = 0;
  std::size_t best_epoch = 0;
};

std::string format_grid_table(const std::vector<GridRow>& rows, bool with_times) {
  std::string s;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-8s %-9s %-12s %-12s %-7s %-14s %-12s %-12s %-9s\n", "|V|",
                "fraction", "5grams", "train", "epochs", "avg_secs/epoch", "train_loss",
                "val_loss", "best_val");
  s += buf;
  for (const auto& r : rows) {
    char secs[32] = "-";
    if (with_times) std::snprintf(secs, sizeof secs, "%.3f", r.mean_seconds);
    std::snprintf(buf, sizeof buf, "%-8zu %-9s %-12zu %-12zu %-7zu %-14s %-12.6f %-12.6f %-9zu\n",
                  r.vocab_size, (percent_label(r.fraction) + "%").c_str(), r.available,
                  r.train_tuples, r.epochs, secs, r.final_train, r.final_validation, r.best_epoch);
    s += buf;
  }
  return s;
}

void do_grid(const GridOptions& opt, Context& ctx) {
  const bool det = opt.train.train.deterministic;
  const fs::path root(opt.out);
  std::error_code ec;
  fs::create_directories(root, ec);
  if (ec) throw InputError("cannot create '" + root.string() + "': " + ec.message());
  for (double f : opt.fractions) check_fraction(f);
  if (opt.vocab_sizes.empty() || opt.fractions.empty()) {
    throw std::invalid_argument("grid needs at least one vocabulary size and one fraction");
  }

  IngestOptions ing{opt.corpus, (root / "corpus.db.tsv").string(),
                    (root / "corpus.dict.tsv").string(), opt.train.train.threads, det};
  const IngestSummary ingested = do_ingest(ing, ctx);
  for (std::size_t v : opt.vocab_sizes) {
    if (v == 0 || v > ingested.dict.size()) {
      throw InputError("requested vocabulary size " + std::to_string(v) +
                       " exceeds dictionary size " + std::to_string(ingested.dict.size()));
    }
  }

  std::vector<GridRow> rows;
  std::vector<LabeledReports> evals;
  std::ostringstream timing;
  timing << "vocab_size\tfraction\tavg_secs_per_epoch\ttotal_secs\n";
  for (std::size_t v : opt.vocab_sizes) {
    for (double f : opt.fractions) {
      const fs::path dir = root / ("v" + std::to_string(v) + "_f" + percent_label(f));
      fs::create_directories(dir, ec);
      if (ec) throw InputError("cannot create '" + dir.string() + "': " + ec.message());
      ctx.out << "== |V| = " << v << ", fraction = " << f << '\n';

      DatasetOptions ds{ing.db, (dir / "dataset.tsv").string(), v, f, opt.validation_ratio,
                        opt.train.train.seed, opt.include_boundary, det};
      const DatasetSummary d = do_dataset(ds, ingested.db, ctx);

      TrainOptions tr = opt.train;
      tr.dataset = ds.out;
      tr.out = (dir / "checkpoint.bin").string();
      tr.log = (dir / "train.log.tsv").string();
      tr.quiet = true;
      const TrainSummary t = do_train(tr, ctx);
      const auto& logs = t.result.logs;

      GridRow row{v, f, d.available, t.train_tuples, logs.size(), t.mean_seconds,
                  logs.back().train_loss, logs.back().validation_loss, 0};
      double best = std::numeric_limits<double>::infinity();
      for (const auto& e : logs) {
        if (e.validation_loss < best) {
          best = e.validation_loss;
          row.best_epoch = e.epoch;
        }
      }
      rows.push_back(row);
      char secs[64];
      std::snprintf(secs, sizeof secs, "%.6f\t%.6f", t.mean_seconds,
                    timing_report(logs).total_seconds);
      timing << v << '\t' << f << '\t' << secs << '\n';

      ExportOptions ex{tr.out, ing.dict, (dir / "embeddings.txt").string(),
                       (dir / "embeddings.bin").string(), "output", det};
      do_export(ex, ctx);

      if (!opt.classes.empty()) {
        EvalOptions ev = opt.eval;
        ev.embeddings = ex.binary;
        ev.classes = opt.classes;
        ev.equivalences = opt.equivalences;
        ev.out = (dir / "report.json").string();
        ev.table = (dir / "report.txt").string();
        ev.deterministic = det;
        const auto report = do_eval(ev, ctx);
        evals.push_back({"V=" + std::to_string(v) + " f=" + percent_label(f) + "%",
                         report.reports});
      }
    }
  }

  const std::string table = format_grid_table(rows, !det);
  write_file(root / "grid_summary.txt", [&](std::ostream& o) { o << table; });
  json summary = json::array();
  for (const auto& r : rows) {
    json row = {{"vocab_size", r.vocab_size},     {"fraction", r.fraction},
                {"available_5grams", r.available}, {"train_tuples", r.train_tuples},
                {"epochs", r.epochs},              {"final_train_loss", r.final_train},
                {"final_validation_loss", r.final_validation},
                {"best_validation_epoch", r.best_epoch}};
    if (!det) row["avg_secs_per_epoch"] = r.mean_seconds;
    summary.push_back(row);
  }
  write_file(root / "grid_summary.json", [&](std::ostream& o) { o << summary.dump(2) << '\n'; });
  write_file(root / "grid.timing.tsv", [&](std::ostream& o) { o << timing.str(); });
  if (!evals.empty()) {
    const std::string pivot = format_intrinsic_table(evals, thresholds_of(opt.eval));
    write_file(root / "grid_eval.txt", [&](std::ostream& o) { o << pivot; });
    ctx.out << pivot;
  }
  ctx.out << table;
}

// -------------------------------------------------------------------- synth

struct SynthOptions {
  std::string kind = "class";
  std::string out;
  std::string gold;
  std::size_t tweets = 10000;
  std::uint64_t seed = 1;
  std::size_t classes = 8;
  std::size_t words_per_class = 32;
  double exponent = 1.0;
  double bigram_rate = 0.0;
  std::size_t vocabulary = 5000;
  bool decorate = false;
};

void do_synth(const SynthOptions& opt, Context& ctx) {
  std::vector<std::string> tweets;
  if (opt.kind == "class") {
    ClassLanguageConfig cfg;
    cfg.classes = opt.classes;
    cfg.words_per_class = opt.words_per_class;
    cfg.tweets = opt.tweets;
    cfg.zipf_exponent = opt.exponent;
    cfg.bigram_rate = opt.bigram_rate;
    cfg.seed = opt.seed;
    auto lang = make_class_language(cfg);
    tweets = std::move(lang.tweets);
    if (!opt.gold.empty()) {
      write_file(opt.gold, [&](std::ostream& o) {
        for (const auto& c : lang.classes) {
          for (const auto& w : c.members) o << c.name << '\t' << w << '\n';
        }
      });
    }
  } else if (opt.kind == "zipf") {
    ZipfCorpusConfig cfg;
    cfg.vocabulary = opt.vocabulary;
    cfg.exponent = opt.exponent;
    cfg.tweets = opt.tweets;
    cfg.decorate = opt.decorate;
    cfg.seed = opt.seed;
    tweets = make_zipf_corpus(cfg);
  } else {
    throw std::invalid_argument("synth kind must be 'class' or 'zipf', got '" + opt.kind + "'");
  }
  write_file(opt.out, [&](std::ostream& o) {
    for (const auto& t : tweets) o << t << '\n';
  });
  ctx.out << "tweets\t" << tweets.size() << '\n';
}

// ------------------------------------------------------------------ parsing

void add_train_flags(CLI::App* sub, TrainOptions& t) {
  sub->add_option("--emb-dim", t.input_dim, "Input embedding width d_in")->capture_default_str();
  sub->add_option("--ctx-dim", t.context_dim, "Context layer width d_ctx")->capture_default_str();
  sub->add_flag("--sigmoid-logits", t.sigmoid_logits, "Apply a sigmoid to the output logits");
  sub->add_option("--epochs", t.train.epochs)->capture_default_str();
  sub->add_option("--batch-size", t.train.batch_size)->capture_default_str();
  sub->add_option("--lr", t.train.adam.learning_rate, "Adam learning rate")->capture_default_str();
  sub->add_option("--seed", t.train.seed)->capture_default_str();
  sub->add_option("--threads", t.train.threads, "Gradient shards per batch")
      ->capture_default_str();
  sub->add_option("--patience", t.train.patience, "Early stopping patience, 0 = off")
      ->capture_default_str();
  sub->add_option("--divergence-factor", t.train.divergence_factor,
                  "Abort when the train loss exceeds this multiple of the initial loss")
      ->capture_default_str();
  sub->add_flag("--deterministic", t.train.deterministic,
                "Byte-reproducible outputs: no timestamps, zero wall times");
}

void add_threshold_flags(CLI::App* sub, EvalOptions& e) {
  sub->add_option("--cm-thresholds", e.membership, "Class membership thresholds (low high)")
      ->expected(2)
      ->capture_default_str();
  sub->add_option("--cd-thresholds", e.distinction, "Class distinction thresholds (low high)")
      ->expected(2)
      ->capture_default_str();
  sub->add_option("--we-thresholds", e.equivalence, "Word equivalence thresholds (low high)")
      ->expected(2)
      ->capture_default_str();
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Context ctx{out, err};
  CLI::App app{"Word embeddings from a tweet corpus: ingest, dataset, train, export, eval."};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  IngestOptions ingest;
  auto* s_ingest = app.add_subcommand("ingest", "Count 5-grams and build the dictionary");
  s_ingest->add_option("--corpus", ingest.corpus, "One tweet per line")->required();
  s_ingest->add_option("--db", ingest.db, "Output 5-gram database")->required();
  s_ingest->add_option("--dict", ingest.dict, "Output dictionary")->required();
  s_ingest->add_option("--threads", ingest.threads)->capture_default_str();
  s_ingest->add_flag("--deterministic", ingest.deterministic);

  DatasetOptions dataset;
  auto* s_dataset = app.add_subcommand("dataset", "Filter 5-grams to training tuples and split");
  s_dataset->add_option("--db", dataset.db)->required();
  s_dataset->add_option("--vocab-size", dataset.vocab_size)->required();
  s_dataset->add_option("--fraction", dataset.fraction, "Share of the training split kept")
      ->capture_default_str();
  s_dataset->add_option("--validation-ratio", dataset.validation_ratio)->capture_default_str();
  s_dataset->add_option("--seed", dataset.seed)->capture_default_str();
  s_dataset->add_flag("--include-boundary", dataset.include_boundary,
                      "Keep windows whose context contains padding");
  s_dataset->add_option("--out", dataset.out)->required();
  s_dataset->add_flag("--deterministic", dataset.deterministic);

  TrainOptions trainopt;
  auto* s_train = app.add_subcommand("train", "Train the model on a dataset file");
  s_train->add_option("--dataset", trainopt.dataset)->required();
  s_train->add_option("--out", trainopt.out, "Checkpoint path")->required();
  s_train->add_option("--log", trainopt.log, "Run log (default <out>.log.tsv)");
  add_train_flags(s_train, trainopt);

  ExportOptions exportopt;
  auto* s_export = app.add_subcommand("export", "Write embeddings from a checkpoint");
  s_export->add_option("--checkpoint", exportopt.checkpoint)->required();
  s_export->add_option("--dict", exportopt.dict, "Dictionary the dataset was built from")
      ->required();
  s_export->add_option("--out", exportopt.out, "Text embeddings")->required();
  s_export->add_option("--binary", exportopt.binary, "Binary embeddings");
  s_export->add_option("--source", exportopt.source, "output (W_output columns) or input")
      ->capture_default_str();
  s_export->add_flag("--deterministic", exportopt.deterministic);

  EvalOptions evalopt;
  auto* s_eval = app.add_subcommand("eval", "Run the intrinsic tests");
  s_eval->add_option("--embeddings", evalopt.embeddings, "Text or binary embedding file");
  s_eval->add_option("--checkpoint", evalopt.checkpoint);
  s_eval->add_option("--dict", evalopt.dict);
  s_eval->add_option("--source", evalopt.source)->capture_default_str();
  s_eval->add_option("--classes", evalopt.classes, "class<TAB>word gold file")->required();
  s_eval->add_option("--equivalences", evalopt.equivalences, "left<TAB>right gold file");
  s_eval->add_option("--out", evalopt.out, "JSON report");
  s_eval->add_option("--table", evalopt.table, "Text report");
  add_threshold_flags(s_eval, evalopt);
  s_eval->add_flag("--deterministic", evalopt.deterministic);

  NearestOptions nearestopt;
  auto* s_nearest = app.add_subcommand("nearest", "Print the nearest words by cosine");
  s_nearest->add_option("--embeddings", nearestopt.embeddings)->required();
  s_nearest->add_option("--word", nearestopt.word)->required();
  s_nearest->add_option("-k", nearestopt.k)->capture_default_str();

  GridOptions grid;
  auto* s_grid = app.add_subcommand("grid", "Run the vocabulary size x fraction matrix");
  s_grid->add_option("--corpus", grid.corpus)->required();
  s_grid->add_option("--out", grid.out, "Output directory")->required();
  s_grid->add_option("--vocab-sizes", grid.vocab_sizes)->delimiter(',')->capture_default_str();
  s_grid->add_option("--fractions", grid.fractions)->delimiter(',')->capture_default_str();
  s_grid->add_option("--validation-ratio", grid.validation_ratio)->capture_default_str();
  s_grid->add_flag("--include-boundary", grid.include_boundary);
  s_grid->add_option("--classes", grid.classes, "Gold classes; enables evaluation");
  s_grid->add_option("--equivalences", grid.equivalences);
  add_train_flags(s_grid, grid.train);
  add_threshold_flags(s_grid, grid.eval);

  SynthOptions synth;
  auto* s_synth = app.add_subcommand("synth", "Write a seeded synthetic corpus");
  s_synth->add_option("--kind", synth.kind, "class or zipf")->capture_default_str();
  s_synth->add_option("--out", synth.out)->required();
  s_synth->add_option("--gold", synth.gold, "Gold classes (class kind only)");
  s_synth->add_option("--tweets", synth.tweets)->capture_default_str();
  s_synth->add_option("--seed", synth.seed)->capture_default_str();
  s_synth->add_option("--classes", synth.classes)->capture_default_str();
  s_synth->add_option("--words-per-class", synth.words_per_class)->capture_default_str();
  s_synth->add_option("--exponent", synth.exponent, "Zipf exponent")->capture_default_str();
  s_synth->add_option("--bigram-rate", synth.bigram_rate,
                      "Chance that a word follows its predecessor (class kind)")
      ->capture_default_str();
  s_synth->add_option("--vocabulary", synth.vocabulary)->capture_default_str();
  s_synth->add_flag("--decorate", synth.decorate, "Add case, punctuation, handles and links");

  std::vector<std::string> argv_storage;
  argv_storage.reserve(args.size() + 1);
  argv_storage.emplace_back("tweetembed");
  argv_storage.insert(argv_storage.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& a : argv_storage) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitInputError;
  }

  try {
    if (s_ingest->parsed()) {
      do_ingest(ingest, ctx);
    } else if (s_dataset->parsed()) {
      do_dataset(dataset, load_database(dataset.db), ctx);
    } else if (s_train->parsed()) {
      do_train(trainopt, ctx);
    } else if (s_export->parsed()) {
      do_export(exportopt, ctx);
    } else if (s_eval->parsed()) {
      do_eval(evalopt, ctx);
    } else if (s_nearest->parsed()) {
      do_nearest(nearestopt, ctx);
    } else if (s_grid->parsed()) {
      do_grid(grid, ctx);
    } else if (s_synth->parsed()) {
      do_synth(synth, ctx);
    }
  } catch (const DivergenceError& e) {
    err << "error: " << e.what() << '\n';
    return kExitDiverged;
  } catch (const InputError& e) {
    err << "error: " << e.what() << '\n';
    return kExitInputError;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kExitInputError;
  } catch (const std::out_of_range& e) {
    err << "error: " << e.what() << '\n';
    return kExitInputError;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitOk;
}

}  // namespace tweetembed::app
