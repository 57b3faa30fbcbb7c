// Command-line surface: train, cluster, topics, baseline.
//
// Exit codes: 0 success, 1 runtime failure, 2 bad flags. Diagnostics go to
// stderr; machine-readable results (metrics lines, topic reports) go to
// stdout.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "dntm/analysis.hpp"
#include "dntm/checkpoint.hpp"
#include "dntm/corpus.hpp"
#include "dntm/digest.hpp"
#include "dntm/kmeans.hpp"
#include "dntm/trainer.hpp"

#ifndef DNTM_VERSION
#define DNTM_VERSION "0.0.0"
#endif

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr std::size_t kMinDocLen = 2;  // discard documents with fewer words

struct CorpusArgs {
  std::string path;
  std::string format = "plain";
  std::string gold_path;      // external labels file
  bool gold_embedded = false; // use labels embedded in the plain file
};

// Loads, attaches gold labels, applies the short-document filter, and
// reports what happened to stderr.
dntm::Corpus load_prepared(const CorpusArgs& args, const dntm::Vocabulary* fixed_vocab) {
  std::ifstream in(args.path);
  if (!in) throw std::runtime_error("cannot open corpus: " + args.path);

  dntm::LoadStats stats;
  dntm::Corpus corpus = args.format == "bow" ? dntm::load_corpus_bow(in)
                                             : dntm::load_corpus_plain(in, fixed_vocab, &stats);
  if (!args.gold_path.empty()) {
    std::ifstream gin(args.gold_path);
    if (!gin) throw std::runtime_error("cannot open labels file: " + args.gold_path);
    dntm::attach_labels(corpus, dntm::load_labels(gin));
  } else if (args.gold_embedded && !corpus.has_gold_labels()) {
    throw std::runtime_error("no embedded labels found in " + args.path);
  }

  std::size_t removed = 0;
  corpus = dntm::filter_short_documents(corpus, kMinDocLen, &removed);
  std::fprintf(stderr, "corpus: %zu documents, %d words in vocabulary", corpus.docs.size(),
               corpus.vocab.size());
  if (stats.dropped_tokens > 0)
    std::fprintf(stderr, ", %zu unknown tokens dropped", stats.dropped_tokens);
  if (stats.dropped_docs > 0)
    std::fprintf(stderr, ", %zu documents empty after token drops", stats.dropped_docs);
  if (removed > 0) std::fprintf(stderr, ", %zu short documents removed", removed);
  std::fprintf(stderr, "\n");
  return corpus;
}

// Gold labels when requested via --gold/--gold-embedded; empty otherwise.
std::vector<int> gold_for_metrics(const CorpusArgs& args, const dntm::Corpus& corpus) {
  if (args.gold_path.empty() && !args.gold_embedded) return {};
  return dntm::corpus_gold_labels(corpus);
}

void write_labels_file(const std::string& path, const std::vector<int>& labels) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open output file: " + path);
  for (int label : labels) out << label << "\n";
  if (!out) throw std::runtime_error("write failed: " + path);
}

void print_metrics(const std::vector<int>& pred, const std::vector<int>& gold) {
  std::printf("purity=%.4f nmi=%.4f\n", dntm::purity(pred, gold), dntm::nmi(pred, gold));
}

json config_as_json(const dntm::TrainConfig& config) {
  json obj = json::object();
  std::istringstream lines(dntm::write_train_config(config));
  std::string line;
  while (std::getline(lines, line)) {
    const std::size_t eq = line.find('=');
    if (eq != std::string::npos) obj[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return obj;
}

// ---------------------------------------------------------------- train --

struct TrainArgs {
  CorpusArgs corpus;
  std::string labels_path;
  std::string out_dir;
  int topics = 0;
  std::string config_path;
  std::uint64_t seed = 0;
  bool seed_given = false;
  bool deterministic = false;
  int threads = -1;
  bool force = false;
};

int run_train(const TrainArgs& args) {
  dntm::TrainConfig config;
  if (!args.config_path.empty()) {
    std::ifstream cin_file(args.config_path);
    if (!cin_file) throw std::runtime_error("cannot open config: " + args.config_path);
    dntm::apply_train_config(config, cin_file);
  }
  // Flags override the config file.
  config.num_topics = args.topics;
  if (args.seed_given) config.seed = args.seed;
  if (args.deterministic) config.deterministic = true;
  if (args.threads >= 0) config.threads = args.threads;

  const fs::path out(args.out_dir);
  fs::create_directories(out);
  const fs::path checkpoint_path = out / "checkpoint.dntm";
  const fs::path config_path = out / "config.txt";
  const fs::path log_path = out / "train.log";
  const fs::path manifest_path = out / "manifest.json";
  if (!fs::is_empty(out)) {
    if (!args.force)
      throw std::runtime_error("output directory is not empty: " + args.out_dir +
                               " (pass --force to overwrite)");
    for (const fs::path& p : {checkpoint_path, config_path, log_path, manifest_path})
      fs::remove(p);
  }

  CorpusArgs corpus_args = args.corpus;
  corpus_args.gold_path = args.labels_path;
  const dntm::Corpus corpus = load_prepared(corpus_args, nullptr);
  config.log_path = log_path.string();
  config.validate();

  {
    std::ofstream cfg_out(config_path);
    if (!cfg_out) throw std::runtime_error("cannot write config: " + config_path.string());
    cfg_out << dntm::write_train_config(config);
  }

  // The manifest is written before training starts so an interrupted run
  // still records what it was doing.
  json manifest;
  manifest["tool"] = "dntm";
  manifest["version"] = DNTM_VERSION;
  manifest["command"] = "train";
  manifest["format"] = args.corpus.format;
  manifest["seed"] = config.seed;
  manifest["deterministic"] = config.deterministic;
  manifest["inputs"]["corpus"] = {{"path", args.corpus.path},
                                  {"sha256", dntm::sha256_hex_file(args.corpus.path)}};
  if (!args.labels_path.empty())
    manifest["inputs"]["labels"] = {{"path", args.labels_path},
                                    {"sha256", dntm::sha256_hex_file(args.labels_path)}};
  if (!args.config_path.empty())
    manifest["inputs"]["config"] = {{"path", args.config_path},
                                    {"sha256", dntm::sha256_hex_file(args.config_path)}};
  manifest["config"] = config_as_json(config);
  manifest["artifacts"] = {{"checkpoint", checkpoint_path.string()},
                           {"config", config_path.string()},
                           {"log", log_path.string()}};
  {
    std::ofstream mout(manifest_path);
    if (!mout) throw std::runtime_error("cannot write manifest: " + manifest_path.string());
    mout << manifest.dump(2) << "\n";
  }

  const dntm::Vocabulary& vocab = corpus.vocab;
  auto sink = [&](int epoch, const dntm::ModelParams& params) {
    dntm::save_checkpoint(params, vocab, checkpoint_path.string());
    std::fprintf(stderr, "checkpoint written after epoch %d\n", epoch);
  };
  auto [params, log] = dntm::train(corpus, config, sink);
  dntm::save_checkpoint(params, vocab, checkpoint_path.string());

  if (!log.epochs.empty()) {
    const auto& last = log.epochs.back();
    std::fprintf(stderr, "trained %d epochs; final mean batch loss %.6g\n", last.epoch, last.loss);
  }
  std::fprintf(stderr, "checkpoint: %s\n", checkpoint_path.string().c_str());
  return 0;
}

// -------------------------------------------------------------- cluster --

struct ClusterArgs {
  std::string checkpoint_path;
  CorpusArgs corpus;
  std::string out_path;
  int threads = 0;
};

dntm::Corpus load_against_checkpoint(const CorpusArgs& args, const dntm::Checkpoint& ck) {
  if (args.format == "bow") {
    dntm::Corpus corpus = load_prepared(args, nullptr);
    if (corpus.vocab.size() != ck.params.vocab_size)
      throw std::runtime_error("checkpoint dimension mismatch: corpus has " +
                               std::to_string(corpus.vocab.size()) + " terms, checkpoint has " +
                               std::to_string(ck.params.vocab_size));
    return corpus;
  }
  return load_prepared(args, &ck.vocab);
}

int run_cluster(const ClusterArgs& args) {
  const dntm::Checkpoint ck = dntm::load_checkpoint(args.checkpoint_path);
  const dntm::Corpus corpus = load_against_checkpoint(args.corpus, ck);
  const dntm::ClusterAssignment assignment =
      dntm::assign_clusters(ck.params, corpus, args.threads);
  write_labels_file(args.out_path, assignment.labels);
  std::fprintf(stderr, "assignments written: %s\n", args.out_path.c_str());

  const std::vector<int> gold = gold_for_metrics(args.corpus, corpus);
  if (!gold.empty()) print_metrics(assignment.labels, gold);
  return 0;
}

// --------------------------------------------------------------- topics --

struct TopicsArgs {
  std::string checkpoint_path;
  CorpusArgs corpus;
  int n = 10;
  int topic = -1;  // -1 = all topics
  int threads = 0;
};

int run_topics(const TopicsArgs& args) {
  const dntm::Checkpoint ck = dntm::load_checkpoint(args.checkpoint_path);
  const dntm::Corpus corpus = load_against_checkpoint(args.corpus, ck);
  const dntm::WordTopicPosterior posterior =
      dntm::word_topic_posterior(ck.params, corpus, args.threads);

  if (args.topic >= ck.params.num_topics)
    throw std::runtime_error("topic index out of range: " + std::to_string(args.topic));
  const int first = args.topic >= 0 ? args.topic : 0;
  const int last = args.topic >= 0 ? args.topic + 1 : ck.params.num_topics;
  for (int t = first; t < last; ++t) {
    const auto ranked = dntm::top_words(posterior, t, args.n);
    for (std::size_t r = 0; r < ranked.size(); ++r)
      std::printf("%d\t%zu\t%s\t%.6g\n", t, r + 1, corpus.vocab.word(ranked[r].first).c_str(),
                  ranked[r].second);
  }
  return 0;
}

// ------------------------------------------------------------- baseline --

struct BaselineArgs {
  CorpusArgs corpus;
  std::string out_path;
  int clusters = 0;
  std::uint64_t seed = 1;
  int restarts = 5;
  int threads = 0;
};

int run_baseline(const BaselineArgs& args) {
  const dntm::Corpus corpus = load_prepared(args.corpus, nullptr);

  dntm::KmeansResult best;
  bool have = false;
  for (int r = 0; r < args.restarts; ++r) {
    dntm::KmeansResult result =
        dntm::kmeans_baseline(corpus, args.clusters, args.seed + static_cast<std::uint64_t>(r),
                              args.threads);
    std::fprintf(stderr, "restart %d: inertia %.6f after %d iterations\n", r, result.inertia,
                 result.iterations);
    if (!have || result.inertia < best.inertia) {
      best = std::move(result);
      have = true;
    }
  }

  if (!args.out_path.empty()) {
    write_labels_file(args.out_path, best.assignment.labels);
    std::fprintf(stderr, "assignments written: %s\n", args.out_path.c_str());
  }
  const std::vector<int> gold = gold_for_metrics(args.corpus, corpus);
  if (!gold.empty()) print_metrics(best.assignment.labels, gold);
  return 0;
}

void add_corpus_options(CLI::App* cmd, CorpusArgs& args, bool with_gold) {
  cmd->add_option("--corpus", args.path, "corpus file")->required();
  cmd->add_option("--format", args.format, "corpus file format")
      ->check(CLI::IsMember({"plain", "bow"}))
      ->capture_default_str();
  if (with_gold) {
    cmd->add_option("--gold", args.gold_path, "gold labels file, one class id per line");
    cmd->add_flag("--gold-embedded", args.gold_embedded,
                  "evaluate against labels embedded in the plain corpus file");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"discriminative neural topic model"};
  app.failure_message(CLI::FailureMessage::help);
  app.require_subcommand(1);

  TrainArgs train_args;
  CLI::App* train_cmd = app.add_subcommand("train", "train a model and write a run directory");
  add_corpus_options(train_cmd, train_args.corpus, false);
  train_cmd->add_option("--labels", train_args.labels_path,
                        "labels file carried through for later evaluation");
  train_cmd->add_option("--out", train_args.out_dir, "output directory")->required();
  train_cmd->add_option("--topics", train_args.topics, "number of topics K")->required();
  train_cmd->add_option("--config", train_args.config_path, "key=value config file");
  train_cmd->add_option("--seed", train_args.seed, "random seed")
      ->each([&](const std::string&) { train_args.seed_given = true; });
  train_cmd->add_flag("--deterministic", train_args.deterministic,
                      "bit-reproducible mode (pins thread count and reduction order)");
  train_cmd->add_option("--threads", train_args.threads, "worker threads (0 = all)");
  train_cmd->add_flag("--force", train_args.force, "overwrite a non-empty output directory");

  ClusterArgs cluster_args;
  CLI::App* cluster_cmd =
      app.add_subcommand("cluster", "assign documents to topics with a trained model");
  cluster_cmd->add_option("--checkpoint", cluster_args.checkpoint_path, "model checkpoint")
      ->required();
  add_corpus_options(cluster_cmd, cluster_args.corpus, true);
  cluster_cmd->add_option("--out", cluster_args.out_path, "assignment output file, one topic per line")
      ->required();
  cluster_cmd->add_option("--threads", cluster_args.threads, "worker threads (0 = all)");

  TopicsArgs topics_args;
  CLI::App* topics_cmd = app.add_subcommand("topics", "report the top words of each topic");
  topics_cmd->add_option("--checkpoint", topics_args.checkpoint_path, "model checkpoint")
      ->required();
  add_corpus_options(topics_cmd, topics_args.corpus, false);
  topics_cmd->add_option("--n", topics_args.n, "words per topic")->capture_default_str();
  topics_cmd->add_option("--topic", topics_args.topic, "restrict the report to one topic");
  topics_cmd->add_option("--threads", topics_args.threads, "worker threads (0 = all)");

  BaselineArgs baseline_args;
  CLI::App* baseline_cmd =
      app.add_subcommand("baseline", "k-means on tf-idf vectors, for comparison");
  add_corpus_options(baseline_cmd, baseline_args.corpus, true);
  baseline_cmd->add_option("--clusters", baseline_args.clusters, "number of clusters")->required();
  baseline_cmd->add_option("--seed", baseline_args.seed, "random seed")->capture_default_str();
  baseline_cmd->add_option("--restarts", baseline_args.restarts,
                           "independent runs; the lowest-inertia one wins")
      ->capture_default_str();
  baseline_cmd->add_option("--out", baseline_args.out_path, "assignment output file");
  baseline_cmd->add_option("--threads", baseline_args.threads, "worker threads (0 = all)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    app.exit(e);
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    app.exit(e);
    return 0;
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*train_cmd) return run_train(train_args);
    if (*cluster_cmd) return run_cluster(cluster_args);
    if (*topics_cmd) return run_topics(topics_args);
    if (*baseline_cmd) return run_baseline(baseline_args);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
