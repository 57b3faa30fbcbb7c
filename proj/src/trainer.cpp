#include "dntm/trainer.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <numeric>
#include <optional>
#include <sstream>
#include <stdexcept>

namespace dntm {

void TrainConfig::validate() const {
  if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
  if (batch_docs < 1) throw std::invalid_argument("batch_docs must be >= 1");
  if (!(fake_ratio >= 0.0) || !std::isfinite(fake_ratio))
    throw std::invalid_argument("fake_ratio must be finite and >= 0");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
    throw std::invalid_argument("learning_rate must be finite and > 0");
  if (!(adam_beta1 > 0.0 && adam_beta1 < 1.0))
    throw std::invalid_argument("adam_beta1 must be in (0,1)");
  if (!(adam_beta2 > 0.0 && adam_beta2 < 1.0))
    throw std::invalid_argument("adam_beta2 must be in (0,1)");
  if (!(adam_eps > 0.0)) throw std::invalid_argument("adam_eps must be > 0");
  if (embed_dim < 1) throw std::invalid_argument("embed_dim must be >= 1");
  if (num_topics < 1) throw std::invalid_argument("num_topics must be >= 1");
  if (!(init_scale > 0.0)) throw std::invalid_argument("init_scale must be > 0");
  if (checkpoint_every < 0) throw std::invalid_argument("checkpoint_every must be >= 0");
  if (threads < 0) throw std::invalid_argument("threads must be >= 0");
  weights.validate();
}

namespace {

std::string fmt_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    double x = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument("trailing");
    return x;
  } catch (const std::exception&) {
    throw std::invalid_argument("config key " + key + ": bad number '" + value + "'");
  }
}

long long parse_int(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    long long x = std::stoll(value, &pos);
    if (pos != value.size()) throw std::invalid_argument("trailing");
    return x;
  } catch (const std::exception&) {
    throw std::invalid_argument("config key " + key + ": bad integer '" + value + "'");
  }
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    unsigned long long x = std::stoull(value, &pos);
    if (pos != value.size()) throw std::invalid_argument("trailing");
    return x;
  } catch (const std::exception&) {
    throw std::invalid_argument("config key " + key + ": bad integer '" + value + "'");
  }
}

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

std::string write_train_config(const TrainConfig& c) {
  std::ostringstream out;
  out << "epochs=" << c.epochs << "\n";
  out << "batch_docs=" << c.batch_docs << "\n";
  out << "fake_ratio=" << fmt_double(c.fake_ratio) << "\n";
  out << "learning_rate=" << fmt_double(c.learning_rate) << "\n";
  out << "adam_beta1=" << fmt_double(c.adam_beta1) << "\n";
  out << "adam_beta2=" << fmt_double(c.adam_beta2) << "\n";
  out << "adam_eps=" << fmt_double(c.adam_eps) << "\n";
  out << "seed=" << c.seed << "\n";
  out << "embed_dim=" << c.embed_dim << "\n";
  out << "num_topics=" << c.num_topics << "\n";
  out << "init_scale=" << fmt_double(c.init_scale) << "\n";
  out << "checkpoint_every=" << c.checkpoint_every << "\n";
  out << "fake_mode=" << to_string(c.fake_mode) << "\n";
  out << "lambda_ent=" << fmt_double(c.weights.lambda_ent) << "\n";
  out << "lambda_kl=" << fmt_double(c.weights.lambda_kl) << "\n";
  out << "lambda_bal=" << fmt_double(c.weights.lambda_bal) << "\n";
  out << "lambda_neg=" << fmt_double(c.weights.lambda_neg) << "\n";
  out << "eps=" << fmt_double(c.weights.eps) << "\n";
  out << "kl_clip=" << fmt_double(c.weights.kl_clip) << "\n";
  out << "threads=" << c.threads << "\n";
  out << "deterministic=" << (c.deterministic ? 1 : 0) << "\n";
  out << "log_path=" << c.log_path << "\n";
  return out.str();
}

void apply_train_config(TrainConfig& c, std::istream& in) {
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    const std::size_t eq = stripped.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(line_no) + ": expected key=value");
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));

    if (key == "epochs") c.epochs = static_cast<int>(parse_int(key, value));
    else if (key == "batch_docs") c.batch_docs = static_cast<int>(parse_int(key, value));
    else if (key == "fake_ratio") c.fake_ratio = parse_double(key, value);
    else if (key == "learning_rate") c.learning_rate = parse_double(key, value);
    else if (key == "adam_beta1") c.adam_beta1 = parse_double(key, value);
    else if (key == "adam_beta2") c.adam_beta2 = parse_double(key, value);
    else if (key == "adam_eps") c.adam_eps = parse_double(key, value);
    else if (key == "seed") c.seed = parse_u64(key, value);
    else if (key == "embed_dim") c.embed_dim = static_cast<int>(parse_int(key, value));
    else if (key == "num_topics") c.num_topics = static_cast<int>(parse_int(key, value));
    else if (key == "init_scale") c.init_scale = parse_double(key, value);
    else if (key == "checkpoint_every") c.checkpoint_every = static_cast<int>(parse_int(key, value));
    else if (key == "fake_mode") c.fake_mode = fake_mode_from_string(value);
    else if (key == "lambda_ent") c.weights.lambda_ent = parse_double(key, value);
    else if (key == "lambda_kl") c.weights.lambda_kl = parse_double(key, value);
    else if (key == "lambda_bal") c.weights.lambda_bal = parse_double(key, value);
    else if (key == "lambda_neg") c.weights.lambda_neg = parse_double(key, value);
    else if (key == "eps") c.weights.eps = parse_double(key, value);
    else if (key == "kl_clip") c.weights.kl_clip = parse_double(key, value);
    else if (key == "threads") c.threads = static_cast<int>(parse_int(key, value));
    else if (key == "deterministic") c.deterministic = parse_int(key, value) != 0;
    else if (key == "log_path") c.log_path = value;
    else throw std::invalid_argument("unknown config key: " + key);
  }
}

TrainConfig parse_train_config(std::istream& in) {
  TrainConfig c;
  apply_train_config(c, in);
  return c;
}

namespace {

// One adaptive-moment update with bias correction; returns false if any
// gradient or updated parameter is non-finite.
bool adam_step(double* theta, double* m, double* v, const double* g, std::size_t n,
               double lr, double b1, double b2, double eps, double c1, double c2) {
  bool ok = true;
  for (std::size_t i = 0; i < n; ++i) {
    const double gi = g[i];
    m[i] = b1 * m[i] + (1.0 - b1) * gi;
    v[i] = b2 * v[i] + (1.0 - b2) * gi * gi;
    theta[i] -= lr * (m[i] * c1) / (std::sqrt(v[i] * c2) + eps);
    ok = ok && std::isfinite(theta[i]);
  }
  return ok;
}

}  // namespace

std::pair<ModelParams, TrainLog> train(const Corpus& corpus, const TrainConfig& config,
                                       const CheckpointSink& on_checkpoint) {
  config.validate();
  if (corpus.docs.empty()) throw std::invalid_argument("empty corpus");
  const int vocab_size = corpus.vocab.size();
  if (vocab_size < 1) throw std::invalid_argument("empty vocabulary");

  Rng rng(config.seed);
  ModelParams params =
      init_params(vocab_size, config.embed_dim, config.num_topics, rng, config.init_scale);

  const std::size_t embed_n = params.embed.size();
  const std::size_t proj_n = params.proj.size();
  const std::size_t bias_n = params.bias.size();
  std::vector<double> m_e(embed_n, 0.0), v_e(embed_n, 0.0);
  std::vector<double> m_w(proj_n, 0.0), v_w(proj_n, 0.0);
  std::vector<double> m_b(bias_n, 0.0), v_b(bias_n, 0.0);

  std::optional<UnigramTable> unigram;
  if (config.fake_mode == FakeMode::kUnigram) unigram.emplace(corpus.vocab);

  std::ofstream log_file;
  if (!config.log_path.empty()) {
    log_file.open(config.log_path, std::ios::app);
    if (!log_file) throw std::runtime_error("cannot open run log: " + config.log_path);
  }

  std::vector<std::size_t> perm(corpus.docs.size());
  std::iota(perm.begin(), perm.end(), 0);

  Gradients grads;
  grads.resize(params);
  BatchOptions opts;
  opts.threads = config.threads;
  opts.deterministic = config.deterministic;

  const int d = config.embed_dim;
  TrainLog log;
  long long step = 0;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    rng.shuffle(perm);

    double loss_sum = 0.0, ent_sum = 0.0, kl_sum = 0.0, bal_sum = 0.0;
    std::size_t word_sum = 0;
    int batches = 0;

    for (std::size_t at = 0; at < perm.size(); at += static_cast<std::size_t>(config.batch_docs)) {
      const std::size_t end = std::min(perm.size(), at + static_cast<std::size_t>(config.batch_docs));
      std::vector<Document> real;
      real.reserve(end - at);
      for (std::size_t i = at; i < end; ++i) real.push_back(corpus.docs[perm[i]]);

      const std::size_t n_fake =
          static_cast<std::size_t>(std::ceil(config.fake_ratio * static_cast<double>(real.size())));
      std::vector<Document> fake;
      fake.reserve(n_fake);
      for (std::size_t f = 0; f < n_fake; ++f) {
        const std::size_t donor = rng.next_below(real.size());
        fake.push_back(sample_fake_document(corpus.vocab, real[donor].size(), rng,
                                            config.fake_mode, unigram ? &*unigram : nullptr));
      }

      BatchStats stats;
      const double loss =
          batch_loss_and_gradients(params, real, fake, config.weights, grads, opts, &stats);
      ++batches;
      const int batch_no = batches;
      auto fail = [&](const char* what) {
        throw std::runtime_error(std::string(what) + " in epoch " + std::to_string(epoch) +
                                 ", batch " + std::to_string(batch_no));
      };
      if (!std::isfinite(loss)) fail("non-finite loss");

      ++step;
      const double c1 = 1.0 / (1.0 - std::pow(config.adam_beta1, static_cast<double>(step)));
      const double c2 = 1.0 / (1.0 - std::pow(config.adam_beta2, static_cast<double>(step)));

      bool ok = true;
      for (std::int32_t word : grads.active_words) {
        const std::size_t off = static_cast<std::size_t>(word) * d;
        ok = adam_step(params.embed.data() + off, m_e.data() + off, v_e.data() + off,
                       grads.d_embed.data() + off, static_cast<std::size_t>(d),
                       config.learning_rate, config.adam_beta1, config.adam_beta2,
                       config.adam_eps, c1, c2) && ok;
      }
      ok = adam_step(params.proj.data(), m_w.data(), v_w.data(), grads.d_proj.data(), proj_n,
                     config.learning_rate, config.adam_beta1, config.adam_beta2, config.adam_eps,
                     c1, c2) && ok;
      ok = adam_step(params.bias.data(), m_b.data(), v_b.data(), grads.d_bias.data(), bias_n,
                     config.learning_rate, config.adam_beta1, config.adam_beta2, config.adam_eps,
                     c1, c2) && ok;
      if (!ok) fail("non-finite gradient or update");

      loss_sum += stats.loss;
      ent_sum += stats.real_entropy_sum;
      kl_sum += stats.real_kl_sum;
      bal_sum += stats.balance_entropy;
      word_sum += stats.real_words;
    }

    if (!params.all_finite())
      throw std::runtime_error("non-finite parameters after epoch " + std::to_string(epoch));

    const auto t1 = std::chrono::steady_clock::now();
    EpochRecord rec;
    rec.epoch = epoch;
    rec.loss = loss_sum / static_cast<double>(batches);
    rec.entropy = ent_sum / static_cast<double>(word_sum);
    rec.kl = kl_sum / static_cast<double>(word_sum);
    rec.balance = bal_sum / static_cast<double>(batches);
    rec.seconds = std::chrono::duration<double>(t1 - t0).count();
    log.epochs.push_back(rec);

    if (log_file.is_open()) {
      char line[256];
      std::snprintf(line, sizeof(line), "%d\t%.10g\t%.10g\t%.10g\t%.10g\t%.3f\n", rec.epoch,
                    rec.loss, rec.entropy, rec.kl, rec.balance, rec.seconds);
      log_file << line;
      log_file.flush();
    }

    if (on_checkpoint && config.checkpoint_every > 0 && epoch % config.checkpoint_every == 0)
      on_checkpoint(epoch, params);
  }

  return {std::move(params), std::move(log)};
}

}  // namespace dntm
