// Acceptance suite: one line per criterion.
//
//   acceptance [--only N,M,...] [--curves PATH]
//
// Exit status is 1 when any criterion fails. A run restricted with --only
// whose criteria are all blocked exits 77 so that ctest reports a skip.

#include "support.hpp"
#include "treevae/metrics.hpp"
#include "treevae/nn/layers.hpp"
#include "treevae/vae/evaluation.hpp"
#include "treevae/vae/trainer.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>

using namespace treevae;
using diff::Graph;
using diff::Matrix;
using diff::Var;

namespace {

enum class Status { pass, fail, blocked };

struct Outcome {
  Status status;
  std::string detail;
};

Outcome verdict(bool ok, std::string detail) { return {ok ? Status::pass : Status::fail, std::move(detail)}; }

std::string fmt(double v, int precision = 6) {
  std::ostringstream os;
  os << std::setprecision(precision) << v;
  return os.str();
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Matrix random_matrix(Eigen::Index r, Eigen::Index c, Rng& rng, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

void perturb(diff::ParameterStore& store, Rng& rng, double scale = 0.3) {
  for (const auto& [name, p] : store.entries()) {
    if (name.find("char_embedding") != std::string::npos) continue;
    store.value(name) += random_matrix(p.value.rows(), p.value.cols(), rng, scale);
  }
}

std::string curves_path = "acceptance_curves.csv";

// 1 ---------------------------------------------------------------------

Outcome vermont_self_test() {
  const char* path = std::getenv("TREEVAE_VERMONT_TRAIN");
  if (path == nullptr || *path == '\0') {
    return {Status::blocked,
            "published Vermont training split not available; set TREEVAE_VERMONT_TRAIN to its CSV or JSONL file"};
  }
  const auto t0 = std::chrono::steady_clock::now();
  const auto records = load_records(path, ColumnMap::openaddresses());
  const auto table = metrics::ZipStatsTable::fit(records);
  const auto s = metrics::pvalue_stats(records, table);
  const double secs = seconds_since(t0);
  const bool ok = std::abs(s.mean - 0.521861) <= 0.005 && std::abs(s.median - 0.537469) <= 0.005 &&
                  std::abs(s.stddev - 0.298400) <= 0.005 && secs < 120.0;
  return verdict(ok, "mean " + fmt(s.mean) + " median " + fmt(s.median) + " stddev " + fmt(s.stddev) + " over " +
                         std::to_string(s.count) + " records in " + fmt(secs, 3) +
                         " s (targets 0.521861 / 0.537469 / 0.298400 +-0.005, under 120 s)");
}

// 2 ---------------------------------------------------------------------

double simpson_tail(double d_sq) {
  const int n = 20000;
  const double h = d_sq / n;
  auto f = [](double x) { return 0.5 * std::exp(-0.5 * x); };
  double s = f(0) + f(d_sq);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(i * h);
  return 1.0 - s * h / 3.0;
}

Outcome chi2_correctness() {
  double closed = 0.0, integrated = 0.0;
  int points = 0;
  for (int i = 0; i <= 500; ++i) {
    const double d = 0.1 * i;
    const double p = metrics::chi2_pvalue(d);
    closed = std::max(closed, std::abs(p - std::exp(-0.5 * d)));
    integrated = std::max(integrated, std::abs(p - simpson_tail(d)));
    ++points;
  }
  return verdict(closed <= 1e-12 && integrated <= 1e-8,
                 "max |p - exp(-d2/2)| " + fmt(closed, 3) + ", max |p - integrated CDF| " + fmt(integrated, 3) +
                     " over " + std::to_string(points) + " points in [0, 50] (tolerances 1e-12, 1e-8)");
}

// 3 ---------------------------------------------------------------------

std::shared_ptr<const nn::Vocabulary> small_vocab() {
  const std::vector<std::string> corpus{"MAIN ST", "05401", "ELM RD", "BARRE"};
  return std::make_shared<const nn::Vocabulary>(nn::Vocabulary::build(corpus));
}

Outcome gradient_fidelity() {
  std::vector<std::pair<std::string, test::GradCheck>> checks;

  {
    Rng rng(3);
    diff::ParameterStore s;
    const auto cell = nn::GruCell::create(s, "gru", 4, 8, rng);
    perturb(s, rng);
    const Matrix x1 = random_matrix(3, 4, rng), x2 = random_matrix(3, 4, rng);
    checks.emplace_back("gru", test::gradient_check(s, [&](Graph& g) {
      Var h = cell.step(g, g.constant(x1), g.constant(Matrix::Zero(3, 8)));
      return diff::sum(diff::square(cell.step(g, g.constant(x2), h)));
    }));
  }
  {
    Rng rng(4);
    diff::ParameterStore s;
    const auto sd = nn::StdDevNetwork::create(s, "stddev0", 8, rng);
    perturb(s, rng);
    const Matrix mu = random_matrix(3, 8, rng);
    checks.emplace_back("stddev", test::gradient_check(s, [&](Graph& g) {
      return diff::sum(diff::mul(sd.forward(g, g.constant(mu)), g.constant(mu)));
    }));
  }
  {
    Rng rng(8);
    diff::ParameterStore s;
    const auto m = nn::StringLiteral::create(s, "string", small_vocab(), nn::StringDims{4, 8, 8}, rng);
    perturb(s, rng);
    const std::vector<std::string> in{"MAIN ST", "", "05401", "ELM"}, out{"BARRE", "05401", "", "MAIN"};
    const std::vector<double> w{0.25, 0.5, 1.0, 0.125};
    for (auto mode : {nn::Sampling::teacher_forcing(), nn::Sampling::always_sampling(), nn::Sampling::scheduled(0.5)}) {
      checks.emplace_back("string p_gt=" + fmt(mode.p_gt, 2), test::gradient_check(s, [&](Graph& g) {
        Rng r(99);
        return m.decode_loss(g, m.encode(g, in), out, w, mode, r).weighted;
      }));
    }
  }
  {
    Rng rng(12);
    diff::ParameterStore s;
    auto st = nn::ScalarTuple::create(s, "scalars", 2, 8, rng);
    perturb(s, rng);
    const Matrix raw = random_matrix(5, 2, rng, 2.0);
    st.whitener().update(raw);
    const std::vector<double> w(5, 0.2);
    const Matrix proj = random_matrix(8, 8, rng);
    checks.emplace_back("scalars", test::gradient_check(s, [&](Graph& g) {
      return st.decode_loss(g, diff::matmul(st.encode(g, raw), g.constant(proj)), raw, w).weighted;
    }));
  }
  {
    Rng rng(15);
    diff::ParameterStore s;
    const auto t = nn::TupleModule::create(s, "tuple", 3, 4, 8, rng);
    perturb(s, rng);
    std::vector<Matrix> kids;
    for (int i = 0; i < 3; ++i) kids.push_back(random_matrix(3, 4, rng));
    const std::vector<double> w{0.5, 0.25, 1.0};
    for (auto mode : {nn::Sampling::teacher_forcing(), nn::Sampling::always_sampling(), nn::Sampling::scheduled(0.5)}) {
      checks.emplace_back("tuple p_gt=" + fmt(mode.p_gt, 2), test::gradient_check(s, [&](Graph& g) {
        Rng r(5);
        std::vector<Var> c;
        for (const auto& k : kids) c.push_back(g.constant(k));
        const nn::TupleDecode d = t.decode(g, t.encode(g, c), c, w, mode, r);
        Var total = diff::sum(diff::square(d.children[2]));
        for (const auto& sk : d.skew) total = diff::add(total, sk);
        return total;
      }));
    }
  }
  for (auto variant : {ModelVariant::tuple, ModelVariant::pass_through, ModelVariant::text_concat}) {
    vae::TrainConfig c;
    c.latent_dim = 8;
    c.state_dim = 8;
    c.embed_dim = 4;
    c.max_string_length = 16;
    c.variant = variant;
    if (variant != ModelVariant::tuple) c.omitted_fields = {"unit", "district", "region"};
    const auto toy = make_toy_dataset(60, 3, 5);
    const auto mc = vae::ModelConfig::from_train(c, parse_schema(kAddressSchemaText));
    vae::TreeVae m = vae::TreeVae::create(mc, vae::TreeVae::build_vocabulary(mc, toy));
    m.update_statistics(toy);
    Rng rng(10);
    perturb(m.store(), rng, 0.2);
    const std::vector<Record> batch(toy.begin(), toy.begin() + 2);
    vae::LossOptions opt;
    opt.beta = 0.3;
    opt.tuple_sampling = nn::Sampling::scheduled(0.5);
    opt.string_sampling = nn::Sampling::scheduled(0.7);
    checks.emplace_back("vae_loss " + std::string(to_string(variant)), test::gradient_check(m.store(), [&](Graph& g) {
      Rng r(11);
      return m.loss(g, batch, opt, r).total;
    }, 6));
  }

  double worst = 0.0;
  std::string where;
  std::size_t probed = 0;
  for (const auto& [name, r] : checks) {
    probed += r.checked;
    if (r.max_rel >= worst) {
      worst = r.max_rel;
      where = name + " " + r.worst;
    }
  }
  return verdict(worst <= 1e-4, "max relative error " + fmt(worst, 3) + " over " + std::to_string(checks.size()) +
                                    " modules, " + std::to_string(probed) + " entries (tolerance 1e-4; worst " +
                                    where + ")");
}

// 4 ---------------------------------------------------------------------

Outcome whitening() {
  Rng rng(9);
  double identity = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const Matrix a = random_matrix(2, 2, rng, std::exp(uniform01(rng) * 6 - 3));
    nn::Whitener w;
    w.set(random_matrix(2, 1, rng, 50.0), a * a.transpose() + 1e-3 * Matrix::Identity(2, 2));
    const Matrix x = random_matrix(10, 2, rng, 30.0);
    identity = std::max(identity, (w.unwhiten(w.whiten(x)) - x).cwiseAbs().maxCoeff());
  }

  const diff::Vector m = (diff::Vector(2) << 44.5, -72.7).finished();
  const Matrix L = (Matrix(2, 2) << 0.3, 0.0, 0.12, 0.2).finished();
  const Matrix S = L * L.transpose();
  const int batch = 256;
  nn::Whitener w;
  for (int step = 0; step < 12000; ++step) {
    Matrix x = random_matrix(batch, 2, rng) * L.transpose();
    x.rowwise() += m.transpose();
    w.update(x);
  }
  // Five stationary standard deviations of the moving averages.
  const double a = nn::Whitener::kDecay, f = std::sqrt((1 - a) / (1 + a) / batch);
  double worst_sigmas = 0.0;
  for (int j = 0; j < 2; ++j) {
    worst_sigmas = std::max(worst_sigmas, std::abs(w.mean()(j) - m(j)) / (f * std::sqrt(S(j, j))));
    worst_sigmas = std::max(worst_sigmas, std::abs(w.cov()(j, j) - S(j, j)) / (f * std::sqrt(2.0) * S(j, j)));
  }
  worst_sigmas = std::max(worst_sigmas, std::abs(w.cov()(0, 1) - S(0, 1)) /
                                            (f * std::sqrt(S(0, 0) * S(1, 1) + S(0, 1) * S(0, 1))));
  return verdict(identity <= 1e-6 && worst_sigmas < 5.0,
                 "max |unwhiten(whiten(x)) - x| " + fmt(identity, 3) + " (tolerance 1e-6); streaming stats within " +
                     fmt(worst_sigmas, 3) + " Monte-Carlo sd of the truth (tolerance 5)");
}

// 5 ---------------------------------------------------------------------

Outcome pool_law() {
  std::string detail;
  bool ok = true;
  for (double p : {1.0 / 8, 1.0 / 5, 1.0 / 3, 1.0 / 2, 1.0}) {
    const double life = vae::simulate_pool_lifetime(p, 64, 100'000, 17);
    const double rel = std::abs(life * p - 1.0);
    ok = ok && rel <= 0.02;
    detail += "p=" + fmt(p, 4) + ": " + fmt(life, 5) + " (1/p " + fmt(1.0 / p, 4) + ") ";
  }
  return verdict(ok, detail + "over 1e5 steps, tolerance 2%");
}

// 6 ---------------------------------------------------------------------

Outcome multiscale_structure() {
  bool ok = true;
  std::string notes;
  vae::TrainConfig c;
  c.multiscale = vae::MultiscaleMode::linear;
  auto bank = vae::multiscale_assign(c);
  for (int i = 0; i < 32; ++i) ok = ok && bank.beta(i, 0.64) == (i + 1) / 32.0 * 0.64;
  notes += "linear exact " + std::string(ok ? "yes" : "no");

  c.multiscale = vae::MultiscaleMode::geometric;
  bank = vae::multiscale_assign(c);
  double r31 = 1.0;
  for (int i = 0; i < 31; ++i) r31 *= 0.9;
  const double geo_err = std::abs(bank.beta(0, 0.64) - r31 * 0.64) / (r31 * 0.64);
  ok = ok && geo_err <= 1e-14;
  notes += ", geometric beta_0 " + fmt(bank.beta(0, 0.64), 8) + " vs 0.9^31*0.64 " + fmt(r31 * 0.64, 8);

  c.multiscale = vae::MultiscaleMode::capacity;
  bank = vae::multiscale_assign(c);
  bool cap = bank.levels[31].capacity == 25.5;
  for (int i = 0; i < 32; ++i) cap = cap && bank.levels[static_cast<std::size_t>(i)].capacity == 10.0 + 0.5 * i;
  ok = ok && cap;
  notes += ", C_31 " + fmt(bank.levels[31].capacity);

  // Structure of a small multiscale model under training.
  vae::TrainConfig t;
  t.multiscale = vae::MultiscaleMode::linear;
  t.n_kl_weight = 4;
  t.steps = 12;
  t.warmup_steps = 6;
  t.batch_size = 8;
  t.latent_dim = t.state_dim = 6;
  t.embed_dim = 4;
  t.max_string_length = 16;
  const auto toy = make_toy_dataset(80, 4, 3);
  const auto mc = vae::ModelConfig::from_train(t, parse_schema(kAddressSchemaText));
  vae::TreeVae m = vae::TreeVae::create(mc, vae::TreeVae::build_vocabulary(mc, toy));
  std::set<std::string> owners;
  for (const auto& [name, p] : m.store().entries()) {
    if (name.starts_with("stddev")) owners.insert(name.substr(0, name.find('/')));
  }
  const bool distinct = m.levels() == 4 && owners.size() == 4;
  bool single_level = true;
  vae::Trainer trainer(m, t, toy);
  for (int step = 0; step < 12; ++step) {
    std::map<std::string, Matrix> before;
    for (const auto& [name, p] : m.store().entries()) {
      if (name.starts_with("stddev")) before[name] = p.value;
    }
    const auto info = trainer.train_step();
    const std::string own = "stddev" + std::to_string(info.level) + "/";
    single_level = single_level && info.level == step % 4 && info.report.level == info.level &&
                   info.report.rows == t.batch_size;
    bool own_moved = false;
    for (const auto& [name, v] : before) {
      const bool moved = m.store().value(name) != v;
      if (name.starts_with(own)) own_moved = own_moved || moved;
      else single_level = single_level && !moved;
    }
    single_level = single_level && own_moved;
  }
  ok = ok && distinct && single_level;
  notes += ", " + std::to_string(owners.size()) + " stddev networks for 4 levels, whole batches on one level: " +
           (single_level ? "yes" : "no");
  return verdict(ok, notes);
}

// 7, 8 ------------------------------------------------------------------

struct ToyRun {
  std::vector<Record> train, test;
  std::optional<vae::TreeVae> model;
  std::vector<vae::MetricRow> rows;
  double untrained_mean = 0.0;
  double trained_mean = 0.0;
  double seconds = 0.0;
};

vae::TrainConfig toy_config() {
  vae::TrainConfig c;
  c.steps = 20'000;
  c.batch_size = 64;
  c.latent_dim = 32;
  c.state_dim = 32;
  c.warmup_steps = 10'000;
  c.beta_start = 0.0;
  c.beta_mid = c.beta_end = 0.384;
  c.log_every = 100;
  c.eval_every = 1000;
  c.eval_samples = 256;
  c.seed = 1;
  return c;
}

const ToyRun& toy_run() {
  static std::optional<ToyRun> run;
  if (run) return *run;
  run.emplace();
  const auto all = make_toy_dataset(1000, 10, 7);
  const auto split = split_8_1_1(all, 7);
  run->train = split.train;
  run->test = split.test;
  const vae::TrainConfig cfg = toy_config();
  const auto mc = vae::ModelConfig::from_train(cfg, parse_schema(kAddressSchemaText));
  const auto vocab = vae::TreeVae::build_vocabulary(mc, run->train);
  const auto table = metrics::ZipStatsTable::fit(run->train);

  vae::TreeVae untrained = vae::TreeVae::create(mc, vocab);
  vae::calibrate_statistics(untrained, run->train, cfg.batch_size, cfg.seed);
  Rng u = derive_rng(cfg.seed, "acceptance");
  run->untrained_mean = metrics::pvalue_stats(untrained.generate(1000, u), table).mean;

  run->model.emplace(vae::TreeVae::create(mc, vocab));
  const auto t0 = std::chrono::steady_clock::now();
  vae::Trainer trainer(*run->model, cfg, run->train, run->test);
  std::ofstream curves(curves_path);
  curves << vae::kMetricsHeader << '\n';
  trainer.run([&](const vae::MetricRow& r) { curves << vae::to_csv(r) << '\n' << std::flush; });
  run->seconds = seconds_since(t0);
  run->rows = trainer.metrics();
  Rng g = derive_rng(cfg.seed, "acceptance");
  run->trained_mean = metrics::pvalue_stats(run->model->generate(1000, g), table).mean;
  return *run;
}

Outcome directional_training() {
  const ToyRun& r = toy_run();
  std::optional<double> first, last;
  std::map<std::string, int> series;
  bool finite = true;
  for (const auto& row : r.rows) {
    ++series[row.split];
    finite = finite && std::isfinite(row.loss) && std::isfinite(row.bpc);
    if (row.split != "train") continue;
    if (row.step == 100) first = row.loss;
    last = row.loss;
  }
  const double decrease = first && last ? 1.0 - *last / *first : 0.0;
  const double gain = r.trained_mean - r.untrained_mean;
  const bool a = decrease >= 0.30, b = gain >= 0.1;
  const bool c = finite && series["train"] >= 2 && series["test"] >= 2 && series["generated"] >= 2;
  return verdict(a && b && c,
                 "(a) train loss " + fmt(first.value_or(NAN), 5) + " at step 100 -> " + fmt(last.value_or(NAN), 5) +
                     " at end, decrease " + fmt(100 * decrease, 4) + "% (>= 30%) " + (a ? "ok" : "FAIL") +
                     "; (b) generated p-value mean " + fmt(r.trained_mean, 4) + " vs untrained " +
                     fmt(r.untrained_mean, 4) + ", gain " + fmt(gain, 4) + " (>= 0.1) " + (b ? "ok" : "FAIL") +
                     "; (c) series train " + std::to_string(series["train"]) + ", test " +
                     std::to_string(series["test"]) + ", generated " + std::to_string(series["generated"]) +
                     " rows in " + curves_path + " " + (c ? "ok" : "FAIL") + "; " + fmt(r.seconds / 60, 3) +
                     " min");
}

Outcome repeated_encode_decode() {
  const ToyRun& r = toy_run();
  Rng rng = derive_rng(1, "repeat");
  std::vector<Record> start;
  std::sample(r.test.begin(), r.test.end(), std::back_inserter(start), 100, rng);
  const auto rounds = vae::repeated_encode_decode(*r.model, start, 10, rng);
  const auto table = metrics::ZipStatsTable::fit(r.train);
  const auto known = metrics::field_values(r.train);
  bool ok = rounds.size() == 10 && rounds[0] == start;
  std::string membership;
  for (const auto& round : rounds) {
    ok = ok && round.size() == start.size();
    for (double p : metrics::record_pvalues(round, table)) ok = ok && p >= 0.0 && p <= 1.0;
    const auto m = metrics::membership(round, known);
    ok = ok && m.total == round.size();
    membership += (membership.empty() ? "" : " ") + fmt(m.proportion, 3);
  }
  return verdict(ok, std::to_string(rounds.size()) + " rounds of " + std::to_string(start.size()) +
                         " records, round 0 equals input: " + (rounds[0] == start ? "yes" : "no") +
                         ", street membership per round: " + membership);
}

// 9 ---------------------------------------------------------------------

Outcome malformedness() {
  using metrics::MalformedReason;
  // Expected class: 0 valid, 1 too few fields, 2 bad float.
  std::vector<std::pair<std::string, int>> lines;
  const std::vector<std::string> good_floats{"44.20000", "-72.5", "4.42e1", " 44.2 ", "+1", ".5", "5.", "inf", "1_000.5"};
  const std::vector<std::string> bad_floats{"44.2x", "", "1.2.3", "--5", "0x1A", "4_", "abc", "1e", "- 3", "_1"};
  for (int i = 0; lines.size() < 100; ++i) {
    const std::string n = std::to_string(1 + i), st = "ELM ST", city = "BARRE", zip = "05641";
    switch (i % 3) {
      case 0: {
        const std::string lat = good_floats[static_cast<std::size_t>(i) % good_floats.size()];
        const std::string lon = good_floats[static_cast<std::size_t>(i / 3) % good_floats.size()];
        std::string line = n + "," + st + "," + city + "," + zip + "," + lat + "," + lon;
        if (i % 2) line = n + "," + st + ",APT 3," + city + "," + zip + "," + lat + "," + lon;
        lines.emplace_back(line, 0);
        break;
      }
      case 1: {
        const std::vector<std::string> parts{n, st, city, zip, "44.2", "-72.5"};
        const std::size_t keep = static_cast<std::size_t>(i / 3) % 6;
        std::string line;
        for (std::size_t k = 0; k < keep; ++k) line += (k ? "," : "") + parts[k];
        lines.emplace_back(line, 1);
        break;
      }
      default: {
        const std::string bad = bad_floats[static_cast<std::size_t>(i / 3) % bad_floats.size()];
        const bool in_lat = (i / 3) % 2 == 0;
        lines.emplace_back(n + "," + st + "," + city + "," + zip + "," + (in_lat ? bad : "44.2") + "," +
                               (in_lat ? "-72.5" : bad),
                           2);
      }
    }
  }
  int errors = 0, counts[3] = {0, 0, 0};
  std::string first_error;
  for (const auto& [line, expected] : lines) {
    const auto res = metrics::malformed_check(line);
    int got = 0;
    if (const auto* m = std::get_if<metrics::Malformed>(&res)) got = m->reason == MalformedReason::too_few_fields ? 1 : 2;
    ++counts[expected];
    if (got != expected) {
      if (errors++ == 0) first_error = " (first: '" + line + "')";
    }
  }
  return verdict(errors == 0, std::to_string(lines.size()) + " lines (" + std::to_string(counts[0]) + " valid, " +
                                  std::to_string(counts[1]) + " too few fields, " + std::to_string(counts[2]) +
                                  " bad float), " + std::to_string(errors) + " misclassified" + first_error);
}

// 10 --------------------------------------------------------------------

Outcome determinism() {
  auto run = [] {
    vae::TrainConfig c = toy_config();
    c.steps = 100;
    c.warmup_steps = 50;
    const auto split = split_8_1_1(make_toy_dataset(1000, 10, 7), 7);
    const auto mc = vae::ModelConfig::from_train(c, parse_schema(kAddressSchemaText));
    vae::TreeVae m = vae::TreeVae::create(mc, vae::TreeVae::build_vocabulary(mc, split.train));
    vae::Trainer t(m, c, split.train, split.test);
    std::vector<double> trace;
    for (int i = 0; i < c.steps; ++i) trace.push_back(t.train_step().report.total);
    Rng rng = derive_rng(c.seed, "generate");
    return std::pair{trace, m.generate(100, rng)};
  };
  const auto a = run(), b = run();
  return verdict(a.first == b.first && a.second == b.second,
                 "100-step loss traces identical: " + std::string(a.first == b.first ? "yes" : "no") +
                     ", 100 generated records identical: " + (a.second == b.second ? "yes" : "no"));
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> only;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--only" && i + 1 < argc) {
      std::stringstream ss(argv[++i]);
      for (std::string item; std::getline(ss, item, ',');) only.insert(std::stoi(item));
    } else if (arg == "--curves" && i + 1 < argc) {
      curves_path = argv[++i];
    } else {
      std::cerr << "usage: acceptance [--only N,M,...] [--curves PATH]\n";
      return 2;
    }
  }

  const std::vector<std::tuple<int, std::string, std::function<Outcome()>>> criteria = {
      {1, "Vermont p-value self-test", vermont_self_test},
      {2, "chi-square p-value", chi2_correctness},
      {3, "gradient fidelity", gradient_fidelity},
      {4, "whitening", whitening},
      {5, "augmented pool lifetime", pool_law},
      {6, "multiscale structure", multiscale_structure},
      {7, "desk-scale directional training", directional_training},
      {8, "repeated encode/decode", repeated_encode_decode},
      {9, "text-variant malformedness", malformedness},
      {10, "determinism", determinism},
  };
  int failed = 0, blocked = 0, ran = 0;
  for (const auto& [id, title, check] : criteria) {
    if (!only.empty() && !only.count(id)) continue;
    ++ran;
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {Status::fail, std::string("threw: ") + e.what()};
    }
    const char* tag = o.status == Status::pass ? "PASS" : o.status == Status::fail ? "FAIL" : "BLOCKED";
    failed += o.status == Status::fail;
    blocked += o.status == Status::blocked;
    std::cout << "criterion " << id << " [" << tag << "] " << title << ": " << o.detail << " ("
              << fmt(seconds_since(t0), 3) << " s)" << std::endl;
  }
  std::cout << ran - failed - blocked << " passed, " << failed << " failed, " << blocked << " blocked" << std::endl;
  if (failed > 0) return 1;
  if (!only.empty() && blocked == ran) return 77;
  return 0;
}
