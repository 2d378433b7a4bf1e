#include "lgcn/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>

#include "lgcn/error.hpp"
#include "lgcn/evaluation.hpp"

namespace lgcn {
namespace {

// -ln(sigmoid(x)) without overflow.
double softplus_neg(double x) {
  return x > 0 ? std::log1p(std::exp(-x)) : -x + std::log1p(std::exp(x));
}

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

void check_batch(std::span<const BprTriplet> batch, const EmbeddingState& state) {
  if (batch.empty()) throw InvalidArgument("empty batch");
  for (const auto& t : batch) {
    if (t.user >= state.num_users() || t.positive >= state.num_items() ||
        t.negative >= state.num_items()) {
      throw InvalidArgument("triplet id out of range");
    }
  }
}

struct LaplacianScale {
  double user = 1.0;
  double item = 1.0;
};

LaplacianScale laplacian_scale(const SparseAdjacency& graph, const LossConfig& config,
                               const BprTriplet& t) {
  if (config.laplacian == LaplacianMode::Plain) return {};
  const auto du = graph.degrees.at(t.user);
  const auto di = graph.degrees.at(graph.num_users + t.positive);
  return {du ? 1.0 / std::sqrt(static_cast<double>(du)) : 0.0,
          di ? 1.0 / std::sqrt(static_cast<double>(di)) : 0.0};
}

}  // namespace

TripletSampler::TripletSampler(const InteractionDataset& ds) : ds_(&ds) {
  for (std::size_t u = 0; u < ds.num_users; ++u) {
    const auto& items = ds.train[u];
    if (items.empty()) continue;
    if (items.size() >= ds.num_items) {
      warnings_.push_back("user " + std::to_string(u) +
                          " interacted with every item; excluded from sampling");
      continue;
    }
    for (Index i : items) pairs_.emplace_back(static_cast<Index>(u), i);
  }
}

std::vector<BprTriplet> TripletSampler::sample(std::size_t batch_size, Rng& rng) const {
  if (pairs_.empty()) throw InvalidArgument("no sampleable train pairs");
  std::vector<BprTriplet> batch;
  batch.reserve(batch_size);
  for (std::size_t b = 0; b < batch_size; ++b) {
    const auto& [u, i] = pairs_[rng.uniform_index(pairs_.size())];
    const auto& pos = ds_->train[u];
    Index j = 0;
    do {
      j = static_cast<Index>(rng.uniform_index(ds_->num_items));
    } while (std::binary_search(pos.begin(), pos.end(), j));
    batch.push_back({u, i, j});
  }
  return batch;
}

std::vector<BprTriplet> sample_triplets(const InteractionDataset& ds, std::size_t batch_size,
                                        Rng& rng) {
  return TripletSampler(ds).sample(batch_size, rng);
}

double bpr_loss(std::span<const BprTriplet> batch, const EmbeddingState& state,
                const SparseAdjacency& graph, const LossConfig& config) {
  check_batch(batch, state);
  const auto n = static_cast<double>(batch.size());
  const DenseMatrix& e0 = state.e0();
  const std::size_t m = state.num_users();
  double ranking = 0.0;
  double l2 = 0.0;
  double laplacian = 0.0;
  for (const auto& t : batch) {
    const auto eu = state.user_embedding(t.user);
    const auto ei = state.item_embedding(t.positive);
    const auto ej = state.item_embedding(t.negative);
    ranking += softplus_neg(dot(eu, ei) - dot(eu, ej));
    if (config.regularization == RegularizationMode::PerBatch) {
      l2 += squared_norm(e0.row(t.user)) + squared_norm(e0.row(m + t.positive)) +
            squared_norm(e0.row(m + t.negative));
    }
    if (config.lambda_g != 0.0) {
      const auto s = laplacian_scale(graph, config, t);
      double d2 = 0.0;
      for (std::size_t c = 0; c < eu.size(); ++c) {
        const double d = s.user * eu[c] - s.item * ei[c];
        d2 += d * d;
      }
      laplacian += d2;
    }
  }
  double loss = ranking / n + config.lambda_g * laplacian / n;
  if (config.regularization == RegularizationMode::PerBatch) {
    loss += config.lambda * l2 / n;
  } else {
    loss += config.lambda * squared_norm(e0.values());
  }
  return loss;
}

DenseMatrix backward(std::span<const BprTriplet> batch, const EmbeddingState& state,
                     const SparseAdjacency& adjacency, const SparseAdjacency* adjacency_transpose,
                     const LayerWeights& weights, const LossConfig& config, int threads) {
  check_batch(batch, state);
  if (weights.layers() != state.layers().size()) {
    throw DimensionMismatch("layer weights do not match the propagated layers");
  }
  const SparseAdjacency* pullback = &adjacency;
  if (weights.layers() > 0 && !adjacency.symmetric_values) {
    if (adjacency_transpose == nullptr) {
      throw Unimplemented("backward through an asymmetric adjacency needs its transpose");
    }
    pullback = adjacency_transpose;
  }

  const auto n = static_cast<double>(batch.size());
  const std::size_t m = state.num_users();
  const std::size_t dim = state.dim();
  const DenseMatrix& e = state.combined();

  // Gradient with respect to the combined embeddings.
  DenseMatrix g(state.num_nodes(), dim);
  for (const auto& t : batch) {
    const std::size_t ru = t.user;
    const std::size_t ri = m + t.positive;
    const std::size_t rj = m + t.negative;
    const auto eu = e.row(ru);
    const auto ei = e.row(ri);
    const auto ej = e.row(rj);
    const double margin = dot(eu, ei) - dot(eu, ej);
    const double coef = -sigmoid(-margin) / n;
    auto gu = g.row(ru);
    auto gi = g.row(ri);
    auto gj = g.row(rj);
    for (std::size_t c = 0; c < dim; ++c) {
      gu[c] += coef * (ei[c] - ej[c]);
      gi[c] += coef * eu[c];
      gj[c] -= coef * eu[c];
    }
    if (config.lambda_g != 0.0) {
      const auto s = laplacian_scale(adjacency, config, t);
      const double lg = 2.0 * config.lambda_g / n;
      for (std::size_t c = 0; c < dim; ++c) {
        const double d = s.user * eu[c] - s.item * ei[c];
        gu[c] += lg * s.user * d;
        gi[c] -= lg * s.item * d;
      }
    }
  }

  // Horner form: alpha_0 g + A^T (alpha_1 g + A^T (... + A^T alpha_K g)).
  const auto& alphas = weights.alphas;
  DenseMatrix acc = g;
  scale(acc, alphas.back());
  DenseMatrix next;
  for (std::size_t k = weights.layers(); k-- > 0;) {
    spmm_into(*pullback, acc, next, threads);
    std::swap(acc, next);
    axpy(alphas[k], g, acc);
  }

  const DenseMatrix& e0 = state.e0();
  if (config.regularization == RegularizationMode::PerBatch) {
    const double r = 2.0 * config.lambda / n;
    for (const auto& t : batch) {
      for (std::size_t row : {static_cast<std::size_t>(t.user), m + t.positive, m + t.negative}) {
        auto dst = acc.row(row);
        const auto src = e0.row(row);
        for (std::size_t c = 0; c < dim; ++c) dst[c] += r * src[c];
      }
    }
  } else {
    axpy(2.0 * config.lambda, e0, acc);
  }
  return acc;
}

Propagation Propagation::create(SparseAdjacency adjacency, LayerWeights weights, int threads) {
  Propagation p;
  if (!adjacency.symmetric_values) p.adjoint = transpose(adjacency);
  p.adjacency = std::move(adjacency);
  p.weights = std::move(weights);
  p.threads = threads;
  return p;
}

void adam_step(AdamState& state, const DenseMatrix& grad, DenseMatrix& params,
               double learning_rate) {
  if (grad.rows() != params.rows() || grad.cols() != params.cols() ||
      state.m.rows() != params.rows() || state.m.cols() != params.cols()) {
    throw DimensionMismatch("adam_step: gradient, parameter and moment shapes differ");
  }
  for (std::size_t r = 0; r < grad.rows(); ++r) {
    const auto row = grad.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (!std::isfinite(row[c])) {
        throw NumericError("non-finite gradient at row " + std::to_string(r) + ", column " +
                           std::to_string(c) + " (step " + std::to_string(state.step + 1) + ")");
      }
    }
  }
  const auto& cfg = state.config;
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(cfg.beta1, t);
  const double correction2 = 1.0 - std::pow(cfg.beta2, t);
  for (std::size_t r = 0; r < grad.rows(); ++r) {
    const auto g = grad.row(r);
    if (cfg.sparse_rows && std::all_of(g.begin(), g.end(), [](double x) { return x == 0.0; })) {
      continue;
    }
    auto m = state.m.row(r);
    auto v = state.v.row(r);
    auto p = params.row(r);
    for (std::size_t c = 0; c < g.size(); ++c) {
      m[c] = cfg.beta1 * m[c] + (1.0 - cfg.beta1) * g[c];
      v[c] = cfg.beta2 * v[c] + (1.0 - cfg.beta2) * g[c] * g[c];
      const double m_hat = m[c] / correction1;
      const double v_hat = v[c] / correction2;
      p[c] -= learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
    }
  }
}

FitResult fit(const InteractionDataset& ds, const TrainConfig& config,
              const Propagation& propagation, EmbeddingState initial) {
  if (!(config.learning_rate > 0.0)) throw InvalidArgument("learning_rate must be > 0");
  if (!(config.loss.lambda >= 0.0) || !(config.loss.lambda_g >= 0.0)) {
    throw InvalidArgument("regularization coefficients must be >= 0");
  }
  if (config.batch_size == 0) throw InvalidArgument("batch_size must be >= 1");
  if (initial.num_users() != ds.num_users || initial.num_items() != ds.num_items) {
    throw DimensionMismatch("model and dataset disagree on M or N");
  }

  FitResult result;
  EmbeddingState& state = initial;
  DenseMatrix best = state.e0();
  double best_recall = -1.0;
  std::size_t bad_rounds = 0;

  std::size_t validation_users = 0;
  for (const auto& v : ds.validation) validation_users += v.empty() ? 0 : 1;

  const TripletSampler sampler(ds);
  result.warnings = sampler.warnings();
  Rng rng(derive_seed(config.seed, 0xb9e));
  AdamState adam(state.num_nodes(), state.dim(), config.adam);
  const std::size_t batches =
      std::max<std::size_t>(1, (ds.num_train_interactions + config.batch_size - 1) /
                                   config.batch_size);
  const auto& w = propagation.weights;

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    double loss_sum = 0.0;
    try {
      for (std::size_t b = 0; b < batches; ++b) {
        const auto batch = sampler.sample(config.batch_size, rng);
        forward(state, propagation.adjacency, w, propagation.threads);
        const double loss = bpr_loss(batch, state, propagation.adjacency, config.loss);
        if (!std::isfinite(loss)) {
          throw NumericError("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                             std::to_string(b));
        }
        loss_sum += loss;
        const DenseMatrix grad = backward(batch, state, propagation.adjacency,
                                          propagation.adjoint_or_null(), w, config.loss,
                                          propagation.threads);
        adam_step(adam, grad, state.mutable_e0(), config.learning_rate);
      }
    } catch (const NumericError& err) {
      result.diverged = true;
      result.failure = err.what();
      break;
    }
    result.epochs_run = epoch;

    const bool eval_now = (config.eval_every != 0 && epoch % config.eval_every == 0) ||
                          epoch == config.epochs;
    if (!eval_now) continue;
    forward(state, propagation.adjacency, w, propagation.threads);
    const auto report = evaluate_all_ranking(state, ds, config.topk, EvalTarget::Validation,
                                             false, propagation.threads);
    result.curve.push_back({epoch, loss_sum / static_cast<double>(batches), report.recall,
                            report.ndcg});
    if (validation_users == 0) {
      best = state.e0();
      result.best_epoch = epoch;
      continue;
    }
    if (report.recall > best_recall) {
      best_recall = report.recall;
      best = state.e0();
      result.best_epoch = epoch;
      bad_rounds = 0;
    } else if (config.patience != 0 && ++bad_rounds >= config.patience) {
      result.stopped_early = true;
      break;
    }
  }

  if (result.best_epoch == 0 && !result.diverged) best = state.e0();
  state.mutable_e0() = std::move(best);
  forward(state, propagation.adjacency, w, propagation.threads);
  result.model = std::move(state);
  return result;
}

void write_curve_csv(std::ostream& out, std::span<const CurveRow> curve, std::size_t k) {
  out << "epoch,loss,val_recall@" << k << ",val_ndcg@" << k << '\n';
  char buf[128];
  for (const auto& r : curve) {
    std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g,%.17g\n", r.epoch, r.loss, r.val_recall,
                  r.val_ndcg);
    out << buf;
  }
}

void write_curve_csv(const std::filesystem::path& path, std::span<const CurveRow> curve,
                     std::size_t k) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  write_curve_csv(out, curve, k);
}

}  // namespace lgcn
