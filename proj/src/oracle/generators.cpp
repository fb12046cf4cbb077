#include <algorithm>
#include <numeric>

#include "ope/errors.hpp"
#include "ope/oracle.hpp"

namespace ope {

namespace {

std::vector<double> random_simplex(RandomStream& rng, std::size_t n, double scale = 1.0) {
  std::vector<double> z = rng.normals(n);
  for (double& v : z) v *= scale;
  return softmax(z);
}

Matrix random_rows(RandomStream& rng, std::size_t rows, std::size_t cols) {
  Matrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    const auto p = random_simplex(rng, cols, 1.5);
    std::copy(p.begin(), p.end(), m.row(r).begin());
  }
  return m;
}

// Every cluster gets at least one context; the rest are assigned at random.
std::vector<int> random_clusters(RandomStream& rng, std::size_t contexts, std::size_t clusters) {
  std::vector<int> out(contexts);
  for (std::size_t x = 0; x < contexts; ++x)
    out[x] = static_cast<int>(x < clusters ? x : rng.index(clusters));
  std::shuffle(out.begin(), out.end(), rng.engine());
  return out;
}

void normalize(std::span<double> row) {
  const double s = std::accumulate(row.begin(), row.end(), 0.0);
  for (double& v : row) v /= s;
}

}  // namespace

const char* instance_kind_name(InstanceKind kind) {
  switch (kind) {
    case InstanceKind::FullSupport: return "full-support";
    case InstanceKind::Homogeneous: return "homogeneous";
    case InstanceKind::Deficient: return "deficient";
    case InstanceKind::ClusterConstant: return "cluster-constant";
    case InstanceKind::Joint: return "joint";
  }
  return "unknown";
}

InstanceShape random_shape(RandomStream& rng, std::size_t max_contexts, std::size_t max_actions) {
  if (max_contexts < 2 || max_actions < 2) throw ConfigError("random shapes need at least 2 contexts and actions");
  InstanceShape s;
  s.contexts = 2 + rng.index(max_contexts - 1);
  s.actions = 2 + rng.index(max_actions - 1);
  s.clusters = 1 + rng.index(s.contexts);
  s.embeddings = 1 + rng.index(s.actions);
  return s;
}

DiscreteInstance random_instance(InstanceKind kind, const InstanceShape& shape, RandomStream& rng) {
  const std::size_t M = shape.contexts, A = shape.actions, K = shape.clusters;
  if (M == 0 || A == 0 || K == 0 || K > M) throw ConfigError("invalid instance shape");
  std::vector<double> p_x = random_simplex(rng, M);
  std::vector<int> cluster_of = random_clusters(rng, M, K);

  Matrix pi, pi0, q(M, A);
  std::optional<std::vector<int>> embedding;

  switch (kind) {
    case InstanceKind::FullSupport: {
      pi = random_rows(rng, M, A);
      pi0 = random_rows(rng, M, A);
      for (double& v : std::span<double>(q.data(), M * A)) v = rng.uniform();
      break;
    }
    case InstanceKind::Homogeneous:
    case InstanceKind::Deficient: {
      pi = random_rows(rng, M, A);
      pi0 = random_rows(rng, M, A);
      Matrix qc(K, A);
      for (double& v : std::span<double>(qc.data(), K * A)) v = rng.uniform();
      for (std::size_t x = 0; x < M; ++x)
        for (std::size_t a = 0; a < A; ++a) q(x, a) = qc(static_cast<std::size_t>(cluster_of[x]), a);
      if (kind == InstanceKind::Deficient) {
        // Some actions are missing for a whole cluster, others only for single contexts.
        Matrix cluster_zero(K, A);
        for (std::size_t c = 0; c < K; ++c)
          for (std::size_t a = 0; a < A; ++a) cluster_zero(c, a) = rng.uniform() < 0.25 ? 1.0 : 0.0;
        for (std::size_t x = 0; x < M; ++x) {
          const auto c = static_cast<std::size_t>(cluster_of[x]);
          auto row = pi0.row(x);
          const std::vector<double> keep(row.begin(), row.end());
          for (std::size_t a = 0; a < A; ++a)
            if (cluster_zero(c, a) > 0.0 || rng.uniform() < 0.3) row[a] = 0.0;
          if (std::all_of(row.begin(), row.end(), [](double v) { return v == 0.0; })) {
            const std::size_t a = rng.index(A);
            row[a] = keep[a];
          }
          normalize(row);
        }
      }
      break;
    }
    case InstanceKind::ClusterConstant: {
      const Matrix pc = random_rows(rng, K, A), p0c = random_rows(rng, K, A);
      Matrix qc(K, A);
      for (double& v : std::span<double>(qc.data(), K * A)) v = rng.uniform();
      pi = Matrix(M, A);
      pi0 = Matrix(M, A);
      for (std::size_t x = 0; x < M; ++x) {
        const auto c = static_cast<std::size_t>(cluster_of[x]);
        for (std::size_t a = 0; a < A; ++a) {
          pi(x, a) = pc(c, a);
          pi0(x, a) = p0c(c, a);
          q(x, a) = qc(c, a);
        }
      }
      break;
    }
    case InstanceKind::Joint: {
      const std::size_t E = std::clamp<std::size_t>(shape.embeddings, 1, A);
      std::vector<int> emb(A);
      for (std::size_t a = 0; a < A; ++a) emb[a] = static_cast<int>(a < E ? a : rng.index(E));
      std::shuffle(emb.begin(), emb.end(), rng.engine());
      // phi(a | e): one within-embedding distribution shared by both policies.
      std::vector<double> phi(A);
      for (double& v : phi) v = 0.2 + rng.uniform();
      for (std::size_t e = 0; e < E; ++e) {
        double s = 0.0;
        for (std::size_t a = 0; a < A; ++a)
          if (static_cast<std::size_t>(emb[a]) == e) s += phi[a];
        for (std::size_t a = 0; a < A; ++a)
          if (static_cast<std::size_t>(emb[a]) == e) phi[a] /= s;
      }
      const Matrix pe = random_rows(rng, M, E), pe0 = random_rows(rng, M, E);
      Matrix qe(K, E);
      for (double& v : std::span<double>(qe.data(), K * E)) v = rng.uniform();
      pi = Matrix(M, A);
      pi0 = Matrix(M, A);
      for (std::size_t x = 0; x < M; ++x) {
        const auto c = static_cast<std::size_t>(cluster_of[x]);
        for (std::size_t a = 0; a < A; ++a) {
          const auto e = static_cast<std::size_t>(emb[a]);
          pi(x, a) = pe(x, e) * phi[a];
          pi0(x, a) = pe0(x, e) * phi[a];
          q(x, a) = qe(c, e);
        }
        normalize(pi.row(x));
        normalize(pi0.row(x));
      }
      embedding = std::move(emb);
      break;
    }
  }
  return DiscreteInstance(std::move(p_x), std::move(cluster_of), std::move(pi), std::move(pi0), std::move(q),
                          std::move(embedding));
}

}  // namespace ope
