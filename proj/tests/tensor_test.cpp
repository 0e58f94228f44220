#include "twmlp/tensor.hpp"

#include <cmath>
#include <functional>
#include <vector>

#include "doctest.h"
#include "twmlp/errors.hpp"
#include "twmlp/rng.hpp"

using namespace twmlp;

namespace {

struct LeafSpec {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;
};

using Builder = std::function<TensorId(GraphD&, const std::vector<TensorId>&)>;

LeafSpec random_leaf(Rng& rng, int rows, int cols, double lo = -1.0, double hi = 1.0) {
  LeafSpec s{rows, cols, {}};
  s.data.reserve(static_cast<std::size_t>(rows) * cols);
  for (int i = 0; i < rows * cols; ++i) s.data.push_back(rng.uniform(lo, hi));
  return s;
}

std::vector<double> to_vec(std::span<const double> s) { return {s.begin(), s.end()}; }

double eval_loss(const std::vector<LeafSpec>& leaves, const Builder& build) {
  GraphD g;
  std::vector<TensorId> ids;
  for (const auto& s : leaves) ids.push_back(g.leaf(s.rows, s.cols, s.data, true));
  return g.item(build(g, ids));
}

/// Central-difference check of every element of every leaf against the
/// analytic gradient. Relative error uses max(1, |a|, |fd|) in the
/// denominator so near-zero gradients are compared absolutely.
void check_gradients(std::vector<LeafSpec> leaves, const Builder& build, double tol = 1e-6,
                     double h = 1e-6) {
  GraphD g;
  std::vector<TensorId> ids;
  for (const auto& s : leaves) ids.push_back(g.leaf(s.rows, s.cols, s.data, true));
  g.backward(build(g, ids));
  std::vector<std::vector<double>> analytic;
  for (TensorId id : ids) {
    auto gr = g.grad(id);
    analytic.emplace_back(gr.begin(), gr.end());
  }

  for (std::size_t l = 0; l < leaves.size(); ++l) {
    for (std::size_t i = 0; i < leaves[l].data.size(); ++i) {
      const double saved = leaves[l].data[i];
      leaves[l].data[i] = saved + h;
      const double up = eval_loss(leaves, build);
      leaves[l].data[i] = saved - h;
      const double dn = eval_loss(leaves, build);
      leaves[l].data[i] = saved;
      const double fd = (up - dn) / (2.0 * h);
      const double a = analytic[l][i];
      const double rel = std::abs(a - fd) / std::max({1.0, std::abs(a), std::abs(fd)});
      INFO("leaf ", l, " element ", i, " analytic ", a, " fd ", fd);
      CHECK(rel < tol);
    }
  }
}

}  // namespace

TEST_CASE("matmul forward matches a naive triple loop") {
  Rng rng(21);
  const LeafSpec a = random_leaf(rng, 3, 5);
  const LeafSpec b = random_leaf(rng, 5, 4);
  GraphD g;
  TensorId c = g.matmul(g.constant(3, 5, a.data), g.constant(5, 4, b.data));
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 4; ++j) {
      double expect = 0.0;
      for (int k = 0; k < 5; ++k) expect += a.data[i * 5 + k] * b.data[k * 4 + j];
      CHECK(g.value(c)[i * 4 + j] == doctest::Approx(expect).epsilon(1e-14));
    }
  }
}

TEST_CASE("linear computes X W^T + bias broadcast over rows") {
  Rng rng(22);
  const LeafSpec x = random_leaf(rng, 4, 3);
  const LeafSpec w = random_leaf(rng, 2, 3);  // out x in
  const LeafSpec bias = random_leaf(rng, 1, 2);
  GraphD g;
  TensorId y = g.linear(g.constant(4, 3, x.data), g.constant(2, 3, w.data),
                        g.constant(1, 2, bias.data));
  REQUIRE(g.rows(y) == 4);
  REQUIRE(g.cols(y) == 2);
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 2; ++j) {
      double expect = bias.data[j];
      for (int k = 0; k < 3; ++k) expect += x.data[i * 3 + k] * w.data[j * 3 + k];
      CHECK(g.value(y)[i * 2 + j] == doctest::Approx(expect).epsilon(1e-14));
    }
  }
}

TEST_CASE("layer_norm forward matches a per-row reference") {
  Rng rng(23);
  const LeafSpec x = random_leaf(rng, 3, 6);
  const LeafSpec gain = random_leaf(rng, 1, 6, 0.5, 1.5);
  const LeafSpec bias = random_leaf(rng, 1, 6);
  GraphD g;
  TensorId y = g.layer_norm(g.constant(3, 6, x.data), g.constant(1, 6, gain.data),
                            g.constant(1, 6, bias.data));
  for (int i = 0; i < 3; ++i) {
    double mean = 0.0;
    for (int j = 0; j < 6; ++j) mean += x.data[i * 6 + j];
    mean /= 6.0;
    double var = 0.0;
    for (int j = 0; j < 6; ++j) {
      const double d = x.data[i * 6 + j] - mean;
      var += d * d;
    }
    var /= 6.0;
    const double rstd = 1.0 / std::sqrt(var + 1e-5);
    for (int j = 0; j < 6; ++j) {
      const double expect = (x.data[i * 6 + j] - mean) * rstd * gain.data[j] + bias.data[j];
      CHECK(g.value(y)[i * 6 + j] == doctest::Approx(expect).epsilon(1e-12));
    }
  }
}

TEST_CASE("silu matches x * sigmoid(x)") {
  GraphD g;
  const std::vector<double> xs{-3.0, -0.5, 0.0, 0.7, 4.0};
  TensorId y = g.silu(g.constant(1, 5, xs));
  for (int i = 0; i < 5; ++i) {
    const double expect = xs[i] / (1.0 + std::exp(-xs[i]));
    CHECK(g.value(y)[i] == doctest::Approx(expect).epsilon(1e-15));
  }
}

TEST_CASE("row and column assembly ops move data where expected") {
  GraphD g;
  const std::vector<double> a{1, 2, 3, 4};     // 2x2
  const std::vector<double> b{5, 6};           // 1x2
  TensorId ta = g.constant(2, 2, a);
  TensorId tb = g.constant(1, 2, b);
  TensorId cat = g.concat_rows(ta, tb);
  CHECK(to_vec(g.value(cat)) == std::vector<double>{1, 2, 3, 4, 5, 6});
  TensorId sl = g.slice_rows(cat, 1, 3);
  CHECK(to_vec(g.value(sl)) == std::vector<double>{3, 4, 5, 6});
  TensorId mr = g.mean_rows(cat);
  CHECK(to_vec(g.value(mr)) == std::vector<double>{3.0, 4.0});
  TensorId br = g.broadcast_rows(tb, 3);
  CHECK(to_vec(g.value(br)) == std::vector<double>{5, 6, 5, 6, 5, 6});
  TensorId cc = g.concat_cols(ta, g.constant(2, 1, std::vector<double>{9, 10}));
  CHECK(to_vec(g.value(cc)) == std::vector<double>{1, 2, 9, 3, 4, 10});
  CHECK(g.item(g.sum(ta)) == 10.0);
  CHECK(g.item(g.mean(ta)) == 2.5);
}

TEST_CASE("finite differences confirm gradients of every primitive") {
  Rng rng(24);
  SUBCASE("matmul") {
    check_gradients({random_leaf(rng, 3, 4), random_leaf(rng, 4, 2)},
                    [](GraphD& g, const std::vector<TensorId>& in) {
                      return g.sum(g.matmul(in[0], in[1]));
                    });
  }
  SUBCASE("linear with bias") {
    check_gradients({random_leaf(rng, 4, 3), random_leaf(rng, 2, 3), random_leaf(rng, 1, 2)},
                    [](GraphD& g, const std::vector<TensorId>& in) {
                      return g.sum(g.mul(g.linear(in[0], in[1], in[2]),
                                         g.linear(in[0], in[1], in[2])));
                    });
  }
  SUBCASE("time_mix") {
    check_gradients({random_leaf(rng, 4, 4), random_leaf(rng, 4, 3)},
                    [](GraphD& g, const std::vector<TensorId>& in) {
                      return g.sum(g.time_mix(in[1], in[0]));
                    });
  }
  SUBCASE("elementwise chain") {
    check_gradients({random_leaf(rng, 3, 3), random_leaf(rng, 3, 3)},
                    [](GraphD& g, const std::vector<TensorId>& in) {
                      return g.mean(g.mul(g.add(in[0], in[1]), g.sub(in[0], in[1])));
                    });
  }
  SUBCASE("abs away from zero") {
    check_gradients({random_leaf(rng, 3, 3, 0.2, 1.0), random_leaf(rng, 3, 3, -1.0, -0.2)},
                    [](GraphD& g, const std::vector<TensorId>& in) {
                      return g.sum(g.abs(g.mul(in[0], in[1])));
                    });
  }
  SUBCASE("exp and scale") {
    check_gradients({random_leaf(rng, 2, 3)},
                    [](GraphD& g, const std::vector<TensorId>& in) {
                      return g.sum(g.exp(g.scale(in[0], -0.7)));
                    });
  }
  SUBCASE("silu") {
    check_gradients({random_leaf(rng, 3, 4, -2.0, 2.0)},
                    [](GraphD& g, const std::vector<TensorId>& in) {
                      return g.sum(g.silu(in[0]));
                    });
  }
  SUBCASE("layer_norm") {
    check_gradients({random_leaf(rng, 3, 6), random_leaf(rng, 1, 6, 0.5, 1.5),
                     random_leaf(rng, 1, 6)},
                    [](GraphD& g, const std::vector<TensorId>& in) {
                      return g.sum(g.mul(g.layer_norm(in[0], in[1], in[2]),
                                         g.layer_norm(in[0], in[1], in[2])));
                    },
                    1e-5);
  }
  SUBCASE("row assembly") {
    check_gradients({random_leaf(rng, 2, 3), random_leaf(rng, 3, 3)},
                    [](GraphD& g, const std::vector<TensorId>& in) {
                      TensorId cat = g.concat_rows(in[0], in[1]);
                      TensorId mid = g.slice_rows(cat, 1, 4);
                      return g.sum(g.mul(mid, g.broadcast_rows(g.mean_rows(cat), 3)));
                    });
  }
  SUBCASE("column concat") {
    check_gradients({random_leaf(rng, 3, 2), random_leaf(rng, 3, 4)},
                    [](GraphD& g, const std::vector<TensorId>& in) {
                      return g.mean(g.mul(g.concat_cols(in[0], in[1]),
                                          g.concat_cols(in[0], in[1])));
                    });
  }
  SUBCASE("fan-out reuses a node twice") {
    check_gradients({random_leaf(rng, 3, 3)},
                    [](GraphD& g, const std::vector<TensorId>& in) {
                      TensorId y = g.silu(in[0]);
                      return g.sum(g.add(g.mul(y, y), y));
                    });
  }
}

TEST_CASE("abs has zero subgradient exactly at zero") {
  GraphD g;
  TensorId x = g.leaf(1, 3, std::vector<double>{-1.0, 0.0, 2.0}, true);
  g.backward(g.sum(g.abs(x)));
  CHECK(g.grad(x)[0] == -1.0);
  CHECK(g.grad(x)[1] == 0.0);
  CHECK(g.grad(x)[2] == 1.0);
}

TEST_CASE("backward accumulate keeps prior leaf gradients") {
  GraphD g;
  TensorId x = g.leaf(1, 2, std::vector<double>{1.0, 2.0}, true);
  TensorId loss = g.sum(g.mul(x, x));
  g.backward(loss);
  CHECK(g.grad(x)[0] == 2.0);
  g.backward(loss, /*accumulate=*/true);
  CHECK(g.grad(x)[0] == 4.0);
  CHECK(g.grad(x)[1] == 8.0);
  g.backward(loss);  // plain backward resets
  CHECK(g.grad(x)[0] == 2.0);
}

TEST_CASE("shape and contract violations throw") {
  GraphD g;
  TensorId a = g.zeros(2, 3);
  TensorId b = g.zeros(2, 3);
  TensorId c = g.zeros(3, 2);
  CHECK_THROWS_AS(g.matmul(a, b), ShapeError);
  CHECK_THROWS_AS(g.add(a, c), ShapeError);
  CHECK_THROWS_AS(g.concat_rows(a, c), ShapeError);
  CHECK_THROWS_AS(g.concat_cols(a, c), ShapeError);
  CHECK_THROWS_AS(g.slice_rows(a, 1, 4), ShapeError);
  CHECK_THROWS_AS(g.layer_norm(g.zeros(2, 1), g.zeros(1, 1), g.zeros(1, 1)), ShapeError);
  CHECK_THROWS_AS(g.backward(a), ContractError);  // loss must be 1x1
  CHECK_THROWS_AS(g.grad(a), ContractError);      // no gradient without requires_grad
}

TEST_CASE("non-finite results are caught at the producing op") {
  GraphD g;
  TensorId x = g.constant(1, 1, std::vector<double>{1000.0});
  CHECK_THROWS_AS(g.exp(x), NumericError);
  CHECK_THROWS_AS(g.leaf(1, 1, std::vector<double>{std::nan("")}, false), NumericError);
}

TEST_CASE("node ids are topologically ordered by construction") {
  GraphD g;
  TensorId a = g.zeros(2, 2);
  TensorId b = g.silu(a);
  TensorId c = g.add(a, b);
  CHECK(a.v < b.v);
  CHECK(b.v < c.v);
  CHECK(g.node_count() == 3);
}

TEST_CASE("float and double graphs share semantics") {
  GraphF g;
  std::vector<float> xs{0.5f, -1.5f};
  TensorId x = g.leaf(1, 2, xs, true);
  TensorId loss = g.sum(g.silu(x));
  g.backward(loss);
  const float s0 = 1.0f / (1.0f + std::exp(-0.5f));
  CHECK(g.item(loss) == doctest::Approx(0.5f * s0 + -1.5f / (1.0f + std::exp(1.5f))));
  CHECK(g.grad(x).size() == 2);
}
