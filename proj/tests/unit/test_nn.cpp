#include <doctest.h>

#include <cmath>
#include <map>
#include <random>
#include <string>

#include "feedread/csv.hpp"
#include "feedread/nn.hpp"
#include "golden.hpp"
#include "oracles.hpp"

using namespace feedread;
using nn::HeadKind;
using nn::Matrix;
using nn::Vector;

namespace {

nn::NetworkSpec small_spec(std::size_t in, std::vector<std::size_t> hidden, double lambda,
                           HeadKind head = HeadKind::SoftmaxClassifier) {
  nn::NetworkSpec s;
  s.input_dim = in;
  s.hidden_layers = std::move(hidden);
  s.lambda = lambda;
  s.target_head = head;
  return s;
}

bool same_params(const nn::LayerSet& a, const nn::LayerSet& b) {
  const auto la = a.layers(), lb = b.layers();
  if (la.size() != lb.size()) return false;
  for (std::size_t i = 0; i < la.size(); ++i) {
    if (la[i]->weight != lb[i]->weight || la[i]->bias != lb[i]->bias) return false;
  }
  return true;
}

struct Batch {
  Matrix x;
  Vector y, a;
};

Batch random_batch(std::mt19937_64& rng, std::size_t n, std::size_t d, HeadKind head) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::bernoulli_distribution coin(0.5);
  Batch b{Matrix(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d)), Vector(static_cast<Eigen::Index>(n)),
          Vector(static_cast<Eigen::Index>(n))};
  for (Eigen::Index i = 0; i < b.x.rows(); ++i) {
    for (Eigen::Index j = 0; j < b.x.cols(); ++j) b.x(i, j) = g(rng);
    b.y(i) = head == HeadKind::SoftmaxClassifier ? (coin(rng) ? 1.0 : 0.0) : 2.0 * g(rng);
    b.a(i) = coin(rng) ? 1.0 : 0.0;
  }
  return b;
}

void check_close(const Matrix& got, const Matrix& want, double rel) {
  REQUIRE(got.rows() == want.rows());
  REQUIRE(got.cols() == want.cols());
  for (Eigen::Index i = 0; i < got.rows(); ++i) {
    for (Eigen::Index j = 0; j < got.cols(); ++j) {
      CHECK(std::abs(got(i, j) - want(i, j)) <= rel * std::max(1.0, std::abs(want(i, j))));
    }
  }
}

}  // namespace

TEST_SUITE("network") {
  TEST_CASE("init_network shapes follow NetworkSpec") {
    const auto s = nn::init_network(small_spec(2, {3}, 1.0), 7);
    REQUIRE(s.params.shared.size() == 1);
    CHECK(s.params.shared[0].weight.rows() == 3);
    CHECK(s.params.shared[0].weight.cols() == 2);
    CHECK(s.params.target_head.weight.rows() == 2);
    CHECK(s.params.target_head.weight.cols() == 3);
    CHECK(s.params.adversary_head.weight.rows() == 2);
    CHECK(s.params.adversary_head.weight.cols() == 3);
    CHECK(s.adam.step == 0);
    CHECK(s.adam.first_moment.shared[0].weight.isZero());
    CHECK(s.adam.second_moment.adversary_head.bias.isZero());
    const auto r = nn::init_network(small_spec(2, {3}, 1.0, HeadKind::LinearRegressor), 7);
    CHECK(r.params.target_head.weight.rows() == 1);
  }

  TEST_CASE("init_network is deterministic and within the uniform limit") {
    const auto spec = small_spec(6, {8, 4}, 2.0);
    const auto a = nn::init_network(spec, 99), b = nn::init_network(spec, 99), c = nn::init_network(spec, 100);
    CHECK(same_params(a.params, b.params));
    CHECK_FALSE(same_params(a.params, c.params));
    const double limit = std::sqrt(6.0 / (6 + 8));
    CHECK(a.params.shared[0].weight.cwiseAbs().maxCoeff() <= limit);
    CHECK(a.params.shared[0].bias.isZero());
  }

  TEST_CASE("invalid specs are rejected") {
    CHECK_THROWS_AS(nn::init_network(small_spec(2, {}, 1.0), 1), InvalidArgument);
    CHECK_THROWS_AS(nn::init_network(small_spec(2, {3, 0}, 1.0), 1), InvalidArgument);
    CHECK_THROWS_AS(nn::init_network(small_spec(0, {3}, 1.0), 1), InvalidArgument);
    CHECK_THROWS_AS(nn::init_network(small_spec(2, {3}, -1.0), 1), InvalidArgument);
  }

  TEST_CASE("zero weights give uniform class probabilities") {
    auto s = nn::init_network(small_spec(3, {4}, 1.0), 3);
    for (auto* d : s.params.layers()) {
      d->weight.setZero();
      d->bias.setZero();
    }
    const std::vector<double> x{1.5, -2.0, 0.25};
    const auto t = nn::forward(s, x);
    CHECK(t.y_out(0, 0) == doctest::Approx(0.5));
    CHECK(t.y_out(0, 1) == doctest::Approx(0.5));
    CHECK(t.a_out(0, 1) == doctest::Approx(0.5));
  }

  TEST_CASE("ReLU clamps a negative pre-activation") {
    auto s = nn::init_network(small_spec(1, {1}, 1.0), 3);
    s.params.shared[0].weight(0, 0) = 1.0;
    s.params.shared[0].bias(0) = 0.0;
    const std::vector<double> x{-1.0};
    CHECK(nn::forward(s, x).last_hidden()(0, 0) == 0.0);
  }

  TEST_CASE("forward rejects a dimension mismatch") {
    const auto s = nn::init_network(small_spec(3, {4}, 1.0), 3);
    const std::vector<double> x{1.0, 2.0};
    CHECK_THROWS_AS(nn::forward(s, x), InvalidArgument);
  }

  TEST_CASE("forward matches the golden trace") {
    std::map<std::string, Matrix> tensors;
    const auto s = oracle::load_golden(tensors);
    const auto t = nn::forward(s, tensors["input"]);
    check_close(t.last_hidden(), tensors["last_hidden"], 1e-10);
    check_close(t.y_out, tensors["y_out"], 1e-10);
    check_close(t.a_out, tensors["a_out"], 1e-10);
  }

  TEST_CASE("adversary output is the head applied to the last hidden layer") {
    const auto s = nn::init_network(small_spec(3, {4, 5}, 7.0), 11);
    std::mt19937_64 rng(5);
    const auto b = random_batch(rng, 6, 3, HeadKind::SoftmaxClassifier);
    const auto t = nn::forward(s, b.x);
    Matrix logits = t.last_hidden() * s.params.adversary_head.weight.transpose();
    logits.rowwise() += s.params.adversary_head.bias.transpose();
    for (Eigen::Index i = 0; i < logits.rows(); ++i) {
      const double p1 = 1.0 / (1.0 + std::exp(logits(i, 0) - logits(i, 1)));
      CHECK(t.a_out(i, 1) == doctest::Approx(p1).epsilon(1e-12));
    }
  }

  TEST_CASE("softmax outputs sum to one") {
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 20; ++trial) {
      const auto s = nn::init_network(small_spec(4, {6, 3}, 1.0), static_cast<std::uint64_t>(trial));
      auto b = random_batch(rng, 10, 4, HeadKind::SoftmaxClassifier);
      b.x *= 20.0;
      const auto t = nn::forward(s, b.x);
      for (Eigen::Index i = 0; i < t.y_out.rows(); ++i) {
        CHECK(std::abs(t.y_out.row(i).sum() - 1.0) < 1e-9);
        CHECK(std::abs(t.a_out.row(i).sum() - 1.0) < 1e-9);
        CHECK(t.y_out(i, 0) >= 0.0);
        CHECK(t.y_out(i, 0) <= 1.0);
      }
    }
  }
}

TEST_SUITE("joint loss") {
  // One hidden unit feeding heads whose outputs are fixed by the biases.
  nn::ForwardTrace fixed_trace(nn::NetworkState& s, double y_logit_gap, double y_score) {
    for (auto* d : s.params.layers()) {
      d->weight.setZero();
      d->bias.setZero();
    }
    if (s.spec.target_head == HeadKind::SoftmaxClassifier) {
      s.params.target_head.bias(1) = y_logit_gap;
    } else {
      s.params.target_head.bias(0) = y_score;
    }
    const std::vector<double> x{0.0};
    return nn::forward(s, x);
  }

  TEST_CASE("classifier at p = 0.5") {
    auto s = nn::init_network(small_spec(1, {1}, 0.0), 1);
    const auto t = fixed_trace(s, 0.0, 0.0);
    const Vector y = Vector::Constant(1, 1.0), a = Vector::Constant(1, 1.0);
    CHECK(nn::joint_loss(s.spec, t, y, a, 0.0) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(std::abs(nn::joint_loss(s.spec, t, y, a, 1.0)) < 1e-15);
  }

  TEST_CASE("regressor with squared error") {
    auto s = nn::init_network(small_spec(1, {1}, 0.0, HeadKind::LinearRegressor), 1);
    const auto t = fixed_trace(s, 0.0, 3.0);
    const Vector y = Vector::Constant(1, 5.0), a = Vector::Constant(1, 0.0);
    CHECK(nn::joint_loss(s.spec, t, y, a, 2.0) == doctest::Approx(4.0 - 2.0 * std::log(2.0)).epsilon(1e-12));
  }

  TEST_CASE("saturated probabilities stay finite") {
    auto s = nn::init_network(small_spec(1, {1}, 0.0), 1);
    const auto t = fixed_trace(s, 1e4, 0.0);  // p(class 1) rounds to 1
    const Vector y = Vector::Constant(1, 0.0), a = Vector::Constant(1, 0.0);
    const double loss = nn::joint_loss(s.spec, t, y, a, 1.0);
    CHECK(std::isfinite(loss));
    CHECK(loss == doctest::Approx(-std::log(1e-12) - std::log(2.0)).epsilon(1e-6));
  }
}

TEST_SUITE("backward") {
  TEST_CASE("lambda = 0 leaves only the target gradient in the trunk") {
    std::mt19937_64 rng(21);
    const auto s = nn::init_network(small_spec(3, {5, 4}, 0.0), 4);
    const auto b = random_batch(rng, 7, 3, HeadKind::SoftmaxClassifier);
    const auto t = nn::forward(s, b.x);
    const auto g = nn::backward(s, t, b.y, b.a, 0.0);
    const auto br = nn::backward_branches(s, t, b.y, b.a, 0.0);
    for (std::size_t l = 0; l < g.shared.size(); ++l) {
      CHECK(g.shared[l].weight == br.target.shared[l].weight);
      CHECK(g.shared[l].bias == br.target.shared[l].bias);
    }
  }

  TEST_CASE("doubling lambda doubles the reversed trunk contribution only") {
    std::mt19937_64 rng(22);
    const auto s = nn::init_network(small_spec(3, {5, 4}, 1.0), 5);
    const auto b = random_batch(rng, 7, 3, HeadKind::SoftmaxClassifier);
    const auto t = nn::forward(s, b.x);
    const auto one = nn::backward_branches(s, t, b.y, b.a, 1.0);
    const auto two = nn::backward_branches(s, t, b.y, b.a, 2.0);
    CHECK(one.adversary.adversary_head.weight == two.adversary.adversary_head.weight);
    CHECK(one.adversary.adversary_head.bias == two.adversary.adversary_head.bias);
    for (std::size_t l = 0; l < one.adversary.shared.size(); ++l) {
      CHECK((2.0 * one.adversary.shared[l].weight - two.adversary.shared[l].weight).cwiseAbs().maxCoeff() < 1e-14);
    }
    const auto g1 = nn::backward(s, t, b.y, b.a, 1.0), g2 = nn::backward(s, t, b.y, b.a, 2.0);
    CHECK(g1.adversary_head.weight == g2.adversary_head.weight);
    CHECK(g1.target_head.weight == g2.target_head.weight);
  }

  TEST_CASE("combined gradient is the sum of the branches") {
    std::mt19937_64 rng(23);
    const auto s = nn::init_network(small_spec(4, {6, 3}, 3.0), 6);
    const auto b = random_batch(rng, 5, 4, HeadKind::SoftmaxClassifier);
    const auto t = nn::forward(s, b.x);
    const auto g = nn::backward(s, t, b.y, b.a, 3.0);
    const auto br = nn::backward_branches(s, t, b.y, b.a, 3.0);
    for (std::size_t l = 0; l < g.shared.size(); ++l) {
      const Matrix sum = br.target.shared[l].weight + br.adversary.shared[l].weight;
      CHECK((g.shared[l].weight - sum).cwiseAbs().maxCoeff() < 1e-12);
    }
  }

  TEST_CASE("analytic gradients match central differences") {
    std::mt19937_64 rng(24);
    std::uniform_int_distribution<int> depth(1, 3), width(1, 8), batch(1, 6), dim(1, 5);
    int checked = 0;
    while (checked < 30) {
      std::vector<std::size_t> hidden(static_cast<std::size_t>(depth(rng)));
      for (auto& w : hidden) w = static_cast<std::size_t>(width(rng));
      const auto head = checked % 2 ? HeadKind::LinearRegressor : HeadKind::SoftmaxClassifier;
      const double lambda = std::vector<double>{0.0, 0.5, 1.0, 4.0}[static_cast<std::size_t>(checked % 4)];
      const auto d = static_cast<std::size_t>(dim(rng));
      const auto s = nn::init_network(small_spec(d, hidden, lambda, head), rng());
      const auto b = random_batch(rng, static_cast<std::size_t>(batch(rng)), d, head);
      if (oracle::min_abs_preactivation(s, b.x) < 1e-3) continue;
      const auto g = nn::backward(s, nn::forward(s, b.x), b.y, b.a, lambda);
      CHECK(oracle::max_gradient_error(s, b.x, b.y, b.a, lambda, g) < 1e-5);
      ++checked;
    }
  }

  TEST_CASE("reversed trunk contribution is -lambda times the identity one") {
    std::mt19937_64 rng(25);
    for (double lambda : {0.0, 1.0, 50.0, 100.0}) {
      const auto s = nn::init_network(small_spec(3, {4, 4}, lambda), rng());
      const auto b = random_batch(rng, 8, 3, HeadKind::SoftmaxClassifier);
      const auto t = nn::forward(s, b.x);
      const auto rev = nn::backward_branches(s, t, b.y, b.a, lambda, nn::GradientFlow::Reversed);
      const auto plain = nn::backward_branches(s, t, b.y, b.a, lambda, nn::GradientFlow::Identity);
      for (std::size_t l = 0; l < rev.adversary.shared.size(); ++l) {
        const Matrix expect = -lambda * plain.adversary.shared[l].weight;
        const double scale = std::max(1.0, expect.cwiseAbs().maxCoeff());
        CHECK((rev.adversary.shared[l].weight - expect).cwiseAbs().maxCoeff() <= 1e-12 * scale);
      }
    }
  }

  TEST_CASE("reverse_gradient scales by -lambda") {
    Matrix up(2, 2);
    up << 1.0, -2.0, 0.5, 0.0;
    CHECK(nn::reverse_gradient(up, 3.0) == -3.0 * up);
  }
}

TEST_SUITE("optimizer") {
  TEST_CASE("first Adam step moves a unit gradient by the learning rate") {
    auto s = nn::init_network(small_spec(1, {1}, 0.0), 1);
    for (auto* d : s.params.layers()) {
      d->weight.setZero();
      d->bias.setZero();
    }
    auto g = s.params.zeros_like();
    g.shared[0].weight(0, 0) = 1.0;
    nn::OptimizerConfig cfg;
    nn::adam_step(s, g, cfg);
    // m_hat = 1, v_hat = 1, so the step is -alpha / (1 + eps).
    CHECK(s.params.shared[0].weight(0, 0) == doctest::Approx(-0.01 / (1.0 + 1e-8)).epsilon(1e-12));
    CHECK(s.params.shared[0].bias(0) == 0.0);
    CHECK(s.adam.step == 1);
  }

  TEST_CASE("second Adam step follows the recurrences") {
    auto s = nn::init_network(small_spec(1, {1}, 0.0), 1);
    s.params.shared[0].weight(0, 0) = 0.0;
    auto g1 = s.params.zeros_like(), g2 = s.params.zeros_like();
    g1.shared[0].weight(0, 0) = 1.0;
    g2.shared[0].weight(0, 0) = -3.0;
    nn::OptimizerConfig cfg;
    nn::adam_step(s, g1, cfg);
    nn::adam_step(s, g2, cfg);
    const double m = 0.9 * 0.1 * 1.0 + 0.1 * -3.0;
    const double v = 0.9999 * 0.0001 * 1.0 + 0.0001 * 9.0;
    const double m_hat = m / (1.0 - 0.81), v_hat = v / (1.0 - 0.9999 * 0.9999);
    const double expect = -0.01 / (1.0 + 1e-8) - 0.01 * m_hat / (std::sqrt(v_hat) + 1e-8);
    CHECK(s.params.shared[0].weight(0, 0) == doctest::Approx(expect).epsilon(1e-12));
  }

  TEST_CASE("zero gradient leaves parameters unchanged") {
    auto s = nn::init_network(small_spec(3, {4}, 1.0), 9);
    const auto before = s.params;
    nn::adam_step(s, s.params.zeros_like(), nn::OptimizerConfig{});
    CHECK(same_params(before, s.params));
    CHECK(s.adam.step == 1);
  }

  TEST_CASE("Adam trajectory is deterministic") {
    std::mt19937_64 rng(31);
    const auto s0 = nn::init_network(small_spec(3, {4}, 1.0), 9);
    const auto b = random_batch(rng, 5, 3, HeadKind::SoftmaxClassifier);
    auto run = [&] {
      auto s = s0;
      for (int i = 0; i < 3; ++i) nn::adam_step(s, nn::backward(s, nn::forward(s, b.x), b.y, b.a, 1.0), {});
      return s;
    };
    CHECK(same_params(run().params, run().params));
  }

  TEST_CASE("non-finite parameters raise") {
    auto s = nn::init_network(small_spec(2, {2}, 1.0), 9);
    auto g = s.params.zeros_like();
    g.shared[0].weight(0, 0) = NAN;
    CHECK_THROWS_AS(nn::adam_step(s, g, {}), NumericalError);
  }

  TEST_CASE("adversary-only step does not increase the adversary loss") {
    std::mt19937_64 rng(33);
    nn::OptimizerConfig cfg;
    cfg.learning_rate = 1e-4;
    for (int trial = 0; trial < 20; ++trial) {
      auto s = nn::init_network(small_spec(3, {5, 4}, 10.0), rng());
      const auto b = random_batch(rng, 16, 3, HeadKind::SoftmaxClassifier);
      const auto t = nn::forward(s, b.x);
      const double before = nn::loss_terms(s.spec, t, b.y, b.a).adversary;
      auto g = s.params.zeros_like();
      g.adversary_head = nn::backward(s, t, b.y, b.a, 10.0).adversary_head;
      nn::adam_step(s, g, cfg);
      CHECK(nn::loss_terms(s.spec, nn::forward(s, b.x), b.y, b.a).adversary <= before);
    }
  }

  TEST_CASE("plateau scheduler") {
    nn::OptimizerConfig cfg;
    SUBCASE("strictly decreasing history keeps the rate") {
      std::vector<double> h;
      for (int i = 0; i < 30; ++i) h.push_back(10.0 - i);
      CHECK(nn::lr_on_plateau(h, 0.01, cfg) == 0.01);
    }
    SUBCASE("flat history of patience + 1 epochs reduces the rate") {
      const std::vector<double> h(11, 1.0);
      CHECK(nn::lr_on_plateau(h, 0.01, cfg) == doctest::Approx(0.001));
      const std::vector<double> shorter(10, 1.0);
      CHECK(nn::lr_on_plateau(shorter, 0.01, cfg) == 0.01);
    }
    SUBCASE("an improvement of exactly min-delta counts") {
      std::vector<double> h(11, 1.0);
      h.back() = 1.0 - 0.25;  // exactly representable
      cfg.plateau_min_delta = 0.25;
      CHECK(nn::lr_on_plateau(h, 0.01, cfg) == 0.01);
      h.back() = 1.0 - 0.125;
      CHECK(nn::lr_on_plateau(h, 0.01, cfg) == doctest::Approx(0.001));
    }
    SUBCASE("empty history") { CHECK(nn::lr_on_plateau({}, 0.5, cfg) == 0.5); }
  }
}

TEST_SUITE("training") {
  nn::TrainingData separable(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 0.5);
    nn::TrainingData d{Matrix(static_cast<Eigen::Index>(n), 2), Vector(static_cast<Eigen::Index>(n)),
                       Vector(static_cast<Eigen::Index>(n))};
    for (Eigen::Index i = 0; i < d.x.rows(); ++i) {
      const int y = static_cast<int>(i % 2);
      d.x(i, 0) = (y ? 2.0 : -2.0) + g(rng);
      d.x(i, 1) = g(rng);
      d.y(i) = y;
      d.a(i) = static_cast<double>((i / 2) % 2);
    }
    return d;
  }

  TEST_CASE("fits a separable toy set") {
    const auto data = separable(200, 1);
    const auto res = nn::train_reader(nn::init_network(small_spec(2, {8, 8}, 0.0), 2), data, {}, 200, 32, 3);
    const auto t = nn::forward(res.state, data.x);
    int correct = 0;
    for (Eigen::Index i = 0; i < data.x.rows(); ++i) correct += (t.y_out(i, 1) > t.y_out(i, 0)) == (data.y(i) > 0.5);
    CHECK(correct >= 198);
    CHECK(res.epoch_losses.size() == 200);
    CHECK(res.epoch_losses.back() < res.epoch_losses.front());
  }

  TEST_CASE("zero epochs leave the state unchanged") {
    const auto data = separable(20, 1);
    const auto s = nn::init_network(small_spec(2, {4}, 1.0), 2);
    const auto res = nn::train_reader(s, data, {}, 0, 8, 3);
    CHECK(same_params(s.params, res.state.params));
    CHECK(res.epoch_losses.empty());
  }

  TEST_CASE("training is deterministic for a fixed seed") {
    const auto data = separable(50, 4);
    const auto s = nn::init_network(small_spec(2, {4, 3}, 5.0), 2);
    const auto a = nn::train_reader(s, data, {}, 15, 7, 3), b = nn::train_reader(s, data, {}, 15, 7, 3);
    CHECK(a.epoch_losses == b.epoch_losses);
    CHECK(same_params(a.state.params, b.state.params));
    const auto c = nn::train_reader(s, data, {}, 15, 7, 4);
    CHECK(a.epoch_losses != c.epoch_losses);
  }

  TEST_CASE("learning rate drops after a plateau") {
    const auto data = separable(20, 4);
    nn::OptimizerConfig cfg;
    cfg.plateau_patience = 2;
    cfg.plateau_min_delta = 1e9;  // nothing counts as an improvement
    const auto res = nn::train_reader(nn::init_network(small_spec(2, {3}, 0.0), 2), data, cfg, 8, 20, 1);
    REQUIRE(res.learning_rates.size() == 8);
    CHECK(res.learning_rates[0] == 0.01);
    CHECK(res.learning_rates[2] == 0.01);
    CHECK(res.learning_rates[3] == doctest::Approx(0.001));
    CHECK(res.learning_rates[6] == doctest::Approx(0.0001));
  }

  TEST_CASE("bad inputs raise") {
    const auto s = nn::init_network(small_spec(2, {3}, 0.0), 2);
    nn::TrainingData empty{Matrix(0, 2), Vector(0), Vector(0)};
    CHECK_THROWS_AS(nn::train_reader(s, empty, {}, 1, 4, 1), InvalidArgument);
    CHECK_THROWS_AS(nn::train_reader(s, separable(10, 1), {}, 1, 0, 1), InvalidArgument);
  }
}
