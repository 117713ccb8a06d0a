#include <doctest.h>

#include <cmath>

#include "support.hpp"
#include "tcpdm/ddpm.hpp"

using namespace tcpdm;
using tcpdm::testing::random_frame;

TEST_CASE("schedule arithmetic by hand") {
  const auto s = make_linear_schedule(2, 0.5, 0.5);
  CHECK(s.alpha_bar(0) == 1.0);
  CHECK(s.alpha_bar(1) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(s.alpha_bar(2) == doctest::Approx(0.25).epsilon(1e-15));
  const auto one = make_linear_schedule(1, 0.001, 0.001);
  CHECK(one.alpha_bar(1) == doctest::Approx(0.999).epsilon(1e-15));
  CHECK(one.beta(1) == 0.001);
}

TEST_CASE("linear schedule hits both endpoints and alpha = 1 - beta") {
  const auto s = make_linear_schedule(7, 0.01, 0.07);
  CHECK(s.beta(1) == 0.01);
  CHECK(s.beta(7) == doctest::Approx(0.07).epsilon(1e-15));
  for (int t = 1; t <= 7; ++t) CHECK(s.alpha(t) == 1.0 - s.beta(t));
}

TEST_CASE("alpha_bar at T=1000 matches an extended-precision product") {
  const auto s = make_linear_schedule(1000, 1e-4, 0.02);
  long double prod = 1.0L;
  for (int t = 1; t <= 1000; ++t) {
    const long double b = 1e-4L + (0.02L - 1e-4L) * (t - 1) / 999.0L;
    prod *= 1.0L - b;
  }
  CHECK(s.alpha_bar(1000) < 1e-3);
  CHECK(std::abs(s.alpha_bar(1000) - static_cast<double>(prod)) / static_cast<double>(prod) < 1e-10);
}

TEST_CASE("alpha_bar strictly decreasing on random schedules") {
  Rng rng(11);
  for (int k = 0; k < 20; ++k) {
    const int T = rng.uniform_int(1, 300);
    const double b0 = 1e-5 + 0.1 * rng.uniform();
    const double b1 = b0 + (0.9 - b0) * rng.uniform();
    const auto s = make_linear_schedule(T, b0, b1);
    for (int t = 1; t <= T; ++t) CHECK(s.alpha_bar(t) < s.alpha_bar(t - 1));
  }
}

TEST_CASE("invalid schedules are rejected") {
  CHECK_THROWS_AS(make_linear_schedule(0, 0.1, 0.2), Error);
  CHECK_THROWS_AS(make_linear_schedule(10, 0.0, 0.2), Error);
  CHECK_THROWS_AS(make_linear_schedule(10, 0.3, 0.2), Error);
  CHECK_THROWS_AS(make_linear_schedule(10, 0.1, 1.0), Error);
  CHECK_THROWS_AS(make_schedule({0.1, 1.5}), Error);
  try {
    make_linear_schedule(10, 0.3, 0.2);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InvalidSchedule);
  }
}

TEST_CASE("sigma modes") {
  const auto s = make_linear_schedule(10, 0.01, 0.1);
  for (int t = 1; t <= 10; ++t) CHECK(s.sigma(t) == doctest::Approx(std::sqrt(s.beta(t))));
  const auto bt = make_linear_schedule(10, 0.01, 0.1, SigmaMode::BetaTilde);
  for (int t = 2; t <= 10; ++t) {
    const double tilde = (1 - bt.alpha_bar(t - 1)) / (1 - bt.alpha_bar(t)) * bt.beta(t);
    CHECK(bt.sigma(t) == doctest::Approx(std::sqrt(tilde)));
  }
  CHECK(parse_sigma_mode("beta_tilde") == SigmaMode::BetaTilde);
  CHECK(to_string(parse_sigma_mode("beta")) == "beta");
  CHECK_THROWS_AS(parse_sigma_mode("cosine"), Error);
}

TEST_CASE("forward_sample closed forms") {
  const auto s = make_schedule({0.5, 0.5});
  const auto x0 = FrameTensor::constant(1, 1, 1, 1.0f);
  const auto eps = FrameTensor::constant(1, 1, 1, 1.0f);
  CHECK(forward_sample(x0, 2, eps, s)(0, 0, 0) == doctest::Approx(0.5 + std::sqrt(0.75)));

  Rng rng(3);
  const auto img = random_frame(4, 5, 3, rng);
  const auto zero = FrameTensor(4, 5, 3);
  const auto a = forward_sample(img, 2, zero, s);
  for (Eigen::Index i = 0; i < img.size(); ++i) {
    CHECK(a.array()[i] == doctest::Approx(0.5 * img.array()[i]));
  }
  const auto b = forward_sample(zero, 1, FrameTensor::constant(4, 5, 3, 1.0f), s);
  for (auto v : b.array()) CHECK(v == doctest::Approx(std::sqrt(0.5)));
}

TEST_CASE("forward_sample errors") {
  const auto s = make_linear_schedule(5, 0.01, 0.1);
  const FrameTensor a(2, 2, 3), b(2, 3, 3);
  CHECK_THROWS_AS(forward_sample(a, 1, b, s), Error);
  CHECK_THROWS_AS(forward_sample(a, 0, a, s), Error);
  CHECK_THROWS_AS(forward_sample(a, 6, a, s), Error);
  try {
    forward_sample(a, 6, a, s);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::StepOutOfRange);
  }
}

TEST_CASE("forward_sample marginal moments within 3 standard errors") {
  const auto s = make_linear_schedule(50, 1e-4, 0.05);
  const int n = 10000;
  for (int t : {1, 10, 50}) {
    Rng rng = Rng::stream(5, {static_cast<std::uint64_t>(t)});
    const auto x0 = FrameTensor::constant(1, 1, 1, 0.7f);
    double sum = 0, sq = 0;
    for (int i = 0; i < n; ++i) {
      const auto eps = random_frame(1, 1, 1, rng);
      const double v = forward_sample(x0, t, eps, s)(0, 0, 0);
      sum += v;
      sq += v * v;
    }
    const double mean = sum / n;
    const double var = (sq - n * mean * mean) / (n - 1);
    const double sigma2 = 1 - s.alpha_bar(t);
    CHECK(std::abs(mean - std::sqrt(s.alpha_bar(t)) * 0.7) < 3 * std::sqrt(sigma2 / n));
    CHECK(std::abs(var - sigma2) < 3 * sigma2 * std::sqrt(2.0 / (n - 1)));
  }
}

TEST_CASE("reverse_step identities") {
  Rng rng(9);
  const auto x = random_frame(3, 3, 3, rng);
  const auto e = random_frame(3, 3, 3, rng);
  const FrameTensor zero(3, 3, 3);

  const auto ident = make_schedule({1e-12, 0.1});
  const auto same = reverse_step(x, e, 1, zero, ident);
  for (Eigen::Index i = 0; i < x.size(); ++i) CHECK(same.array()[i] == doctest::Approx(x.array()[i]).epsilon(1e-5));

  const auto s = make_linear_schedule(10, 0.01, 0.2);
  const auto scaled = reverse_step(x, zero, 4, zero, s);
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    CHECK(scaled.array()[i] == doctest::Approx(x.array()[i] / std::sqrt(s.alpha(4))));
  }
}

TEST_CASE("T=1 round trip recovers x0") {
  Rng rng(21);
  for (int k = 0; k < 5; ++k) {
    const auto s = make_linear_schedule(1, 1e-4 + 0.5 * rng.uniform(), 0.9);
    const auto x0 = random_frame(4, 4, 3, rng).cast<double>();
    const auto eps = random_frame(4, 4, 3, rng).cast<double>();
    const Tensor<double> zero(4, 4, 3);
    const auto back = reverse_step(forward_sample(x0, 1, eps, s), eps, 1, zero, s);
    CHECK((back.array() - x0.array()).abs().maxCoeff() <= 1e-6);
  }
}

TEST_CASE("true noise gives the posterior mean") {
  const auto s = make_linear_schedule(30, 1e-3, 0.1);
  Rng rng(4);
  const auto x0 = random_frame(2, 2, 3, rng).cast<double>();
  const auto eps = random_frame(2, 2, 3, rng).cast<double>();
  const Tensor<double> zero(2, 2, 3);
  for (int t = 2; t <= 30; t += 7) {
    const auto xt = forward_sample(x0, t, eps, s);
    const auto got = reverse_step(xt, eps, t, zero, s);
    const double c0 = std::sqrt(s.alpha_bar(t - 1)) * s.beta(t) / (1 - s.alpha_bar(t));
    const double ct = std::sqrt(s.alpha(t)) * (1 - s.alpha_bar(t - 1)) / (1 - s.alpha_bar(t));
    for (Eigen::Index i = 0; i < x0.size(); ++i) {
      CHECK(got.array()[i] == doctest::Approx(c0 * x0.array()[i] + ct * xt.array()[i]).epsilon(1e-10));
    }
  }
}

TEST_CASE("forward and reverse are affine in their tensor arguments") {
  const auto s = make_linear_schedule(10, 0.01, 0.2);
  Rng rng(8);
  auto r = [&] { return random_frame(3, 2, 3, rng).cast<double>(); };
  const auto x1 = r(), x2 = r(), e1 = r(), e2 = r(), z1 = r(), z2 = r();
  const double a = rng.normal(), b = rng.normal();
  auto mix = [&](const Tensor<double>& p, const Tensor<double>& q) {
    Tensor<double> o = p;
    o.array() = a * p.array() + b * q.array();
    return o;
  };
  const auto f = forward_sample(mix(x1, x2), 5, mix(e1, e2), s);
  const auto f_expected = mix(forward_sample(x1, 5, e1, s), forward_sample(x2, 5, e2, s));
  CHECK((f.array() - f_expected.array()).abs().maxCoeff() < 1e-12);
  // reverse_step has no constant term, so it is linear in (x_t, eps_pred, z) jointly.
  const auto g = reverse_step(mix(x1, x2), mix(e1, e2), 5, mix(z1, z2), s);
  const auto g_expected = mix(reverse_step(x1, e1, 5, z1, s), reverse_step(x2, e2, 5, z2, s));
  CHECK((g.array() - g_expected.array()).abs().maxCoeff() < 1e-12);
}

TEST_CASE("training_loss with oracle and trivial predictors") {
  const auto s = make_linear_schedule(50, 1e-4, 0.05);
  Rng data(1);
  std::vector<FrameTensor> xs, ys;
  std::vector<SemanticLogits> ls;
  for (int i = 0; i < 4; ++i) {
    xs.push_back(tcpdm::testing::uniform_frame(8, 8, 3, data, -1, 1));
    ys.push_back(FrameTensor(8, 8, 1));
    ls.push_back(FrameTensor(8, 8, 2));
  }

  // The oracle recovers eps from x_t, which needs x0: key on patch identity.
  std::size_t call = 0;
  NoisePredictor oracle = [&](const FrameTensor& xt, const FrameTensor&, const SemanticLogits&, int t) {
    const auto& x0 = xs[call++ % xs.size()];
    FrameTensor e = xt;
    e.array() = ((xt.array().cast<double>() - std::sqrt(s.alpha_bar(t)) * x0.array().cast<double>()) /
                 std::sqrt(1 - s.alpha_bar(t)))
                    .cast<float>();
    return e;
  };
  Rng r1(2);
  CHECK(training_loss(xs, ys, ls, oracle, s, r1) < 1e-10);

  NoisePredictor zero = [](const FrameTensor& xt, const FrameTensor&, const SemanticLogits&, int) {
    return FrameTensor(xt.height(), xt.width(), xt.channels());
  };
  Rng r2(3);
  double total = 0;
  const int reps = 60;  // 60 * 4 * 192 elements
  for (int i = 0; i < reps; ++i) total += training_loss(xs, ys, ls, zero, s, r2);
  CHECK(std::abs(total / reps - 1.0) < 0.05);
}

TEST_CASE("training_loss replays the seeded draw") {
  const auto s = make_linear_schedule(50, 1e-4, 0.05);
  Rng data(5);
  const std::vector<FrameTensor> xs{tcpdm::testing::uniform_frame(4, 4, 3, data, -1, 1)};
  const std::vector<FrameTensor> ys{FrameTensor(4, 4, 1)};
  const std::vector<SemanticLogits> ls{FrameTensor(4, 4, 3)};
  const float c = 0.3f;
  int seen_t = 0;
  NoisePredictor constant = [&](const FrameTensor& xt, const FrameTensor&, const SemanticLogits&, int t) {
    seen_t = t;
    return FrameTensor::constant(xt.height(), xt.width(), 3, c);
  };
  Rng rng(77);
  const double loss = training_loss(xs, ys, ls, constant, s, rng);
  Rng replay(77);
  const auto draw = draw_diffusion_target(4, 4, 3, 50, replay);
  CHECK(seen_t == draw.t);
  const double expected = (draw.eps.array().cast<double>() - c).square().mean();
  CHECK(loss == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("training_loss errors") {
  const auto s = make_linear_schedule(5, 0.01, 0.1);
  NoisePredictor zero = [](const FrameTensor& xt, const FrameTensor&, const SemanticLogits&, int) {
    return FrameTensor(xt.height(), xt.width(), xt.channels());
  };
  Rng rng(0);
  CHECK_THROWS_AS(training_loss({}, {}, {}, zero, s, rng), Error);
  const std::vector<FrameTensor> xs{FrameTensor(4, 4, 3)};
  const std::vector<FrameTensor> bad{FrameTensor(3, 4, 1)};
  const std::vector<SemanticLogits> ls{FrameTensor(4, 4, 2)};
  CHECK_THROWS_AS(training_loss(xs, bad, ls, zero, s, rng), Error);
}
