#include <doctest.h>

#include <cmath>

#include "lorga/linalg.hpp"
#include "lorga/lora.hpp"

using namespace lorga;

TEST_CASE("scheme names round trip") {
  for (auto kind : {lora::SchemeKind::Vanilla, lora::SchemeKind::Gaussian,
                    lora::SchemeKind::GaussianSo, lora::SchemeKind::GradApprox,
                    lora::SchemeKind::LoraGa})
    CHECK(lora::scheme_from_name(lora::scheme_name(kind)) == kind);
  CHECK_THROWS_AS(lora::scheme_from_name("nope"), std::invalid_argument);
}

TEST_CASE("scaling constants match the closed forms") {
  // alpha = 16, r = 8, gamma = 16, d_out = 256.
  auto v = lora::compute_scaling(lora::SchemeKind::Vanilla, 16.0, 8, std::nullopt, 256);
  CHECK(v.eta == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(!v.zeta);
  CHECK(v.factor == 1.0);

  auto so = lora::compute_scaling(lora::SchemeKind::GaussianSo, 16.0, 8, 16.0, 256);
  CHECK(so.eta == doctest::Approx(16.0 / std::sqrt(8.0)).epsilon(1e-15));
  // d_out^{1/4} / sqrt(gamma) = 4 / 4 = 1.
  CHECK(so.factor == doctest::Approx(1.0).epsilon(1e-15));

  auto ga = lora::compute_scaling(lora::SchemeKind::LoraGa, 16.0, 8, 16.0, 256);
  CHECK(ga.eta == doctest::Approx(16.0 / std::sqrt(8.0)).epsilon(1e-15));
  REQUIRE(ga.zeta.has_value());
  // (256/256) * sqrt(256/64) = 2.
  CHECK(*ga.zeta == doctest::Approx(2.0).epsilon(1e-15));
  // d_out^{1/4} / gamma = 4/16 = 0.25.
  CHECK(ga.factor == doctest::Approx(0.25).epsilon(1e-15));
  // Consistency: sqrt(zeta)/eta equals the factor scale.
  CHECK(std::sqrt(*ga.zeta) / ga.eta == doctest::Approx(ga.factor).epsilon(1e-14));

  CHECK_THROWS_AS(lora::compute_scaling(lora::SchemeKind::LoraGa, 16.0, 8, std::nullopt, 256),
                  std::invalid_argument);
  CHECK_THROWS_AS(lora::compute_scaling(lora::SchemeKind::Vanilla, 16.0, 0, std::nullopt, 4),
                  std::invalid_argument);
}

TEST_CASE("vanilla init keeps the base weight untouched") {
  auto rng = linalg::make_rng(50);
  Matrix w0 = linalg::random_gaussian(10, 12, 1.0, rng);
  lora::InitScheme scheme;
  scheme.kind = lora::SchemeKind::Vanilla;
  scheme.alpha = 16.0;
  scheme.rank = 4;
  scheme.seed = 51;
  lora::AdaptedLayer layer = lora::initialize(w0, scheme);
  CHECK((layer.w_frozen - w0).cwiseAbs().maxCoeff() == 0.0);
  CHECK(layer.adapter.b.cwiseAbs().maxCoeff() == 0.0);
  const double bound = std::sqrt(3.0 / 12.0);
  CHECK(layer.adapter.a.maxCoeff() <= bound);
  CHECK(layer.adapter.a.minCoeff() >= -bound);
  CHECK((layer.effective_weight() - w0).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("gradient-based schemes preserve the effective weight") {
  auto rng = linalg::make_rng(60);
  Matrix w0 = linalg::random_gaussian(12, 10, 1.0, rng);
  Matrix grad = linalg::random_gaussian(12, 10, 1.0, rng);
  for (auto kind : {lora::SchemeKind::Gaussian, lora::SchemeKind::GaussianSo,
                    lora::SchemeKind::GradApprox, lora::SchemeKind::LoraGa}) {
    lora::InitScheme scheme;
    scheme.kind = kind;
    scheme.alpha = 8.0;
    scheme.rank = 3;
    scheme.gamma = 4.0;
    scheme.seed = 61;
    lora::AdaptedLayer layer = lora::initialize(w0, scheme, &grad);
    CHECK((layer.effective_weight() - w0).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(layer.adapter.a.rows() == 3);
    CHECK(layer.adapter.b.cols() == 3);
  }
}

TEST_CASE("lora_ga factors are the scaled singular vectors") {
  auto rng = linalg::make_rng(70);
  Matrix w0 = Matrix::Zero(16, 12);
  Matrix grad = linalg::random_gaussian(16, 12, 1.0, rng);
  lora::InitScheme scheme;
  scheme.kind = lora::SchemeKind::LoraGa;
  scheme.alpha = 4.0;
  scheme.rank = 2;
  scheme.gamma = 2.0;
  lora::AdaptedLayer layer = lora::initialize(w0, scheme, &grad);

  linalg::SvdFactors f = linalg::svd(grad);
  const double factor = std::pow(16.0, 0.25) / 2.0;
  for (Index i = 0; i < 2; ++i) {
    CHECK((layer.adapter.a.row(i).transpose() - factor * f.v.col(i)).cwiseAbs().maxCoeff() <
          1e-13);
    CHECK((layer.adapter.b.col(i) - factor * f.u.col(2 + i)).cwiseAbs().maxCoeff() < 1e-13);
  }
  // A B^T-style cross terms vanish: the factor rows/cols are orthogonal.
  CHECK((layer.adapter.b.transpose() * layer.adapter.b -
         factor * factor * Matrix::Identity(2, 2))
            .cwiseAbs()
            .maxCoeff() < 1e-12);
}

TEST_CASE("custom index partitions are honored") {
  auto rng = linalg::make_rng(80);
  Matrix w0 = Matrix::Zero(10, 10);
  Matrix grad = linalg::random_gaussian(10, 10, 1.0, rng);
  lora::IndexPartition part;
  part.for_a = {1, 3};
  part.for_b = {0, 2};
  lora::InitScheme scheme;
  scheme.kind = lora::SchemeKind::GradApprox;
  scheme.alpha = 2.0;
  scheme.rank = 2;
  lora::AdaptedLayer layer = lora::initialize(w0, scheme, &grad, &part);
  linalg::SvdFactors f = linalg::svd(grad);
  CHECK((layer.adapter.a.row(0).transpose() - f.v.col(1)).cwiseAbs().maxCoeff() < 1e-13);
  CHECK((layer.adapter.b.col(1) - f.u.col(2)).cwiseAbs().maxCoeff() < 1e-13);

  lora::IndexPartition bad;
  bad.for_a = {0};
  bad.for_b = {1, 2};
  CHECK_THROWS_AS(lora::initialize(w0, scheme, &grad, &bad), std::invalid_argument);
}

TEST_CASE("gradient-based schemes validate their inputs") {
  Matrix w0 = Matrix::Zero(6, 6);
  lora::InitScheme scheme;
  scheme.kind = lora::SchemeKind::LoraGa;
  scheme.alpha = 2.0;
  scheme.rank = 2;
  scheme.gamma = 2.0;
  CHECK_THROWS_AS(lora::initialize(w0, scheme, nullptr), std::invalid_argument);
  Matrix wrong = Matrix::Zero(5, 6);
  CHECK_THROWS_AS(lora::initialize(w0, scheme, &wrong), std::invalid_argument);
  scheme.rank = 4;  // 2r = 8 > 6
  Matrix grad = Matrix::Identity(6, 6);
  CHECK_THROWS_AS(lora::initialize(w0, scheme, &grad), std::invalid_argument);
}

TEST_CASE("adapted_forward matches the dense effective weight") {
  auto rng = linalg::make_rng(90);
  Matrix w0 = linalg::random_gaussian(9, 7, 1.0, rng);
  Matrix grad = linalg::random_gaussian(9, 7, 1.0, rng);
  lora::InitScheme scheme;
  scheme.kind = lora::SchemeKind::LoraGa;
  scheme.alpha = 4.0;
  scheme.rank = 2;
  scheme.gamma = 2.0;
  lora::AdaptedLayer layer = lora::initialize(w0, scheme, &grad);
  Matrix x = linalg::random_gaussian(7, 5, 1.0, rng);
  Matrix dense = layer.effective_weight() * x;
  CHECK((lora::adapted_forward(layer, x) - dense).cwiseAbs().maxCoeff() < 1e-12);
  Matrix bad_x = Matrix::Zero(8, 2);
  CHECK_THROWS_AS(lora::adapted_forward(layer, bad_x), std::invalid_argument);
}

TEST_CASE("adapter gradients are the linear images of the dense gradient") {
  auto rng = linalg::make_rng(100);
  Matrix w0 = linalg::random_gaussian(8, 6, 1.0, rng);
  Matrix grad = linalg::random_gaussian(8, 6, 1.0, rng);
  lora::InitScheme scheme;
  scheme.kind = lora::SchemeKind::LoraGa;
  scheme.alpha = 4.0;
  scheme.rank = 2;
  scheme.gamma = 2.0;
  lora::AdaptedLayer layer = lora::initialize(w0, scheme, &grad);
  Matrix x = linalg::random_gaussian(6, 4, 1.0, rng);
  Matrix upstream = linalg::random_gaussian(8, 4, 1.0, rng);
  lora::AdapterGradients g = lora::adapter_gradients(layer, upstream, x);
  CHECK((g.dw_eff - upstream * x.transpose()).cwiseAbs().maxCoeff() == 0.0);
  const double eta = layer.adapter.eta;
  CHECK((g.da - eta * layer.adapter.b.transpose() * g.dw_eff).cwiseAbs().maxCoeff() == 0.0);
  CHECK((g.db - eta * g.dw_eff * layer.adapter.a.transpose()).cwiseAbs().maxCoeff() == 0.0);
}
