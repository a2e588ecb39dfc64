#include <cstring>

#include "doctest.h"
#include "radarformer/ops.hpp"
#include "radarformer/tensor.hpp"

using namespace radar;

TEST_CASE("create fills zeros and constants") {
  auto z = create<double>({2, 3}, init::Zeros{});
  CHECK(z.numel() == 6);
  for (double v : z.data()) CHECK(v == 0.0);
  auto c = create<double>({4}, init::Constant{1.5});
  for (double v : c.data()) CHECK(v == 1.5);
}

TEST_CASE("seeded uniform is bit-identical per seed and within bounds") {
  auto a = create<double>({8}, init::SeededUniform{42, -1.0, 1.0});
  auto b = create<double>({8}, init::SeededUniform{42, -1.0, 1.0});
  auto c = create<double>({8}, init::SeededUniform{43, -1.0, 1.0});
  CHECK(std::memcmp(a.data().data(), b.data().data(), 8 * sizeof(double)) == 0);
  CHECK(std::memcmp(a.data().data(), c.data().data(), 8 * sizeof(double)) != 0);
  for (double v : a.data()) {
    CHECK(v >= -1.0);
    CHECK(v < 1.0);
  }
  auto f1 = create<float>({16}, init::SeededUniform{7, 0.0, 2.0});
  auto f2 = create<float>({16}, init::SeededUniform{7, 0.0, 2.0});
  CHECK(std::memcmp(f1.data().data(), f2.data().data(), 16 * sizeof(float)) == 0);
}

TEST_CASE("non-positive extents are shape errors") {
  CHECK_THROWS_AS(create<double>({2, 0}, init::Zeros{}), ShapeError);
  CHECK_THROWS_AS(create<double>({-1}, init::Zeros{}), ShapeError);
  CHECK_THROWS_AS(Tensor<double>({2, 2}, std::vector<double>(3)), ShapeError);
}

TEST_CASE("indexing and axis helpers") {
  Tensor<double> t({2, 3}, {0, 1, 2, 3, 4, 5});
  CHECK(t.at({1, 2}) == 5.0);
  CHECK(t.dim(-1) == 3);
  CHECK_THROWS_AS(t.dim(2), ShapeError);
  CHECK_THROWS_AS(t.at({2, 0}), ShapeError);
  CHECK_THROWS_AS(t.item(), ShapeError);
}

TEST_CASE("ops do not record without an active tape") {
  auto x = create<double>({3}, init::Constant{2.0});
  x.set_requires_grad(true);
  auto y = mul(x, x);
  CHECK(!y.requires_grad());
  CHECK(Tape<double>::active() == nullptr);
}

TEST_CASE("tape records in topological order and guards backward") {
  auto x = create<double>({3}, init::Constant{2.0});
  x.set_requires_grad(true);
  Tape<double> tape;
  CHECK(Tape<double>::active() == &tape);
  CHECK_THROWS_AS(tape.backward(sum(create<double>({1}, init::Zeros{}))), UsageError);
  auto y = mul(x, x);
  CHECK_THROWS_AS(tape.backward(y), UsageError);
  auto loss = sum(y);
  CHECK(tape.size() == 2);
  CHECK(tape.nodes()[0].output == tape.nodes()[1].inputs[0]);
  tape.backward(loss);
  for (double g : x.grad()) CHECK(g == doctest::Approx(4.0));
  CHECK_THROWS_AS(tape.backward(loss), UsageError);
  tape.reset();
  x.zero_grad();
  auto loss2 = sum(x);
  tape.backward(loss2);
  for (double g : x.grad()) CHECK(g == 1.0);
}

TEST_CASE("no-grad guard suspends recording") {
  auto x = create<double>({2}, init::Constant{1.0});
  x.set_requires_grad(true);
  Tape<double> tape;
  {
    NoGradGuard<double> guard;
    auto y = add(x, x);
    CHECK(!y.requires_grad());
  }
  CHECK(tape.size() == 0);
  auto y = add(x, x);
  CHECK(y.requires_grad());
  CHECK(tape.size() == 1);
}

TEST_CASE("detach drops history") {
  auto x = create<double>({2}, init::Constant{1.0});
  x.set_requires_grad(true);
  Tape<double> tape;
  auto y = scale(x, 3.0).detach();
  CHECK(!y.requires_grad());
  CHECK(y.data()[0] == 3.0);
}
