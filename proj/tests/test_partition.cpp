#include <cstring>

#include "doctest.h"
#include "radarformer/ops.hpp"
#include "test_util.hpp"

using namespace radar;
using radar::testing::random_tensor;

namespace {

bool bit_equal(const Tensor<double>& a, const Tensor<double>& b) {
  return a.shape() == b.shape() && std::memcmp(a.data().data(), b.data().data(), a.data().size() * sizeof(double)) == 0;
}

Tensor<double> iota(const Shape& shape) {
  std::vector<double> v(static_cast<std::size_t>(numel(shape)));
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = double(i);
  return Tensor<double>(shape, v);
}

}  // namespace

TEST_CASE("window partition shapes and degenerate window") {
  auto x = random_tensor({1, 4, 8, 8}, 1);
  CHECK(window_partition(x, 4).shape() == Shape{4, 16, 4});

  auto img = iota({1, 1, 4, 4});
  auto one = window_partition(img, 4);
  CHECK(one.shape() == Shape{1, 16, 1});
  for (Index i = 0; i < 16; ++i) CHECK(one.data()[i] == double(i));
}

TEST_CASE("window tokens are the pixels of each window in row-major order") {
  auto img = iota({1, 2, 6, 6});
  auto w = window_partition(img, 3);
  CHECK(w.shape() == Shape{4, 9, 2});
  // window 3 is the bottom-right block; token 4 is its centre pixel (4, 4).
  CHECK(w.at({3, 4, 0}) == img.at({0, 0, 4, 4}));
  CHECK(w.at({3, 4, 1}) == img.at({0, 1, 4, 4}));
  CHECK(w.at({1, 2, 0}) == img.at({0, 0, 0, 5}));
}

TEST_CASE("grid partition groups dilated pixels") {
  auto img = iota({1, 1, 4, 4});
  auto g = grid_partition(img, 2);
  CHECK(g.shape() == Shape{4, 4, 1});
  CHECK(g.at({0, 0, 0}) == img.at({0, 0, 0, 0}));
  CHECK(g.at({0, 1, 0}) == img.at({0, 0, 0, 2}));
  CHECK(g.at({0, 2, 0}) == img.at({0, 0, 2, 0}));
  CHECK(g.at({0, 3, 0}) == img.at({0, 0, 2, 2}));
  CHECK(g.at({3, 0, 0}) == img.at({0, 0, 1, 1}));

  auto flat = grid_partition(iota({1, 3, 2, 5}), 1);
  CHECK(flat.shape() == Shape{10, 1, 3});
  auto src = iota({1, 3, 2, 5});
  for (Index p = 0; p < 10; ++p)
    for (Index c = 0; c < 3; ++c) CHECK(flat.at({p, 0, c}) == src.at({0, c, p / 5, p % 5}));
}

TEST_CASE("partition sizes must be positive") {
  auto x = random_tensor({1, 1, 4, 4}, 2);
  CHECK_THROWS_AS(window_partition(x, 0), ConfigError);
  CHECK_THROWS_AS(grid_partition(x, -2), ConfigError);
}

TEST_CASE("non-divisible sizes are zero padded") {
  auto x = random_tensor({1, 2, 5, 5}, 3, 1.0, 2.0);
  auto w = window_partition(x, 4);
  CHECK(w.shape() == Shape{4, 16, 2});
  CHECK(w.at({3, 15, 0}) == 0.0);
  CHECK(w.at({0, 0, 0}) == x.at({0, 0, 0, 0}));
}

TEST_CASE("reverse is an exact inverse over the size lattice") {
  const Index sizes[] = {4, 7, 8, 16, 32};
  const Index blocks[] = {1, 2, 4, 7, 8};
  std::uint64_t seed = 10;
  for (Index h : sizes) {
    for (Index p : blocks) {
      const Index w = h == 32 ? 7 : h;  // one rectangular case per row keeps the lattice fast
      for (Index width : {h, w}) {
        auto x = random_tensor({2, 3, h, width}, seed++);
        INFO("H=" << h << " W=" << width << " P=" << p);
        CHECK(bit_equal(window_reverse(window_partition(x, p), p, x.shape()), x));
        CHECK(bit_equal(grid_reverse(grid_partition(x, p), p, x.shape()), x));
      }
    }
  }
}

TEST_CASE("reverse rejects mismatched token tensors") {
  auto x = random_tensor({1, 2, 8, 8}, 4);
  auto w = window_partition(x, 4);
  CHECK_THROWS_AS(window_reverse(w, 4, Shape{1, 2, 8, 12}), ShapeError);
  CHECK_THROWS_AS(grid_reverse(w, 4, Shape{2, 2, 8, 8}), ShapeError);
}
