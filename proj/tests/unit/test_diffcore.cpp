#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "qreason/diffcore/adam.hpp"
#include "qreason/diffcore/checkpoint.hpp"
#include "qreason/diffcore/gradcheck.hpp"
#include "qreason/diffcore/ops.hpp"
#include "qreason/diffcore/params.hpp"
#include "qreason/error.hpp"
#include "support.hpp"

using namespace qreason;
using namespace qreason::diff;
using testing::random_leaf;
using testing::random_matrix;

namespace {

Var<double> column(std::initializer_list<double> v) {
  Matrix<double> m(static_cast<Eigen::Index>(v.size()), 1);
  Eigen::Index i = 0;
  for (double x : v) m(i++, 0) = x;
  return Var<double>::leaf(m);
}

// exp-normalize in long double, written independently of the library.
std::vector<long double> reference_softmax(const std::vector<long double>& x) {
  long double total = 0;
  std::vector<long double> e;
  for (long double v : x) e.push_back(std::exp(v));
  for (long double v : e) total += v;
  for (auto& v : e) v /= total;
  return e;
}

}  // namespace

TEST_CASE("softmax over equal logits is uniform") {
  const Mask mask{1, 1, 1};
  auto p = softmax_masked(column({0, 0, 0}), mask);
  for (int i = 0; i < 3; ++i) CHECK(p.value()(i, 0) == doctest::Approx(1.0 / 3).epsilon(1e-15));
}

TEST_CASE("softmax with one open slot puts all mass there") {
  const Mask mask{1, 0, 0};
  auto p = softmax_masked(column({5, -2, 7}), mask);
  CHECK(p.value()(0, 0) == 1.0);
  CHECK(p.value()(1, 0) == 0.0);
  CHECK(p.value()(2, 0) == 0.0);
}

TEST_CASE("softmax matches an extended precision reference") {
  const Mask mask{1, 1, 1};
  auto p = softmax_masked(column({1, 2, 3}), mask);
  const auto ref = reference_softmax({1.0L, 2.0L, 3.0L});
  for (int i = 0; i < 3; ++i) CHECK(std::abs(static_cast<long double>(p.value()(i, 0)) - ref[i]) < 1e-15L);
}

TEST_CASE("softmax rejects bad masks") {
  CHECK_THROWS_AS(softmax_masked(column({1, 2}), Mask{0, 0}), InvalidInput);
  CHECK_THROWS_AS(softmax_masked(column({1, 2}), Mask{1}), InvalidInput);
}

TEST_CASE("softmax is shift invariant and sums to one") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> shift(-50, 50);
  for (int trial = 0; trial < 200; ++trial) {
    const Eigen::Index n = 1 + static_cast<Eigen::Index>(rng() % 12);
    Mask mask(static_cast<std::size_t>(n));
    for (auto& m : mask) m = rng() % 3 != 0;
    mask[rng() % mask.size()] = 1;
    Matrix<double> x = random_matrix(rng, n, 1, 5);
    const double c = shift(rng);
    auto a = softmax_masked(Var<double>::constant(x), mask);
    Matrix<double> xs = x.array() + c;
    auto b = softmax_masked(Var<double>::constant(xs), mask);
    CHECK(testing::max_abs_diff(a.value(), b.value()) < 1e-9);
    CHECK(std::abs(a.value().sum() - 1.0) < 1e-9);
    for (Eigen::Index i = 0; i < n; ++i)
      if (!mask[static_cast<std::size_t>(i)]) CHECK(a.value()(i, 0) == 0.0);
  }
}

TEST_CASE("masked positions get zero gradient") {
  std::mt19937_64 rng(2);
  auto logits = random_leaf(rng, 5, 1);
  const Mask mask{1, 0, 1, 0, 1};
  auto p = softmax_masked(logits, mask);
  auto w = Var<double>::constant(random_matrix(rng, 5, 1));
  backward(sum(mul(p, w)));
  CHECK(logits.grad()(1, 0) == 0.0);
  CHECK(logits.grad()(3, 0) == 0.0);
  CHECK(logits.grad()(0, 0) != 0.0);
}

TEST_CASE("backward of x*x at 3 is 6") {
  auto x = Var<double>::leaf(Matrix<double>::Constant(1, 1, 3.0));
  backward(mul(x, x));
  CHECK(x.grad()(0, 0) == 6.0);
}

TEST_CASE("backward of a constant leaves gradients at zero") {
  auto x = Var<double>::leaf(Matrix<double>::Constant(1, 1, 3.0));
  auto c = Var<double>::scalar(4.0);
  const auto leaves = backward(c);
  CHECK(leaves.empty());
  CHECK(x.grad()(0, 0) == 0.0);
}

TEST_CASE("backward requires a scalar") {
  std::mt19937_64 rng(3);
  auto x = random_leaf(rng, 2, 2);
  CHECK_THROWS_AS(backward(x), InvalidInput);
}

TEST_CASE("repeated backward accumulates") {
  auto x = Var<double>::leaf(Matrix<double>::Constant(1, 1, 2.0));
  auto y = mul(x, x);
  backward(y);
  backward(y);
  CHECK(x.grad()(0, 0) == 8.0);
  x.zero_grad();
  CHECK(x.grad()(0, 0) == 0.0);
}

TEST_CASE("gradient is linear in the loss") {
  std::mt19937_64 rng(4);
  auto x = random_leaf(rng, 3, 4);
  auto w = random_leaf(rng, 4, 2);
  auto f = [&] { return sum(tanh(matmul(x, w))); };
  auto g = [&] { return sum(mul(matmul(x, w), matmul(x, w))); };
  backward(f());
  const Matrix<double> gf = x.grad();
  x.zero_grad();
  w.zero_grad();
  backward(g());
  const Matrix<double> gg = x.grad();
  x.zero_grad();
  w.zero_grad();
  const double a = 0.7, b = -1.3;
  backward(add(scale_shift(f(), a, 0.0), scale_shift(g(), b, 0.0)));
  CHECK(testing::max_abs_diff(x.grad(), a * gf + b * gg) < 1e-9);
}

TEST_CASE("two layer perceptron passes gradcheck tightly") {
  std::mt19937_64 rng(5);
  auto x = Var<double>::constant(random_matrix(rng, 4, 6));
  auto w1 = random_leaf(rng, 6, 8), b1 = random_leaf(rng, 1, 8);
  auto w2 = random_leaf(rng, 8, 3), b2 = random_leaf(rng, 1, 3);
  auto fn = [&] { return sum(tanh(affine(tanh(affine(x, w1, b1)), w2, b2))); };
  const auto r = gradcheck(fn, {{"w1", w1}, {"b1", b1}, {"w2", w2}, {"b2", b2}});
  CHECK(r.checked == 6 * 8 + 8 + 8 * 3 + 3);
  CHECK(r.max_rel_error < 1e-6);
}

TEST_CASE("linear loss gradcheck is near exact") {
  std::mt19937_64 rng(6);
  auto x = Var<double>::constant(random_matrix(rng, 3, 5));
  auto w = random_leaf(rng, 5, 2);
  const auto r = gradcheck([&] { return sum(matmul(x, w)); }, {{"w", w}});
  CHECK(r.max_rel_error < 1e-8);
}

TEST_CASE("unused parameter sits on the error floor") {
  std::mt19937_64 rng(7);
  auto used = random_leaf(rng, 2, 2);
  auto unused = random_leaf(rng, 2, 2);
  const auto r = gradcheck([&] { return sum(used); }, {{"used", used}, {"unused", unused}});
  CHECK(r.max_rel_error < 1e-6);
}

TEST_CASE("gradcheck names the op that went non-finite") {
  auto x = Var<double>::leaf(Matrix<double>::Constant(1, 1, std::nan("")));
  auto w = Var<double>::leaf(Matrix<double>::Constant(1, 1, 1.0));
  try {
    gradcheck([&] { return sum(matmul(x, w)); }, {{"w", w}});
    FAIL("expected a failure");
  } catch (const RuntimeFailure& e) {
    CHECK(std::string(e.what()).find("non-finite") != std::string::npos);
  }
}

TEST_CASE("every primitive passes gradcheck") {
  std::mt19937_64 rng(8);
  auto a = random_leaf(rng, 4, 3);
  auto b = random_leaf(rng, 4, 3);
  auto c = random_leaf(rng, 3, 5);
  auto bias = random_leaf(rng, 1, 5);
  auto col = random_leaf(rng, 4, 1);
  auto row = random_leaf(rng, 1, 3);
  auto row2 = random_leaf(rng, 1, 4);
  auto sq = random_leaf(rng, 3, 4);
  auto gain = random_leaf(rng, 1, 3);
  auto lnb = random_leaf(rng, 1, 3);
  Matrix<double> pos = random_matrix(rng, 4, 3).array().abs() + 0.5;
  auto positive = Var<double>::leaf(pos);
  const Mask mask{1, 1, 0, 1};
  const int ids[] = {2, 0, 2, 1};
  const double target[] = {0.0, 1.0, 0.5, 0.0};

  const std::vector<std::pair<const char*, std::function<Var<double>()>>> cases = {
      {"matmul", [&] { return sum(tanh(matmul(a, c))); }},
      {"matmul_nt", [&] { return sum(tanh(matmul_nt(a, b))); }},
      {"matmul_tn", [&] { return sum(tanh(matmul_tn(a, b))); }},
      {"affine", [&] { return sum(tanh(affine(a, c, bias))); }},
      {"add/sub/mul", [&] { return sum(mul(add(a, b), sub(a, b))); }},
      {"scale_shift", [&] { return sum(tanh(scale_shift(a, 1.7, -0.3))); }},
      {"relu", [&] { return sum(mul(relu(a), b)); }},
      {"sigmoid", [&] { return sum(mul(sigmoid(a), b)); }},
      {"log", [&] { return sum(log(positive)); }},
      {"transpose", [&] { return sum(mul(transpose(a), tanh(transpose(b)))); }},
      {"softmax_masked", [&] { return sum(mul(softmax_masked(col, mask), tanh(col))); }},
      {"softmax_rows_masked", [&] { return sum(mul(softmax_rows_masked(matmul_nt(a, b), mask), tanh(matmul_nt(a, a)))); }},
      {"weighted_sum", [&] { return sum(tanh(weighted_sum(a, softmax_masked(col, mask)))); }},
      {"mean_rows_masked", [&] { return sum(tanh(mean_rows_masked(a, mask))); }},
      {"concat_cols", [&] { return sum(tanh(concat_cols<double>({a, b}))); }},
      {"slice", [&] { return sum(tanh(slice_cols(slice_rows(a, 1, 2), 1, 2))); }},
      {"pad_rows", [&] { return sum(mul(pad_rows(a, 6), pad_rows(b, 6))); }},
      {"bilinear", [&] { return sum(tanh(bilinear(row, sq, row2))); }},
      {"layer_norm", [&] { return sum(mul(layer_norm(a, gain, lnb), b)); }},
      {"embedding", [&] { return sum(tanh(embedding(a, ids))); }},
      {"cross_entropy", [&] { return cross_entropy(softmax_masked(col, Mask{1, 1, 1, 1}), std::span<const double>(target)); }},
  };
  const std::vector<GradTarget> targets = {{"a", a}, {"b", b}, {"c", c}, {"bias", bias}, {"col", col}, {"row", row},
                                           {"row2", row2}, {"sq", sq}, {"gain", gain}, {"lnb", lnb},
                                           {"positive", positive}};
  for (const auto& [name, fn] : cases) {
    CAPTURE(name);
    CHECK(gradcheck(fn, targets).max_rel_error < 1e-6);
  }
}

TEST_CASE("log clamps tiny inputs and counts them") {
  reset_log_clamp_count();
  auto x = Var<double>::leaf(Matrix<double>::Constant(1, 2, 0.0));
  auto y = log(x);
  CHECK(y.value()(0, 0) == doctest::Approx(std::log(kLogFloor)));
  CHECK(log_clamp_count() == 2);
  backward(sum(y));
  CHECK(x.grad()(0, 0) == 0.0);
}

TEST_CASE("cross entropy only logs positions with target mass") {
  reset_log_clamp_count();
  Matrix<double> p(3, 1);
  p << 0.0, 0.25, 0.75;
  const double t[] = {0.0, 1.0, 1.0};
  auto v = cross_entropy(Var<double>::constant(p), std::span<const double>(t));
  CHECK(v.item() == doctest::Approx(-std::log(0.25) - std::log(0.75)));
  CHECK(log_clamp_count() == 0);
}

TEST_CASE("adam first step moves each weight by the learning rate") {
  AdamState<double> state;
  state.config.learning_rate = 0.01;
  state.config.epsilon = 0.0;
  Matrix<double> w(1, 3);
  w << 1.0, -2.0, 0.5;
  Matrix<double> g(1, 3);
  g << 0.3, -7.0, 1e-4;
  const Matrix<double> before = w;
  Matrix<double>* ps[] = {&w};
  const Matrix<double>* gs[] = {&g};
  adam_step<double>(ps, gs, state);
  for (int i = 0; i < 3; ++i) CHECK(w(0, i) - before(0, i) == doctest::Approx(-0.01 * (g(0, i) > 0 ? 1 : -1)));
  CHECK(state.step == 1);
}

TEST_CASE("adam leaves weights alone on zero gradient") {
  AdamState<double> state;
  Matrix<double> w = Matrix<double>::Constant(2, 2, 0.4);
  Matrix<double> g = Matrix<double>::Zero(2, 2);
  Matrix<double>* ps[] = {&w};
  const Matrix<double>* gs[] = {&g};
  adam_step<double>(ps, gs, state);
  CHECK(w == Matrix<double>::Constant(2, 2, 0.4));
}

TEST_CASE("adam second step follows the moment recurrence") {
  AdamState<double> state;
  state.config.learning_rate = 0.1;
  Matrix<double> w = Matrix<double>::Constant(1, 1, 0.0);
  Matrix<double> g = Matrix<double>::Constant(1, 1, 2.0);
  Matrix<double>* ps[] = {&w};
  const Matrix<double>* gs[] = {&g};
  adam_step<double>(ps, gs, state);
  const double after_first = w(0, 0);
  adam_step<double>(ps, gs, state);
  // m2 = 0.1*2 + 0.09*2, v2 = 0.001*4 + 0.000999*4, with bias corrections.
  const double m2 = (1 - 0.9) * 2 * 0.9 + (1 - 0.9) * 2;
  const double v2 = (1 - 0.999) * 4 * 0.999 + (1 - 0.999) * 4;
  const double mhat = m2 / (1 - 0.9 * 0.9);
  const double vhat = v2 / (1 - 0.999 * 0.999);
  CHECK(w(0, 0) - after_first == doctest::Approx(-0.1 * mhat / (std::sqrt(vhat) + 1e-8)).epsilon(1e-12));
}

TEST_CASE("adam rejects mismatched shapes and bad learning rates") {
  AdamState<double> state;
  Matrix<double> w = Matrix<double>::Zero(2, 2);
  Matrix<double> g = Matrix<double>::Zero(2, 3);
  Matrix<double>* ps[] = {&w};
  const Matrix<double>* gs[] = {&g};
  CHECK_THROWS_AS(adam_step<double>(ps, gs, state), InvalidInput);
  AdamState<double> bad;
  bad.config.learning_rate = 0;
  Matrix<double> g2 = Matrix<double>::Zero(2, 2);
  const Matrix<double>* gs2[] = {&g2};
  CHECK_THROWS_AS(adam_step<double>(ps, gs2, bad), InvalidInput);
}

TEST_CASE("uniform initialization respects fan-in bounds and seeds") {
  ParamSet<float> a, b;
  std::mt19937_64 r1(9), r2(9);
  auto w = a.add_uniform("w", 16, 8, 16, r1);
  b.add_uniform("w", 16, 8, 16, r2);
  CHECK(w.value().cwiseAbs().maxCoeff() <= 0.25f);
  CHECK(a.get("w").value() == b.get("w").value());
  CHECK_THROWS(a.add_uniform("w", 1, 1, 1, r1));
}

TEST_CASE("checkpoint round-trips bit for bit") {
  ParamSet<float> params;
  std::mt19937_64 rng(10);
  params.add_uniform("encoder.w", 3, 4, 4, rng);
  params.add_uniform("bias", 1, 5, 5, rng, 1);
  const auto bytes = encode_checkpoint(export_params(params));
  CHECK(std::string(bytes.begin(), bytes.begin() + 4) == "QRCK");
  CHECK(bytes[4] == 1);
  CHECK(bytes[8] == 2);
  CHECK(encode_checkpoint(decode_checkpoint(bytes)) == bytes);

  ParamSet<float> other;
  std::mt19937_64 rng2(99);
  other.add_uniform("encoder.w", 3, 4, 4, rng2);
  other.add_uniform("bias", 1, 5, 5, rng2, 1);
  import_params(decode_checkpoint(bytes), other);
  CHECK(other.get("encoder.w").value() == params.get("encoder.w").value());
  CHECK(other.get("bias").value() == params.get("bias").value());

  const auto path = std::filesystem::temp_directory_path() / "qreason_ckpt_test.qrck";
  save_checkpoint(params, path);
  ParamSet<float> third;
  third.add_constant("encoder.w", 3, 4, 0.0f);
  third.add_constant("bias", 1, 5, 0.0f, 1);
  load_checkpoint(path, third);
  CHECK(third.get("bias").value() == params.get("bias").value());
  std::filesystem::remove(path);
}

TEST_CASE("checkpoint decoding rejects damage") {
  ParamSet<float> params;
  params.add_constant("w", 2, 2, 1.5f);
  auto bytes = encode_checkpoint(export_params(params));
  auto truncated = bytes;
  truncated.pop_back();
  CHECK_THROWS_AS(decode_checkpoint(truncated), RuntimeFailure);
  auto trailing = bytes;
  trailing.push_back(0);
  CHECK_THROWS_AS(decode_checkpoint(trailing), RuntimeFailure);
  auto magic = bytes;
  magic[0] = 'X';
  CHECK_THROWS_AS(decode_checkpoint(magic), RuntimeFailure);

  ParamSet<float> wrong_shape;
  wrong_shape.add_constant("w", 4, 1, 0.0f);
  CHECK_THROWS_AS(import_params(decode_checkpoint(bytes), wrong_shape), RuntimeFailure);
  ParamSet<float> wrong_name;
  wrong_name.add_constant("v", 2, 2, 0.0f);
  CHECK_THROWS_AS(import_params(decode_checkpoint(bytes), wrong_name), RuntimeFailure);
}

TEST_CASE("forward values are deterministic") {
  std::mt19937_64 r1(11), r2(11);
  auto a1 = random_leaf<float>(r1, 5, 7), a2 = random_leaf<float>(r2, 5, 7);
  auto w1 = random_leaf<float>(r1, 7, 3), w2 = random_leaf<float>(r2, 7, 3);
  CHECK(tanh(matmul(a1, w1)).value() == tanh(matmul(a2, w2)).value());
}
