#include <doctest.h>

#include <array>
#include <cmath>
#include <filesystem>
#include <set>
#include <sstream>

#include "pnet/data.hpp"
#include "pnet/errors.hpp"
#include "pnet/random.hpp"

using namespace pnet;

TEST_CASE("Rng produces the documented uniform conversion") {
  Rng a(7);
  std::mt19937_64 engine(7);
  for (int i = 0; i < 100; ++i) {
    const double expected = static_cast<double>(engine() >> 11) * 0x1.0p-53;
    CHECK(a.uniform() == expected);
  }
  Rng b(3);
  for (int i = 0; i < 1000; ++i) {
    const auto k = b.below(7);
    CHECK(k < 7);
  }
}

TEST_CASE("gen_sign targets and golden checksum") {
  const Dataset data = gen_sign(100, -5.0, 5.0, 42);
  CHECK(data.size() == 100);
  CHECK(data.task == Task::regression);
  double sum = 0.0;
  double weighted = 0.0;
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    const double x = data.inputs(i, 0);
    CHECK(x >= -5.0);
    CHECK(x < 5.0);
    CHECK(data.targets(i, 0) == (x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0)));
    sum += x;
    weighted += static_cast<double>(i + 1) * x;
  }
  // Recorded from the first build; any change to the generator shows up here.
  CHECK(data.inputs(0, 0) == 2.5515553295453897);
  CHECK(data.inputs(99, 0) == -3.7614872261544563);
  CHECK(sum == doctest::Approx(1.9369402916848597).epsilon(1e-14));
  CHECK(weighted == doctest::Approx(795.56850048896285).epsilon(1e-14));
}

TEST_CASE("gen_square and gen_abs") {
  const Dataset sq = gen_square(50, 1);
  const Dataset ab = gen_abs(50, 1);
  CHECK(sq.inputs == ab.inputs);
  for (Eigen::Index i = 0; i < 50; ++i) {
    const double x = sq.inputs(i, 0);
    CHECK(std::abs(x) <= 1.0);
    CHECK(sq.targets(i, 0) == x * x);
    CHECK(ab.targets(i, 0) == std::abs(x));
  }
  CHECK_THROWS_AS(gen_sign(0, -1, 1, 1), InputError);
  CHECK_THROWS_AS(gen_sign(5, 1, 1, 1), InputError);
}

TEST_CASE("activity stand-in layout") {
  const Dataset data = gen_activity_standin(500, 2021);
  CHECK(data.size() == 2500);
  CHECK(data.feature_dim() == 60);
  CHECK(data.target_dim() == 5);
  CHECK(data.task == Task::classification);
  std::array<int, 5> counts{};
  for (Eigen::Index d = 0; d < data.size(); ++d) {
    CHECK(data.targets.row(d).sum() == 1.0);
    ++counts[static_cast<std::size_t>(data.label(d))];
  }
  for (int c : counts) CHECK(c == 500);

  const Dataset again = gen_activity_standin(500, 2021);
  CHECK(again.inputs == data.inputs);
  CHECK(again.targets == data.targets);

  const Dataset small = gen_activity_standin(3, 2021);
  CHECK(small.inputs(0, 0) == -0.38519871563202801);
  CHECK(small.inputs.sum() == doctest::Approx(16.84695130072533).epsilon(1e-13));
}

TEST_CASE("activity stand-in separability: nearest class mean within 10% error") {
  // Class means from the first half of every class, scored on the second half.
  const Dataset data = gen_activity_standin(1000, 2021);
  RowMatrix means = RowMatrix::Zero(5, 60);
  for (Eigen::Index d = 0; d < data.size(); ++d) {
    if (d % 1000 < 500) means.row(data.label(d)) += data.inputs.row(d);
  }
  means /= 500.0;
  int wrong = 0;
  int total = 0;
  for (Eigen::Index d = 0; d < data.size(); ++d) {
    if (d % 1000 < 500) continue;
    Eigen::Index best = 0;
    (means.rowwise() - data.inputs.row(d)).rowwise().squaredNorm().minCoeff(&best);
    wrong += best != data.label(d);
    ++total;
  }
  const double error = static_cast<double>(wrong) / total;
  MESSAGE("nearest-mean error " << error);
  CHECK(error <= 0.10);
}

TEST_CASE("split_train_test is balanced, disjoint and reproducible") {
  const Dataset data = gen_activity_standin(40, 5);
  const auto [train, test] = split_train_test(data, 10, 30, 9);
  CHECK(train.size() == 50);
  CHECK(test.size() == 30);
  std::array<int, 5> counts{};
  for (Eigen::Index d = 0; d < train.size(); ++d) ++counts[static_cast<std::size_t>(train.label(d))];
  for (int c : counts) CHECK(c == 10);

  // Rows are distinct random vectors, so one feature identifies a row.
  std::set<double> train_keys;
  for (Eigen::Index d = 0; d < train.size(); ++d) train_keys.insert(train.inputs(d, 1));
  CHECK(train_keys.size() == 50);
  for (Eigen::Index d = 0; d < test.size(); ++d) CHECK(train_keys.count(test.inputs(d, 1)) == 0);

  const auto [train2, test2] = split_train_test(data, 10, 30, 9);
  CHECK(train2.inputs == train.inputs);
  CHECK(test2.inputs == test.inputs);
  const auto [train3, test3] = split_train_test(data, 10, 30, 10);
  CHECK(train3.inputs != train.inputs);

  CHECK_THROWS_AS(split_train_test(data, 41, 0, 1), InputError);
  CHECK_THROWS_AS(split_train_test(data, 40, 1, 1), InputError);
  CHECK_THROWS_AS(split_train_test(gen_sign(10, -1, 1, 1), 1, 1, 1), InputError);
}

TEST_CASE("CSV round trip is exact") {
  for (const Dataset& data : {gen_sign(17, -5, 5, 3), gen_activity_standin(4, 1)}) {
    std::stringstream buffer;
    save_csv(data, buffer);
    const Dataset back = load_csv(buffer);
    CHECK(back.task == data.task);
    CHECK(back.inputs == data.inputs);
    CHECK(back.targets == data.targets);
  }
}

TEST_CASE("CSV header and rows") {
  std::stringstream buffer;
  save_csv(gen_sign(2, -1, 1, 3), buffer);
  std::string header;
  std::getline(buffer, header);
  CHECK(header == "x1,y1,task");
  std::string row;
  std::getline(buffer, row);
  CHECK(row.substr(row.rfind(',') + 1) == "regression");
}

TEST_CASE("CSV errors carry line numbers") {
  std::stringstream empty;
  CHECK_THROWS_AS(load_csv(empty), ParseError);

  std::stringstream ragged("x1,y1,task\n0.5,1,regression\n0.25,regression\n");
  try {
    load_csv(ragged);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
  }

  std::stringstream bad_number("x1,y1,task\n0.5,abc,regression\n");
  try {
    load_csv(bad_number);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }

  std::stringstream bad_header("a,b,c\n1,2,regression\n");
  CHECK_THROWS_AS(load_csv(bad_header), ParseError);

  std::stringstream not_one_hot("x1,y1,y2,task\n0.5,1,1,classification\n");
  CHECK_THROWS(load_csv(not_one_hot));

  CHECK_THROWS(load_csv(std::filesystem::path("/nonexistent/data.csv")));
}

TEST_CASE("validate and subset") {
  Dataset data = gen_sign(5, -1, 1, 2);
  const Dataset picked = subset(data, {4, 0});
  CHECK(picked.size() == 2);
  CHECK(picked.inputs(0, 0) == data.inputs(4, 0));
  CHECK(picked.inputs(1, 0) == data.inputs(0, 0));
  data.inputs(1, 0) = std::nan("");
  CHECK_THROWS_AS(validate(data), InputError);
  Dataset empty;
  CHECK_THROWS_AS(validate(empty), DimensionError);
}
