#include <doctest.h>

#include <array>
#include <cmath>
#include <sstream>

#include "pnet/errors.hpp"
#include "pnet/network.hpp"

using namespace pnet;

namespace {

Network single_neuron(double w, double bias, double p, double lambda) {
  Network net;
  net.input_dim = 1;
  net.lambda = lambda;
  Layer layer;
  layer.weights.resize(1, 2);
  layer.weights << bias, w;
  layer.p = Eigen::VectorXd::Constant(1, p);
  net.layers.push_back(layer);
  return net;
}

}  // namespace

TEST_CASE("init_network layout for ex1") {
  const std::array sizes{1, 5, 3, 1};
  const Network net = init_network(sizes, Task::regression, 1.0, 2.0, 7);
  REQUIRE(net.layers.size() == 3);
  CHECK(net.layers[0].weights.rows() == 5);
  CHECK(net.layers[0].weights.cols() == 2);
  CHECK(net.layers[1].weights.rows() == 3);
  CHECK(net.layers[1].weights.cols() == 6);
  CHECK(net.layers[2].weights.rows() == 1);
  CHECK(net.layers[2].weights.cols() == 4);
  CHECK(net.p_count() == 9);
  for (const Layer& layer : net.layers) CHECK((layer.p.array() == 2.0).all());
  CHECK(net.layer_sizes() == std::vector<int>{1, 5, 3, 1});
}

TEST_CASE("init_network is deterministic per seed") {
  const std::array sizes{1, 5, 3, 1};
  const Network a = init_network(sizes, Task::regression, 1.0, 2.0, 7);
  const Network b = init_network(sizes, Task::regression, 1.0, 2.0, 7);
  const Network c = init_network(sizes, Task::regression, 1.0, 2.0, 8);
  for (std::size_t k = 0; k < a.layers.size(); ++k) CHECK(a.layers[k].weights == b.layers[k].weights);
  CHECK(a.layers[0].weights != c.layers[0].weights);
}

TEST_CASE("init_network classification head") {
  const std::array sizes{60, 30, 15, 5};
  const Network net = init_network(sizes, Task::classification, 1.0, 5.0, 1);
  CHECK(net.layers[0].p.size() == 30);
  CHECK(net.layers[1].p.size() == 15);
  CHECK(net.layers[2].p.size() == 0);
  CHECK(net.layers[2].activation == Activation::softmax);
  CHECK(net.p_count() == 45);
}

TEST_CASE("init_network output p override") {
  const std::array sizes{1, 10, 5, 3, 1};
  const Network net = init_network(sizes, Task::regression, 1e-10, 100.0, 1, 2.0);
  CHECK((net.layers[0].p.array() == 100.0).all());
  CHECK((net.layers[2].p.array() == 100.0).all());
  CHECK(net.layers[3].p(0) == 2.0);
}

TEST_CASE("forward examples") {
  const Network net = single_neuron(1.0, 0.0, 2.0, 1.0);
  CHECK(predict(net, Eigen::VectorXd::Constant(1, 3.0))(0) == doctest::Approx(1.0).epsilon(1e-15));

  const std::array sizes{3, 4, 2};
  Network zero = init_network(sizes, Task::regression, 1.0, 3.0, 1);
  for (Layer& layer : zero.layers) layer.weights.setZero();
  const ForwardTrace trace = forward(zero, Eigen::Vector3d(1.0, -2.0, 5.0));
  for (const auto& a : trace.activations) CHECK(a.isZero(0.0));
  for (std::size_t k = 1; k < trace.outputs.size(); ++k) CHECK(trace.outputs[k].isZero(0.0));

  CHECK(softmax(Eigen::VectorXd::Constant(5, 3.7)).isApprox(Eigen::VectorXd::Constant(5, 0.2), 1e-15));
}

TEST_CASE("forward trace consistency") {
  const std::array sizes{2, 4, 3, 2};
  const Network net = init_network(sizes, Task::regression, 0.5, 3.5, 11);
  const Eigen::Vector2d x(0.3, -1.2);
  const ForwardTrace trace = forward(net, x);
  REQUIRE(trace.activations.size() == 3);
  REQUIRE(trace.outputs.size() == 4);
  CHECK(trace.outputs[0] == x);
  for (std::size_t k = 0; k < net.layers.size(); ++k) {
    const Layer& layer = net.layers[k];
    Eigen::VectorXd a = layer.weights.col(0) + layer.weights.rightCols(layer.fan_in()) * trace.outputs[k];
    CHECK(a == trace.activations[k]);
    for (Eigen::Index j = 0; j < layer.size(); ++j) {
      CHECK(evaluate(trace.activations[k](j), net.activation_params(k, j)) == trace.outputs[k + 1](j));
    }
  }
  ForwardTrace reused;
  forward(net, x, reused);
  forward(net, x, reused);
  CHECK(reused.output() == trace.output());
}

TEST_CASE("forward rejects bad input") {
  const std::array sizes{2, 3, 1};
  const Network net = init_network(sizes, Task::regression, 1.0, 3.0, 1);
  CHECK_THROWS_AS(forward(net, Eigen::VectorXd::Zero(3)), DimensionError);
  CHECK_THROWS_AS(forward(net, Eigen::Vector2d(1.0, std::nan(""))), InputError);
}

TEST_CASE("validate catches inconsistent networks") {
  const std::array sizes{2, 3, 1};
  Network net = init_network(sizes, Task::regression, 1.0, 3.0, 1);
  CHECK_NOTHROW(validate(net));
  Network bad_shape = net;
  bad_shape.layers[1].weights.resize(1, 3);
  CHECK_THROWS_AS(validate(bad_shape), DimensionError);
  Network bad_p = net;
  bad_p.layers[0].p(1) = 1.0;
  CHECK_THROWS_AS(validate(bad_p), InputError);
  Network hidden_softmax = net;
  hidden_softmax.layers[0].activation = Activation::softmax;
  hidden_softmax.layers[0].p.resize(0);
  CHECK_THROWS(validate(hidden_softmax));
}

TEST_CASE("model save/load round trip is exact") {
  const std::array sizes{4, 6, 3};
  for (Task head : {Task::regression, Task::classification}) {
    const Network net = init_network(sizes, head, 0.37, 4.2, 5);
    std::stringstream buffer;
    save_network(net, buffer);
    const Network back = load_network(buffer);
    CHECK(back.input_dim == net.input_dim);
    CHECK(back.head == net.head);
    CHECK(back.lambda == net.lambda);
    CHECK(back.inner_iters == net.inner_iters);
    REQUIRE(back.layers.size() == net.layers.size());
    for (std::size_t k = 0; k < net.layers.size(); ++k) {
      CHECK(back.layers[k].weights == net.layers[k].weights);
      CHECK(back.layers[k].p == net.layers[k].p);
      CHECK(back.layers[k].activation == net.layers[k].activation);
    }
  }
}

TEST_CASE("model load reports malformed input") {
  std::stringstream empty;
  CHECK_THROWS_AS(load_network(empty), ParseError);
  std::stringstream wrong_magic("not-a-model,1\n");
  CHECK_THROWS_AS(load_network(wrong_magic), ParseError);

  const std::array sizes{2, 2};
  std::stringstream buffer;
  save_network(init_network(sizes, Task::regression, 1.0, 3.0, 1), buffer);
  std::string text = buffer.str();
  text.replace(text.find("weights,1,"), 10, "weights,1,abc,");
  std::stringstream corrupted(text);
  try {
    load_network(corrupted);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() > 0);
  }
}

TEST_CASE("activation names") {
  CHECK(parse_activation("satlins") == Activation::satlins);
  CHECK(parse_activation("linear") == Activation::purelin);
  CHECK(parse_task("classification") == Task::classification);
  CHECK(to_string(Activation::tansig) == "tansig");
  CHECK_THROWS_AS(parse_activation("relu"), InputError);
  CHECK_THROWS_AS(parse_task("ranking"), InputError);
}
