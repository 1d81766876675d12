#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <memory>
#include <numeric>

#include "apts/baselines.hpp"
#include "apts/data.hpp"
#include "apts/network.hpp"

using namespace apts;

namespace {

const std::filesystem::path kData = APTS_TEST_DATA_DIR;

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("apts_test_" + name);
}

void write_bytes(const std::filesystem::path& p, const std::vector<unsigned char>& bytes) {
  std::ofstream out(p, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

std::vector<unsigned char> read_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Full-batch Adam on a network; returns final training accuracy.
double train_accuracy(const std::string& sizes, Activation hidden, std::shared_ptr<const Dataset> ds, int steps) {
  const auto net = std::make_shared<const Mlp>(MlpSpec::parse(sizes, hidden, Activation::softmax_xent));
  const NetworkObjective obj(net, ds);
  auto theta = net->init_parameters(0);
  AdamOptimizer adam(theta.size(), 0.01);
  for (int k = 0; k < steps; ++k) theta += adam.step(obj.evaluate(theta, BatchRef::full()).grad);
  return obj.loss_and_accuracy(theta, BatchRef::full()).second;
}

}  // namespace

TEST_CASE("noise-free moons lie on the unit half circles") {
  const auto ds = two_moons(100, 0.0, 1);
  CHECK(ds.size() == 100);
  CHECK(std::count(ds.labels.begin(), ds.labels.end(), 0) == 50);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const double x = ds.inputs(static_cast<Eigen::Index>(i), 0);
    const double y = ds.inputs(static_cast<Eigen::Index>(i), 1);
    const double r = ds.labels[i] == 0 ? std::hypot(x, y) : std::hypot(x - 1.0, y - 0.5);
    CHECK(std::abs(r - 1.0) < 1e-12);
    if (ds.labels[i] == 0) CHECK(y >= -1e-12);
    else CHECK(y <= 0.5 + 1e-12);
  }
}

TEST_CASE("two moons is seeded and validated") {
  const auto a = two_moons(200, 0.1, 7);
  const auto b = two_moons(200, 0.1, 7);
  CHECK(a.inputs == b.inputs);
  CHECK(a.labels == b.labels);
  CHECK_FALSE(a.inputs == two_moons(200, 0.1, 8).inputs);
  CHECK_THROWS_AS(two_moons(101, 0.1, 0), DomainError);
  CHECK_THROWS_AS(two_moons(0, 0.1, 0), DomainError);
  CHECK_THROWS_AS(two_moons(100, -0.1, 0), DomainError);
}

TEST_CASE("linear models cannot separate the moons but an MLP can") {
  const auto ds = std::make_shared<const Dataset>(two_moons(1000, 0.1, 0));
  CHECK(train_accuracy("2-2-2", Activation::identity, ds, 1500) < 0.90);
  CHECK(train_accuracy("2-16-16-2", Activation::tanh, ds, 1500) >= 0.95);
}

TEST_CASE("IDX fixture") {
  const auto ds = load_idx(kData / "tiny-images-idx3-ubyte", kData / "tiny-labels-idx1-ubyte");
  CHECK(ds.inputs.rows() == 4);
  CHECK(ds.inputs.cols() == 784);
  CHECK(ds.labels == std::vector<int>{3, 1, 4, 1});
  CHECK(ds.classes == 10);
  // Pixel sum from a separate byte-level reader of the same files.
  CHECK(std::abs(ds.inputs.sum() - 1568.6274509803923) < 1e-9);
  CHECK(ds.inputs.minCoeff() >= 0.0);
  CHECK(ds.inputs.maxCoeff() <= 1.0);
}

TEST_CASE("MNIST subset") {
  const auto ds = load_idx(kData / "mnist1k-images-idx3-ubyte", kData / "mnist1k-labels-idx1-ubyte");
  CHECK(ds.size() == 1000);
  for (int c = 0; c < 10; ++c) CHECK(std::count(ds.labels.begin(), ds.labels.end(), c) == 100);
}

TEST_CASE("malformed IDX files") {
  auto img = read_bytes(kData / "tiny-images-idx3-ubyte");
  const auto lab = kData / "tiny-labels-idx1-ubyte";

  auto bad = img;
  bad[3] = 0x01;
  write_bytes(temp_path("magic"), bad);
  CHECK_THROWS_AS(load_idx(temp_path("magic"), lab), FormatError);

  bad = img;
  bad.resize(16 + 784 * 3 + 10);
  write_bytes(temp_path("trunc"), bad);
  try {
    load_idx(temp_path("trunc"), lab);
    FAIL("expected a format error");
  } catch (const FormatError& e) {
    CHECK(std::string(e.what()).find("byte offset " + std::to_string(bad.size())) != std::string::npos);
  }

  bad = img;
  bad.resize(10);
  write_bytes(temp_path("header"), bad);
  CHECK_THROWS_AS(load_idx(temp_path("header"), lab), FormatError);

  CHECK_THROWS_AS(load_idx(temp_path("missing-file"), lab), FormatError);
  for (const char* n : {"magic", "trunc", "header"}) std::filesystem::remove(temp_path(n));
}

TEST_CASE("IDX round trip") {
  const auto ds = load_idx(kData / "tiny-images-idx3-ubyte", kData / "tiny-labels-idx1-ubyte");
  write_idx(ds, 28, 28, temp_path("rt-img"), temp_path("rt-lab"));
  const auto back = load_idx(temp_path("rt-img"), temp_path("rt-lab"));
  CHECK(back.inputs == ds.inputs);
  CHECK(back.labels == ds.labels);
  CHECK(read_bytes(temp_path("rt-img")) == read_bytes(kData / "tiny-images-idx3-ubyte"));
  CHECK(read_bytes(temp_path("rt-lab")) == read_bytes(kData / "tiny-labels-idx1-ubyte"));
  CHECK_THROWS_AS(write_idx(ds, 27, 28, temp_path("rt-img"), temp_path("rt-lab")), DimensionError);
  std::filesystem::remove(temp_path("rt-img"));
  std::filesystem::remove(temp_path("rt-lab"));
}

TEST_CASE("batch schedules") {
  const auto full = batches(10, BatchSchedule{10, 0, BatchMode::full}, 0);
  REQUIRE(full.size() == 1);
  CHECK(full[0].is_full());

  const auto seq = batches(10, BatchSchedule{3, 0, BatchMode::sequential}, 4);
  REQUIRE(seq.size() == 4);
  CHECK(seq[0].indices() == std::vector<std::size_t>{0, 1, 2});
  CHECK(seq[3].indices() == std::vector<std::size_t>{9});

  const BatchSchedule shuffled{4, 42, BatchMode::shuffled};
  CHECK(batches(50, shuffled, 3) == batches(50, shuffled, 3));
  CHECK_FALSE(batches(50, shuffled, 3) == batches(50, shuffled, 4));

  CHECK_THROWS_AS(batches(10, BatchSchedule{0, 0, BatchMode::sequential}, 0), DomainError);
  CHECK_THROWS_AS(batches(10, BatchSchedule{11, 0, BatchMode::shuffled}, 0), DomainError);
}

TEST_CASE("every epoch covers each sample once") {
  for (std::size_t m : {1, 7, 64, 101}) {
    for (std::size_t bs : {1, 3, 10}) {
      if (bs > m) continue;
      for (auto mode : {BatchMode::sequential, BatchMode::shuffled}) {
        std::vector<std::size_t> seen;
        for (const auto& b : batches(m, BatchSchedule{bs, 5, mode}, 2)) {
          seen.insert(seen.end(), b.indices().begin(), b.indices().end());
        }
        std::sort(seen.begin(), seen.end());
        std::vector<std::size_t> expect(m);
        std::iota(expect.begin(), expect.end(), std::size_t{0});
        CHECK(seen == expect);
      }
    }
  }
}

TEST_CASE("subsets and splits") {
  const auto ds = two_moons(20, 0.1, 2);
  const auto h = head(ds, 5);
  CHECK(h.size() == 5);
  CHECK(h.labels == std::vector<int>(ds.labels.begin(), ds.labels.begin() + 5));
  CHECK_THROWS_AS(head(ds, 0), DomainError);
  CHECK_THROWS_AS(head(ds, 21), DomainError);
  const auto [train, val] = split_tail(ds, 0.25);
  CHECK(train.size() == 15);
  CHECK(val.size() == 5);
  CHECK(val.inputs.row(0) == ds.inputs.row(15));
  CHECK_THROWS_AS(split_tail(ds, 0.0), DomainError);

  Dataset broken = ds;
  broken.labels.pop_back();
  CHECK_THROWS_AS(broken.validate(), DimensionError);
  broken = ds;
  broken.labels[0] = 5;
  CHECK_THROWS_AS(broken.validate(), DomainError);
}
