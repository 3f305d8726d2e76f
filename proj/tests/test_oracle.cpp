//
// Copyright 2026 The pacest Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#include "pacest/oracle.hpp"

#include <catch2/catch_amalgamated.hpp>
#include <cstdio>
#include <fstream>
#include <string>

#include "pacest/noise.hpp"

namespace po = pacest::oracle;

namespace {

std::string write_temp_csv(const std::string& name, const std::string& body) {
  const std::string path = std::string(PACEST_TEST_TMPDIR) + "/" + name;
  std::ofstream out(path);
  out << body;
  return path;
}

po::MechanismSpec mean_spec(Eigen::Index d, double r) {
  po::MechanismSpec spec;
  spec.kind = po::MechanismKind::kBuiltinMean;
  spec.output_dim = d;
  spec.output_radius = r;
  return spec;
}

}  // namespace

TEST_CASE("csv pool parsing") {
  const auto good = write_temp_csv("good.csv", "1,2\n3,4\n-0.5,6e-1\n");
  const auto pool = po::load_csv_pool(good, false);
  REQUIRE(pool.rows() == 3);
  REQUIRE(pool.cols() == 2);
  CHECK(pool(2, 1) == 0.6);

  const auto with_header = write_temp_csv("hdr.csv", "a,b\n1,2\n");
  CHECK(po::load_csv_pool(with_header, true).rows() == 1);
  CHECK_THROWS_AS(po::load_csv_pool(with_header, false), pacest::Error);

  const auto ragged = write_temp_csv("ragged.csv", "1,2\n3\n");
  CHECK_THROWS_AS(po::load_csv_pool(ragged, false), pacest::Error);

  const auto nan = write_temp_csv("nan.csv", "1,nan\n");
  CHECK_THROWS_AS(po::load_csv_pool(nan, false), pacest::Error);

  CHECK_THROWS_AS(po::load_csv_pool("/no/such/file.csv", false), pacest::Error);

  try {
    po::load_csv_pool(ragged, false);
    FAIL("expected throw");
  } catch (const pacest::Error& e) {
    CHECK(e.code() == pacest::ErrorCode::kInputPool);
  }
}

TEST_CASE("pool sampling schemes") {
  Eigen::MatrixXd pool(10, 2);
  for (int i = 0; i < 10; ++i) {
    pool(i, 0) = i;
    pool(i, 1) = -i;
  }

  po::PoolSampler all(pool, po::PoissonScheme{1.0});
  CHECK(all.generate(123).rows() == 10);

  po::PoolSampler none(pool, po::WithoutReplacementScheme{0});
  CHECK(none.generate(5).rows() == 0);

  po::PoolSampler three(pool, po::WithoutReplacementScheme{3});
  const auto d3 = three.generate(7);
  REQUIRE(d3.rows() == 3);

  // same seed, byte-identical output
  po::PoolSampler half(pool, po::PoissonScheme{0.5});
  const auto a = half.generate(99);
  const auto b = half.generate(99);
  REQUIRE(a.rows() == b.rows());
  CHECK(a == b);

  CHECK_THROWS_AS(po::PoolSampler(pool, po::PoissonScheme{0.0}), pacest::Error);
  CHECK_THROWS_AS(po::PoolSampler(pool, po::PoissonScheme{1.5}), pacest::Error);
  CHECK_THROWS_AS(po::PoolSampler(pool, po::WithoutReplacementScheme{11}),
                  pacest::Error);
}

TEST_CASE("poisson cardinality concentration", "[slow]") {
  Eigen::MatrixXd pool = Eigen::MatrixXd::Zero(60000, 1);
  po::PoolSampler sampler(pool, po::PoissonScheme{0.5});
  double total = 0.0;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    total += static_cast<double>(
        sampler.generate(pacest::derive_stream_seed(4242, seed,
                                                    pacest::SeedRole::kData1))
            .rows());
  }
  const double mean_cardinality = total / 1000.0;
  const double sigma = std::sqrt(60000.0 * 0.25);  // ~122.5
  CHECK(std::abs(mean_cardinality - 30000.0) <= 3.0 * sigma);
}

TEST_CASE("builtin mechanisms") {
  auto mech = po::BuiltinMechanism(mean_spec(2, 10.0));

  Eigen::MatrixXd rows(2, 2);
  rows << 0, 0, 2, 2;
  const auto mean = mech.evaluate(rows, 0);
  CHECK(mean.values[0] == 1.0);
  CHECK(mean.values[1] == 1.0);

  Eigen::MatrixXd four(4, 2);
  four << 1, 0, 0, 1, 1, 1, 0, 0;
  const auto m4 = mech.evaluate(four, 0);
  CHECK(m4.values[0] == 0.5);
  CHECK(m4.values[1] == 0.5);

  Eigen::MatrixXd empty(0, 2);
  CHECK_THROWS_AS(mech.evaluate(empty, 0), pacest::Error);

  po::MechanismSpec sum_spec = mean_spec(2, 10.0);
  sum_spec.kind = po::MechanismKind::kBuiltinSum;
  po::BuiltinMechanism sum(sum_spec);
  const auto zero = sum.evaluate(empty, 0);
  CHECK(zero.values == Eigen::VectorXd::Zero(2));

  po::MechanismSpec id_spec = mean_spec(2, 10.0);
  id_spec.kind = po::MechanismKind::kBuiltinIdentity;
  po::BuiltinMechanism identity(id_spec);
  Eigen::MatrixXd one(1, 2);
  one << 3, 4;
  CHECK(identity.evaluate(one, 0).values == one.row(0).transpose());
  CHECK_THROWS_AS(identity.evaluate(rows, 0), pacest::Error);
}

TEST_CASE("builtin-mean is bitwise symmetric under row permutation") {
  pacest::Rng rng(31337);
  auto mech = po::BuiltinMechanism(mean_spec(3, 1e9));
  for (int rep = 0; rep < 50; ++rep) {
    Eigen::MatrixXd data(17, 3);
    for (Eigen::Index i = 0; i < data.size(); ++i) {
      data.data()[i] = rng.normal() * std::pow(10.0, rng.uniform_index(7));
    }
    Eigen::MatrixXd shuffled = data;
    const auto perm = rng.subset_without_replacement(17, 17);
    for (Eigen::Index i = 0; i < 17; ++i) {
      shuffled.row(i) = data.row(static_cast<Eigen::Index>(perm[i]));
    }
    const auto a = mech.evaluate(data, 0).values;
    const auto b = mech.evaluate(shuffled, 0).values;
    REQUIRE(std::memcmp(a.data(), b.data(), sizeof(double) * 3) == 0);
  }
}

TEST_CASE("radius and dimension contracts") {
  po::MechanismSpec spec = mean_spec(2, 1.0);
  auto loud = po::CallableMechanism(
      spec, [](const po::Dataset&, std::uint64_t seed) {
        Eigen::VectorXd v(2);
        v << 1.0, seed % 7 == 0 ? 0.5 : 0.0;  // norm > 1 on some seeds
        return v;
      });
  int violations = 0;
  for (std::uint64_t seed = 0; seed < 10000; ++seed) {
    try {
      const auto out = loud.evaluate(Eigen::MatrixXd::Zero(1, 2), seed);
      REQUIRE(out.values.norm() <= 1.0);
    } catch (const pacest::Error& e) {
      REQUIRE(e.code() == pacest::ErrorCode::kContractRadius);
      ++violations;
    }
  }
  CHECK(violations == 10000 / 7 + 1);

  auto skinny = po::CallableMechanism(
      spec, [](const po::Dataset&, std::uint64_t) {
        return Eigen::VectorXd::Zero(3);
      });
  try {
    skinny.evaluate(Eigen::MatrixXd::Zero(1, 2), 0);
    FAIL("expected dimension error");
  } catch (const pacest::Error& e) {
    CHECK(e.code() == pacest::ErrorCode::kContractDim);
  }
}

TEST_CASE("parametric gaussian generator") {
  po::ParametricGaussianSpec spec;
  spec.mean = Eigen::Vector2d(1.0, -1.0);
  spec.covariance = Eigen::Matrix2d{{4.0, 0.0}, {0.0, 1.0}};
  spec.rows = 50;
  po::ParametricGaussian gen(spec);

  const auto d1 = gen.generate(11);
  REQUIRE(d1.rows() == 50);
  REQUIRE(d1.cols() == 2);
  CHECK(d1 == gen.generate(11));
  CHECK(d1 != gen.generate(12));

  // moments over many rows
  po::ParametricGaussianSpec big = spec;
  big.rows = 100000;
  po::ParametricGaussian bgen(big);
  const auto sample = bgen.generate(3);
  const Eigen::VectorXd mean = sample.colwise().mean();
  CHECK(std::abs(mean[0] - 1.0) < 0.05);
  CHECK(std::abs(mean[1] + 1.0) < 0.05);
  const Eigen::MatrixXd centered = sample.rowwise() - mean.transpose();
  const double var0 = centered.col(0).squaredNorm() / 100000.0;
  CHECK(var0 == Catch::Approx(4.0).epsilon(0.05));

  po::ParametricGaussianSpec bad = spec;
  bad.covariance(0, 1) = 0.5;  // asymmetric
  CHECK_THROWS_AS(po::ParametricGaussian(bad), pacest::Error);
}

TEST_CASE("noise sampling") {
  using pacest::NoiseSpec;
  const auto zero = pacest::isotropic_noise_spec(3, 0.0);
  pacest::Rng rng(5);
  CHECK(pacest::sample_noise(zero, rng) == Eigen::VectorXd::Zero(3));

  const auto unit = pacest::isotropic_noise_spec(2, 1.0);
  Eigen::Vector2d acc = Eigen::Vector2d::Zero();
  for (int i = 0; i < 100000; ++i) acc += pacest::sample_noise(unit, rng);
  CHECK(std::abs(acc[0] / 100000.0) < 0.02);
  CHECK(std::abs(acc[1] / 100000.0) < 0.02);

  NoiseSpec aniso;
  aniso.dim = 2;
  aniso.law = pacest::AnisotropicNoise{Eigen::Matrix2d::Identity(),
                                       Eigen::Vector2d(4.0, 1.0)};
  Eigen::Vector2d sq = Eigen::Vector2d::Zero();
  for (int i = 0; i < 100000; ++i) {
    sq += pacest::sample_noise(aniso, rng).cwiseAbs2();
  }
  CHECK(sq[0] / 100000.0 == Catch::Approx(4.0).epsilon(0.05));
  CHECK(sq[1] / 100000.0 == Catch::Approx(1.0).epsilon(0.05));

  NoiseSpec bad = aniso;
  std::get<pacest::AnisotropicNoise>(bad.law).variances[0] = -1.0;
  CHECK_THROWS_AS(pacest::sample_noise(bad, rng), pacest::Error);

  NoiseSpec skew = aniso;
  std::get<pacest::AnisotropicNoise>(skew.law).basis(0, 1) = 0.3;
  CHECK_THROWS_AS(pacest::sample_noise(skew, rng), pacest::Error);
}

TEST_CASE("subprocess protocol round trip") {
  const std::string script =
      std::string(PACEST_TEST_SRCDIR) + "/fixtures/toy_oracle.py";
  po::SubprocessGeneratorSpec gspec{{"python3", script}};
  po::SubprocessGenerator gen(gspec, 2);
  const auto rows = gen.generate(6);  // seed % 4 == 2
  REQUIRE(rows.rows() == 2);
  CHECK(rows(0, 0) == 0.2);
  CHECK(rows(1, 1) == 0.2);
  CHECK(gen.generate(6) == gen.generate(10));  // 6 % 4 == 10 % 4

  po::MechanismSpec mspec;
  mspec.kind = po::MechanismKind::kSubprocess;
  mspec.randomized = true;
  mspec.seed_space_size = 3;
  mspec.output_dim = 2;
  mspec.output_radius = 10.0;
  mspec.command = {"python3", script};
  po::SubprocessMechanism mech(mspec, 2);
  Eigen::MatrixXd data(2, 2);
  data << 0, 0, 1, 1;
  const auto y0 = mech.evaluate(data, 0);
  CHECK(y0.values[0] == 0.5);
  const auto y1 = mech.evaluate(data, 1);
  CHECK(y1.values[0] == 0.625);

  // full round-trip precision through the wire
  Eigen::MatrixXd precise(1, 2);
  precise << 0.1 + 0.2, 1.0 / 3.0;
  const auto echoed = mech.evaluate(precise, 0);
  CHECK(echoed.values[0] == precise(0, 0));
  CHECK(echoed.values[1] == precise(0, 1));
}

TEST_CASE("subprocess failure paths") {
  const std::string script =
      std::string(PACEST_TEST_SRCDIR) + "/fixtures/toy_oracle.py";

  // child that dies immediately
  po::SubprocessGeneratorSpec dead{{"python3", "-c", "import sys; sys.exit(2)"}};
  po::SubprocessGenerator dgen(dead, 1);
  try {
    dgen.generate(0);
    FAIL("expected oracle error");
  } catch (const pacest::Error& e) {
    CHECK(e.code() == pacest::ErrorCode::kOracleSubprocess);
  }

  // child that prints garbage
  po::SubprocessGeneratorSpec garbage{
      {"python3", "-c",
       "import sys\nfor _ in sys.stdin: print('not json', flush=True)"}};
  po::SubprocessGenerator ggen(garbage, 1);
  CHECK_THROWS_AS(ggen.generate(0), pacest::Error);

  // stderr is captured into the message
  po::SubprocessGeneratorSpec noisy{
      {"python3", "-c",
       "import sys; print('boom details', file=sys.stderr); sys.exit(1)"}};
  po::SubprocessGenerator ngen(noisy, 1);
  try {
    ngen.generate(0);
    FAIL("expected oracle error");
  } catch (const pacest::Error& e) {
    CHECK(std::string(e.what()).find("boom details") != std::string::npos);
  }
}
