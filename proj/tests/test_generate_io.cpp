#include "doctest.h"

#include <filesystem>
#include <random>
#include <sstream>

#include <Eigen/SVD>

#include "odeql/generate.hpp"
#include "odeql/io.hpp"

using namespace odeql;

namespace {

double svd_condition(const DenseMatrix& m) {
  const auto s = Eigen::JacobiSVD<DenseMatrix>(m).singularValues();
  return s[0] / s[s.size() - 1];
}

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("odeql_test_" + name);
}

}  // namespace

TEST_CASE("dense generation hits the requested conditioning") {
  for (double kappa : {1.0, 3.0, 10.0}) {
    for (EigenProfile prof : {EigenProfile::kUniformHalfDisk, EigenProfile::kBoundary, EigenProfile::kPureImaginary}) {
      GenSpec spec;
      spec.n = 8;
      spec.kappa = kappa;
      spec.profile = prof;
      spec.seed = 4;
      const Instance inst = generate(spec);
      CHECK(svd_condition(inst.v()) == doctest::Approx(kappa).epsilon(1e-9));
      CHECK(inst.kappa_v() == doctest::Approx(kappa).epsilon(1e-9));
      CHECK(inst.norm_a() <= 1.0 + 1e-9);
      CHECK((inst.v() * inst.v_inv() - DenseMatrix::Identity(8, 8)).norm() <= 1e-12 * kappa);
      for (Eigen::Index i = 0; i < 8; ++i) {
        CHECK(inst.eigenvalues()[i].real() <= 0.0);
        if (prof == EigenProfile::kPureImaginary) CHECK(inst.eigenvalues()[i].real() == 0.0);
      }
      CHECK(inst.x_in().norm() == doctest::Approx(1.0));
      CHECK(inst.b().norm() == doctest::Approx(1.0));
    }
  }
  SUBCASE("normal anti-Hermitian generator") {
    GenSpec spec;
    spec.n = 5;
    spec.profile = EigenProfile::kPureImaginary;
    const Instance inst = generate(spec);
    CHECK((inst.a() + inst.a().adjoint()).norm() <= 1e-13);
  }
  SUBCASE("scalar problem") {
    const Instance inst = generate(parse_gen_spec("N=1,lambda=-1,b=zero"));
    CHECK(std::abs(inst.a()(0, 0) - Complex(-1.0, 0.0)) <= 1e-15);
    CHECK(inst.kappa_v() == 1.0);
    CHECK(inst.b().isZero(0.0));
  }
}

TEST_CASE("generation is deterministic in the seed") {
  const GenSpec spec = parse_gen_spec("N=6,kappa=3,seed=12");
  CHECK(generate(spec).a() == generate(spec).a());
  GenSpec other = spec;
  other.seed = 13;
  CHECK(generate(spec).a() != generate(other).a());
}

TEST_CASE("sparse generation") {
  for (int s : {1, 2, 3}) {
    const Instance inst = generate(parse_gen_spec("N=16,s=" + std::to_string(s) + ",seed=3"));
    const DenseMatrix& a = inst.a();
    for (Eigen::Index r = 0; r < 16; ++r) {
      CHECK((a.row(r).array() != Complex(0.0, 0.0)).count() <= s);
      CHECK((a.col(r).array() != Complex(0.0, 0.0)).count() <= s);
    }
    CHECK(inst.norm_a() <= 1.0 + 1e-9);
    for (Eigen::Index i = 0; i < 16; ++i) CHECK(inst.eigenvalues()[i].real() <= 0.0);
    CHECK(inst.kappa_v() >= 1.0 - 1e-12);
  }
  CHECK_THROWS_AS(parse_gen_spec("N=8,s=3,kappa=3").validate(), ParameterError);
  CHECK_THROWS_AS(generate(parse_gen_spec("N=1,kappa=3")), ParameterError);
}

TEST_CASE("spec parsing") {
  const GenSpec s = parse_gen_spec("N=3,kappa=2.5,profile=boundary,b=zero,seed=9,normalize=0");
  CHECK(s.n == 3);
  CHECK(s.kappa == 2.5);
  CHECK(s.profile == EigenProfile::kBoundary);
  CHECK(s.b_mode == BMode::kZero);
  CHECK(s.seed == 9);
  CHECK_FALSE(s.normalize);
  CHECK(parse_gen_spec("N=2", 77).seed == 77);
  CHECK(parse_gen_spec(to_string(s)).kappa == 2.5);
  CHECK(parse_gen_spec(to_string(s)).profile == EigenProfile::kBoundary);
  CHECK_THROWS(parse_gen_spec("N=2,flavor=3"));
  CHECK_THROWS(parse_gen_spec("N=zero"));
  CHECK(parse_complex("-1") == Complex(-1.0, 0.0));
  CHECK(parse_complex("0.5i") == Complex(0.0, 0.5));
  CHECK(parse_complex("-1+0.5i") == Complex(-1.0, 0.5));
  CHECK(parse_complex("-1-2e-3i") == Complex(-1.0, -2e-3));
  CHECK_THROWS(parse_complex("1+"));
  CHECK(parse_profile(to_string(EigenProfile::kPureImaginary)) == EigenProfile::kPureImaginary);
}

TEST_CASE("random unitary") {
  std::mt19937_64 rng(1);
  const DenseMatrix u = random_unitary(6, rng);
  CHECK((u.adjoint() * u - DenseMatrix::Identity(6, 6)).norm() <= 1e-13);
}

TEST_CASE("instance from a given matrix") {
  DenseMatrix a(2, 2);
  a << -0.5, 0.3, 0.0, -0.2;
  const Instance inst = instance_from_matrix(a, Vector::Ones(2), Vector::Ones(2));
  CHECK(inst.a() == a);
  CHECK(inst.kappa_v() == doctest::Approx(svd_condition(inst.v())));
  DenseMatrix jordan(2, 2);
  jordan << -0.5, 1.0, 0.0, -0.5;
  CHECK_THROWS(instance_from_matrix(jordan, Vector::Ones(2), Vector::Ones(2)));
  DenseMatrix unstable(1, 1);
  unstable << 0.3;
  CHECK_THROWS(instance_from_matrix(unstable, Vector::Ones(1), Vector::Ones(1)));
}

TEST_CASE("Matrix Market round trip is bit exact") {
  std::mt19937_64 rng(6);
  DenseMatrix d(5, 5);
  for (Eigen::Index c = 0; c < 5; ++c) d.col(c) = random_complex_normal(5, rng) * 1e-3;
  d(1, 2) = 0.0;
  d(4, 0) = Complex(1.0 / 3.0, -std::numeric_limits<double>::min());
  const SparseMatrix m = d.sparseView();
  std::stringstream ss;
  write_matrix_market(ss, m);
  const SparseMatrix back = read_matrix_market(ss);
  CHECK(DenseMatrix(back) == DenseMatrix(m));
  CHECK(back.nonZeros() == m.nonZeros());

  const auto path = temp_file("rt.mtx");
  write_matrix_market(path.string(), m);
  CHECK(DenseMatrix(read_matrix_market(path.string())) == DenseMatrix(m));
  std::filesystem::remove(path);
}

TEST_CASE("Matrix Market symmetry and field variants") {
  SUBCASE("real symmetric expands the lower triangle") {
    std::istringstream in("%%MatrixMarket matrix coordinate real symmetric\n% c\n3 3 2\n1 1 2.0\n3 1 -1.5\n");
    const DenseMatrix m = read_matrix_market(in);
    CHECK(m(0, 0) == Complex(2.0, 0.0));
    CHECK(m(2, 0) == Complex(-1.5, 0.0));
    CHECK(m(0, 2) == Complex(-1.5, 0.0));
  }
  SUBCASE("hermitian conjugates the mirror") {
    std::istringstream in("%%MatrixMarket matrix coordinate complex hermitian\n2 2 1\n2 1 1.0 2.0\n");
    const DenseMatrix m = read_matrix_market(in);
    CHECK(m(1, 0) == Complex(1.0, 2.0));
    CHECK(m(0, 1) == Complex(1.0, -2.0));
  }
  SUBCASE("skew-symmetric negates the mirror") {
    std::istringstream in("%%MatrixMarket matrix coordinate integer skew-symmetric\n2 2 1\n2 1 3\n");
    const DenseMatrix m = read_matrix_market(in);
    CHECK(m(0, 1) == Complex(-3.0, 0.0));
  }
  SUBCASE("pattern entries are ones and duplicates add") {
    std::istringstream in("%%MatrixMarket matrix coordinate pattern general\n2 2 3\n1 2\n1 2\n2 2\n");
    const DenseMatrix m = read_matrix_market(in);
    CHECK(m(0, 1) == Complex(2.0, 0.0));
    CHECK(m(1, 1) == Complex(1.0, 0.0));
  }
  SUBCASE("malformed input") {
    std::istringstream arr("%%MatrixMarket matrix array real general\n2 2\n1\n2\n3\n4\n");
    CHECK_THROWS(read_matrix_market(arr));
    std::istringstream range("%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1.0\n");
    CHECK_THROWS(read_matrix_market(range));
    std::istringstream shortf("%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1.0\n");
    CHECK_THROWS(read_matrix_market(shortf));
  }
}

TEST_CASE("vector round trip is bit exact") {
  std::mt19937_64 rng(7);
  Vector v = random_complex_normal(9, rng);
  v[3] = Complex(0.1, -1e-300);
  std::stringstream ss;
  write_vector(ss, v);
  CHECK(read_vector(ss) == v);
  std::istringstream commented("# header\n1 2\n\n3 -4 # trailing\n");
  const Vector c = read_vector(commented);
  REQUIRE(c.size() == 2);
  CHECK(c[1] == Complex(3.0, -4.0));
}

TEST_CASE("instance JSON round trip") {
  const Instance inst = generate(parse_gen_spec("N=4,kappa=3,seed=2"));
  const nlohmann::json j = instance_to_json(inst);
  CHECK(j["schema"] == 1);
  CHECK(j["kind"] == "instance");
  const Instance back = instance_from_json(j);
  CHECK(back.a() == inst.a());
  CHECK(back.v() == inst.v());
  CHECK(back.b() == inst.b());
  CHECK(back.x_in() == inst.x_in());
  CHECK(back.kappa_v() == inst.kappa_v());

  const auto path = temp_file("inst.json");
  write_json(path.string(), j);
  CHECK(instance_from_json(read_json(path.string())).a() == inst.a());
  std::filesystem::remove(path);

  nlohmann::json broken = j;
  broken["kappa_V"] = 100.0;
  CHECK_THROWS(instance_from_json(broken));
}
