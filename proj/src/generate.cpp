#include "odeql/generate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>

#include "odeql/taylor.hpp"

namespace odeql {

namespace {

constexpr double kShiftMargin = 1e-6;
constexpr int kSparseAttempts = 32;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& s, const std::string& key) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw ParameterError("gen spec: bad number for " + key + ": '" + s + "'");
  }
  if (used != s.size()) throw ParameterError("gen spec: bad number for " + key + ": '" + s + "'");
  return v;
}

Complex sample_eigenvalue(const GenSpec& spec, Eigen::Index idx, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  switch (spec.profile) {
    case EigenProfile::kUniformHalfDisk:
      return sample_half_disk<std::mt19937_64>(rng);
    case EigenProfile::kBoundary: {
      // Alternate between the left unit semicircle and the imaginary axis.
      if (idx % 2 == 0) {
        const double theta = std::numbers::pi / 2.0 + std::numbers::pi * unit(rng);
        Complex z = std::polar(1.0, theta);
        if (z.real() > 0.0) z = Complex(0.0, z.imag());
        return z;
      }
      return Complex(0.0, 2.0 * unit(rng) - 1.0);
    }
    case EigenProfile::kPureImaginary:
      return Complex(0.0, 2.0 * unit(rng) - 1.0);
    case EigenProfile::kScalar:
      return spec.lambda;
  }
  return spec.lambda;
}

Vector random_unit_vector(Eigen::Index n, std::mt19937_64& rng) {
  return normalized(random_complex_normal(n, rng));
}

Instance generate_dense(const GenSpec& spec, std::mt19937_64& rng) {
  const Eigen::Index n = spec.n;
  Eigen::VectorXd sigma(n);
  if (n == 1) {
    sigma[0] = 1.0;
  } else {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double lk = std::log(spec.kappa);
    sigma[0] = 1.0;
    sigma[n - 1] = spec.kappa;
    for (Eigen::Index i = 1; i + 1 < n; ++i) sigma[i] = std::exp(lk * unit(rng));
  }
  const DenseMatrix q1 = random_unitary(n, rng);
  const DenseMatrix q2 = random_unitary(n, rng);
  const Vector s = sigma.cast<Complex>();
  const DenseMatrix v = q1 * s.asDiagonal() * q2.adjoint();
  const DenseMatrix v_inv = q2 * s.cwiseInverse().asDiagonal() * q1.adjoint();

  Vector eig(n);
  for (Eigen::Index i = 0; i < n; ++i) eig[i] = sample_eigenvalue(spec, i, rng);
  if (spec.normalize) {
    const DenseMatrix a = v * eig.asDiagonal() * v_inv;
    const double na = a.isZero(0.0) ? 0.0 : Eigen::JacobiSVD<DenseMatrix>(a).singularValues()[0];
    if (na > 1.0) eig /= na;
  }
  const double kappa = n == 1 ? 1.0 : spec.kappa;
  const Vector x_in = random_unit_vector(n, rng);
  const Vector b = spec.b_mode == BMode::kZero ? Vector(Vector::Zero(n)) : random_unit_vector(n, rng);
  return Instance::from_eigendecomposition(v, v_inv, eig, b, x_in, kappa);
}

Instance generate_sparse(const GenSpec& spec, std::mt19937_64& rng) {
  const Eigen::Index n = spec.n;
  const int s = std::min<int>(*spec.sparsity, static_cast<int>(n));
  for (int attempt = 0; attempt < kSparseAttempts; ++attempt) {
    // Union of s permutation patterns, the first being the identity, so each
    // row and column holds at most s nonzeros.
    DenseMatrix a = DenseMatrix::Zero(n, n);
    std::vector<Eigen::Index> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    for (int q = 0; q < s; ++q) {
      if (q > 0) std::shuffle(perm.begin(), perm.end(), rng);
      const Vector vals = random_complex_normal(n, rng);
      for (Eigen::Index r = 0; r < n; ++r) a(r, perm[r]) += vals[r];
    }
    Eigen::ComplexEigenSolver<DenseMatrix> es(a);
    if (es.info() != Eigen::Success) continue;
    const double max_re = es.eigenvalues().real().maxCoeff();
    a.diagonal().array() -= (max_re + kShiftMargin);
    if (spec.normalize) {
      const double na = Eigen::JacobiSVD<DenseMatrix>(a).singularValues()[0];
      if (na > 1.0) a /= na;
    }
    const Vector x_in = random_unit_vector(n, rng);
    const Vector b =
        spec.b_mode == BMode::kZero ? Vector(Vector::Zero(n)) : random_unit_vector(n, rng);
    try {
      return instance_from_matrix(a, b, x_in);
    } catch (const Error&) {
      // Nearly defective draw; try again.
    }
  }
  throw DegeneracyError("generate: no well-conditioned sparse draw after " +
                        std::to_string(kSparseAttempts) + " attempts");
}

}  // namespace

void GenSpec::validate() const {
  if (n < 1) throw ParameterError("gen spec: N must be >= 1");
  if (!(kappa >= 1.0) || !std::isfinite(kappa)) throw ParameterError("gen spec: kappa must be >= 1");
  if (n == 1 && kappa != 1.0) throw ParameterError("gen spec: N = 1 forces kappa = 1");
  if (sparsity) {
    if (*sparsity < 1) throw ParameterError("gen spec: s must be >= 1");
    if (kappa != 1.0) {
      throw ParameterError(
          "gen spec: s and kappa cannot both be prescribed; sparse mode fixes the pattern and "
          "measures kappa_V, dense mode fixes kappa_V exactly");
    }
  }
  if (profile == EigenProfile::kScalar &&
      (lambda.real() > 0.0 || !std::isfinite(lambda.real()) || !std::isfinite(lambda.imag()))) {
    throw ParameterError("gen spec: lambda must be finite with Re(lambda) <= 0");
  }
}

std::string to_string(EigenProfile p) {
  switch (p) {
    case EigenProfile::kUniformHalfDisk: return "uniform-half-disk";
    case EigenProfile::kBoundary: return "boundary";
    case EigenProfile::kPureImaginary: return "pure-imaginary";
    case EigenProfile::kScalar: return "scalar";
  }
  return "?";
}

EigenProfile parse_profile(const std::string& s) {
  if (s == "uniform-half-disk" || s == "disk") return EigenProfile::kUniformHalfDisk;
  if (s == "boundary") return EigenProfile::kBoundary;
  if (s == "pure-imaginary" || s == "imaginary") return EigenProfile::kPureImaginary;
  if (s == "scalar") return EigenProfile::kScalar;
  throw ParameterError("gen spec: unknown profile '" + s + "'");
}

Complex parse_complex(const std::string& text) {
  const std::string s = trim(text);
  if (s.empty()) throw ParameterError("empty complex number");
  if (s.back() != 'i') return {parse_double(s, "complex"), 0.0};
  const std::string body = s.substr(0, s.size() - 1);
  // Find the sign that separates real and imaginary parts (not an exponent sign).
  std::size_t split = std::string::npos;
  for (std::size_t i = body.size(); i-- > 1;) {
    if ((body[i] == '+' || body[i] == '-') && body[i - 1] != 'e' && body[i - 1] != 'E') {
      split = i;
      break;
    }
  }
  if (split == std::string::npos) {
    if (body.empty() || body == "+" || body == "-") return {0.0, body == "-" ? -1.0 : 1.0};
    return {0.0, parse_double(body, "complex")};
  }
  const std::string im = body.substr(split);
  const double im_v = (im == "+" || im == "-") ? (im == "-" ? -1.0 : 1.0) : parse_double(im, "complex");
  return {parse_double(body.substr(0, split), "complex"), im_v};
}

GenSpec parse_gen_spec(const std::string& text, std::uint64_t default_seed) {
  GenSpec spec;
  spec.seed = default_seed;
  bool lambda_set = false;
  bool profile_set = false;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw ParameterError("gen spec: expected key=value, got '" + item + "'");
    const std::string key = trim(item.substr(0, eq));
    const std::string val = trim(item.substr(eq + 1));
    if (key == "N" || key == "n") {
      spec.n = static_cast<Eigen::Index>(parse_double(val, key));
    } else if (key == "kappa" || key == "kappa_V") {
      spec.kappa = parse_double(val, key);
    } else if (key == "profile") {
      spec.profile = parse_profile(val);
      profile_set = true;
    } else if (key == "lambda") {
      spec.lambda = parse_complex(val);
      lambda_set = true;
    } else if (key == "s") {
      spec.sparsity = static_cast<int>(parse_double(val, key));
    } else if (key == "b") {
      if (val == "zero") spec.b_mode = BMode::kZero;
      else if (val == "random") spec.b_mode = BMode::kRandom;
      else throw ParameterError("gen spec: b must be zero or random");
    } else if (key == "seed") {
      spec.seed = std::stoull(val);
    } else if (key == "normalize") {
      spec.normalize = val != "0" && val != "false";
    } else {
      throw ParameterError("gen spec: unknown key '" + key + "'");
    }
  }
  if (lambda_set && !profile_set) spec.profile = EigenProfile::kScalar;
  spec.validate();
  return spec;
}

std::string to_string(const GenSpec& spec) {
  std::ostringstream os;
  os.precision(17);
  os << "N=" << spec.n << ",kappa=" << spec.kappa << ",profile=" << to_string(spec.profile);
  if (spec.profile == EigenProfile::kScalar) {
    os << ",lambda=" << spec.lambda.real() << (spec.lambda.imag() < 0 ? "" : "+") << spec.lambda.imag() << "i";
  }
  if (spec.sparsity) os << ",s=" << *spec.sparsity;
  os << ",b=" << (spec.b_mode == BMode::kZero ? "zero" : "random") << ",seed=" << spec.seed
     << ",normalize=" << (spec.normalize ? 1 : 0);
  return os.str();
}

DenseMatrix random_unitary(Eigen::Index n, std::mt19937_64& rng) {
  DenseMatrix g(n, n);
  for (Eigen::Index c = 0; c < n; ++c) g.col(c) = random_complex_normal(n, rng);
  Eigen::HouseholderQR<DenseMatrix> qr(g);
  DenseMatrix q = qr.householderQ();
  const DenseMatrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index c = 0; c < n; ++c) {
    const Complex d = r(c, c);
    if (std::abs(d) > 0.0) q.col(c) *= d / std::abs(d);
  }
  return q;
}

Instance instance_from_matrix(const DenseMatrix& a, const Vector& b, const Vector& x_in) {
  if (a.rows() != a.cols() || a.rows() == 0) throw DimensionError("instance_from_matrix: A must be square");
  Eigen::ComplexEigenSolver<DenseMatrix> es(a);
  if (es.info() != Eigen::Success) throw DegeneracyError("instance_from_matrix: eigensolver failed");
  DenseMatrix v = es.eigenvectors();
  for (Eigen::Index c = 0; c < v.cols(); ++c) v.col(c).normalize();
  Eigen::PartialPivLU<DenseMatrix> lu(v);
  const DenseMatrix v_inv = lu.inverse();
  const double kappa = dense_condition_number(v);
  if (!std::isfinite(kappa) || kappa > 1e8) {
    throw DegeneracyError("instance_from_matrix: A is numerically defective (kappa_V = " +
                          std::to_string(kappa) + ")");
  }
  // Eigenvalues on the imaginary axis come back with rounding-level real parts.
  Vector eig = es.eigenvalues();
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  for (Eigen::Index i = 0; i < eig.size(); ++i) {
    if (eig[i].real() > 0.0 && eig[i].real() <= 1e-12 * scale) eig[i] = Complex(0.0, eig[i].imag());
  }
  return Instance::from_matrix(a, v, v_inv, eig, b, x_in, kappa);
}

Instance generate(const GenSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  return spec.sparsity ? generate_sparse(spec, rng) : generate_dense(spec, rng);
}

}  // namespace odeql
