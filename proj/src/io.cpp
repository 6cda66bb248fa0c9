#include "odeql/io.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

namespace odeql {

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "' for reading");
  return in;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  return out;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

SparseMatrix read_matrix_market(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error("matrix market: empty input");
  std::istringstream head(line);
  std::string banner, object, format, field, symmetry;
  head >> banner >> object >> format >> field >> symmetry;
  if (banner != "%%MatrixMarket" || lower(object) != "matrix") {
    throw Error("matrix market: missing %%MatrixMarket matrix header");
  }
  format = lower(format);
  field = lower(field);
  symmetry = lower(symmetry);
  if (format != "coordinate") throw Error("matrix market: only coordinate format is supported");
  if (field != "real" && field != "integer" && field != "complex" && field != "pattern") {
    throw Error("matrix market: unsupported field '" + field + "'");
  }
  if (symmetry != "general" && symmetry != "symmetric" && symmetry != "skew-symmetric" &&
      symmetry != "hermitian") {
    throw Error("matrix market: unsupported symmetry '" + symmetry + "'");
  }
  if (symmetry == "hermitian" && field != "complex") throw Error("matrix market: hermitian needs complex field");

  do {
    if (!std::getline(in, line)) throw Error("matrix market: missing size line");
  } while (line.empty() || line[0] == '%');
  long rows = 0, cols = 0, entries = 0;
  {
    std::istringstream sz(line);
    if (!(sz >> rows >> cols >> entries) || rows < 0 || cols < 0 || entries < 0) {
      throw Error("matrix market: bad size line");
    }
  }
  if (symmetry != "general" && rows != cols) throw Error("matrix market: symmetric storage needs a square matrix");

  std::vector<Eigen::Triplet<Complex>> trip;
  trip.reserve(symmetry == "general" ? entries : 2 * entries);
  long read = 0;
  while (read < entries && std::getline(in, line)) {
    if (line.empty() || line[0] == '%') continue;
    std::istringstream es(line);
    long r = 0, c = 0;
    double re = 1.0, im = 0.0;
    if (!(es >> r >> c)) throw Error("matrix market: bad entry line " + std::to_string(read + 1));
    if (field != "pattern" && !(es >> re)) throw Error("matrix market: missing value");
    if (field == "complex" && !(es >> im)) throw Error("matrix market: missing imaginary part");
    if (r < 1 || r > rows || c < 1 || c > cols) throw Error("matrix market: index out of range");
    const Complex v(re, im);
    trip.emplace_back(r - 1, c - 1, v);
    if (r != c) {
      if (symmetry == "symmetric") trip.emplace_back(c - 1, r - 1, v);
      if (symmetry == "skew-symmetric") trip.emplace_back(c - 1, r - 1, -v);
      if (symmetry == "hermitian") trip.emplace_back(c - 1, r - 1, std::conj(v));
    }
    ++read;
  }
  if (read != entries) throw Error("matrix market: expected " + std::to_string(entries) + " entries");
  SparseMatrix m(rows, cols);
  m.setFromTriplets(trip.begin(), trip.end());
  m.makeCompressed();
  return m;
}

SparseMatrix read_matrix_market(const std::string& path) {
  auto in = open_in(path);
  return read_matrix_market(in);
}

void write_matrix_market(std::ostream& out, const SparseMatrix& m) {
  out << "%%MatrixMarket matrix coordinate complex general\n";
  out << m.rows() << ' ' << m.cols() << ' ' << m.nonZeros() << '\n';
  for (Eigen::Index r = 0; r < m.outerSize(); ++r) {
    for (SparseMatrix::InnerIterator it(m, r); it; ++it) {
      out << it.row() + 1 << ' ' << it.col() + 1 << ' ' << fmt(it.value().real()) << ' '
          << fmt(it.value().imag()) << '\n';
    }
  }
}

void write_matrix_market(const std::string& path, const SparseMatrix& m) {
  auto out = open_out(path);
  write_matrix_market(out, m);
}

Vector read_vector(std::istream& in) {
  std::vector<Complex> vals;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    std::istringstream ls(line);
    double re = 0.0, im = 0.0;
    if (!(ls >> re)) continue;
    if (!(ls >> im)) im = 0.0;
    std::string extra;
    if (ls >> extra) throw Error("vector file: trailing data on line " + std::to_string(lineno));
    vals.emplace_back(re, im);
  }
  Vector v(static_cast<Eigen::Index>(vals.size()));
  for (std::size_t i = 0; i < vals.size(); ++i) v[static_cast<Eigen::Index>(i)] = vals[i];
  return v;
}

Vector read_vector(const std::string& path) {
  auto in = open_in(path);
  return read_vector(in);
}

void write_vector(std::ostream& out, const Vector& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) out << fmt(v[i].real()) << ' ' << fmt(v[i].imag()) << '\n';
}

void write_vector(const std::string& path, const Vector& v) {
  auto out = open_out(path);
  write_vector(out, v);
}

nlohmann::json to_json(const Vector& v) {
  nlohmann::json j = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) j.push_back({v[i].real(), v[i].imag()});
  return j;
}

nlohmann::json to_json(const DenseMatrix& m) {
  nlohmann::json j = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) j.push_back(to_json(Vector(m.row(r).transpose())));
  return j;
}

Vector vector_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw Error("json: expected an array of [re, im] pairs");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    const auto& e = j[i];
    if (e.is_number()) {
      v[static_cast<Eigen::Index>(i)] = Complex(e.get<double>(), 0.0);
    } else if (e.is_array() && e.size() == 2) {
      v[static_cast<Eigen::Index>(i)] = Complex(e[0].get<double>(), e[1].get<double>());
    } else {
      throw Error("json: bad complex entry");
    }
  }
  return v;
}

DenseMatrix matrix_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.empty()) throw Error("json: expected a nonempty array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  const Eigen::Index cols = vector_from_json(j[0]).size();
  DenseMatrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const Vector row = vector_from_json(j[static_cast<std::size_t>(r)]);
    if (row.size() != cols) throw Error("json: ragged matrix");
    m.row(r) = row.transpose();
  }
  return m;
}

nlohmann::json instance_to_json(const Instance& inst) {
  return {{"schema", kReportSchema},
          {"kind", "instance"},
          {"N", inst.dim()},
          {"kappa_V", inst.kappa_v()},
          {"A", to_json(inst.a())},
          {"V", to_json(inst.v())},
          {"V_inv", to_json(inst.v_inv())},
          {"eigenvalues", to_json(inst.eigenvalues())},
          {"b", to_json(inst.b())},
          {"x_in", to_json(inst.x_in())}};
}

Instance instance_from_json(const nlohmann::json& j) {
  if (!j.contains("schema") || j.at("schema").get<int>() != kReportSchema) {
    throw Error("instance json: unsupported schema");
  }
  return Instance::from_matrix(matrix_from_json(j.at("A")), matrix_from_json(j.at("V")),
                               matrix_from_json(j.at("V_inv")), vector_from_json(j.at("eigenvalues")),
                               vector_from_json(j.at("b")), vector_from_json(j.at("x_in")),
                               j.at("kappa_V").get<double>());
}

void write_json(const std::string& path, const nlohmann::json& j) {
  auto out = open_out(path);
  out << j.dump(2) << '\n';
}

nlohmann::json read_json(const std::string& path) {
  auto in = open_in(path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error("json: cannot parse '" + path + "': " + e.what());
  }
}

}  // namespace odeql
