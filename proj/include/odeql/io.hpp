#pragma once

#include <iosfwd>
#include <string>

#include "json.hpp"

#include "odeql/numerics.hpp"

namespace odeql {

/// Matrix Market coordinate format. Reads real, integer and complex fields
/// with general, symmetric, skew-symmetric or hermitian symmetry; duplicate
/// entries are summed. Writes "complex general" with %.17g, which round-trips
/// finite doubles exactly.
SparseMatrix read_matrix_market(std::istream& in);
SparseMatrix read_matrix_market(const std::string& path);
void write_matrix_market(std::ostream& out, const SparseMatrix& m);
void write_matrix_market(const std::string& path, const SparseMatrix& m);

/// One "re im" pair per line; '#' starts a comment.
Vector read_vector(std::istream& in);
Vector read_vector(const std::string& path);
void write_vector(std::ostream& out, const Vector& v);
void write_vector(const std::string& path, const Vector& v);

/// Complex values as [re, im]; matrices as row-major arrays of rows.
nlohmann::json to_json(const Vector& v);
nlohmann::json to_json(const DenseMatrix& m);
Vector vector_from_json(const nlohmann::json& j);
DenseMatrix matrix_from_json(const nlohmann::json& j);

/// {"schema": 1, "kind": "instance", A, V, V_inv, eigenvalues, b, x_in, kappa_V}
nlohmann::json instance_to_json(const Instance& inst);
/// Rebuilds through Instance::from_matrix, so every invariant is rechecked.
Instance instance_from_json(const nlohmann::json& j);

void write_json(const std::string& path, const nlohmann::json& j);
nlohmann::json read_json(const std::string& path);

inline constexpr int kReportSchema = 1;

}  // namespace odeql
