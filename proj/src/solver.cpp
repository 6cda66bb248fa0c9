#include "odeql/solver.hpp"

namespace odeql {

BlockSolution::BlockSolution(TaylorParams params, DenseMatrix blocks)
    : params_(params), blocks_(std::move(blocks)) {
  if (blocks_.cols() != params_.blocks()) throw DimensionError("BlockSolution: wrong block count");
}

Vector BlockSolution::flat() const {
  return Eigen::Map<const Vector>(blocks_.data(), blocks_.size());
}

namespace {

void check_inputs(const SparseMatrix& a, const TaylorParams& params, const Vector& x_in,
                  const Vector& b, std::optional<double> norm_a) {
  params.validate();
  if (a.rows() != a.cols() || a.rows() == 0) throw DimensionError("A must be square and nonempty");
  if (x_in.size() != a.rows() || b.size() != a.rows()) {
    throw DimensionError("x_in and b must match the dimension of A");
  }
  check_step_norm(a, params.h, norm_a);
}

// One Taylor step: fills x_{i,1..k} from x_{i,0} and returns x_{i+1,0}.
template <class Sink>
Vector taylor_step(const SparseMatrix& a, const TaylorParams& params, const Vector& start,
                   const Vector& hb, Sink&& sink) {
  Vector next = start;
  Vector cur(start.size());
  Vector av(start.size());
  av.noalias() = a * start;
  cur = av * params.h + hb;
  sink(1, cur);
  next += cur;
  for (int j = 2; j <= params.k; ++j) {
    av.noalias() = a * cur;
    cur = av * (params.h / double(j));
    sink(j, cur);
    next += cur;
  }
  return next;
}

}  // namespace

BlockSolution forward_substitute(const SparseMatrix& a, const TaylorParams& params,
                                 const Vector& x_in, const Vector& b,
                                 std::optional<double> norm_a) {
  check_inputs(a, params, x_in, b, norm_a);
  const int k = params.k;
  DenseMatrix blocks(a.rows(), params.blocks());
  const Vector hb = params.h * b;
  blocks.col(0) = x_in;
  for (int i = 0; i < params.m; ++i) {
    const int base = i * (k + 1);
    const Vector start = blocks.col(base);
    blocks.col(base + k + 1) =
        taylor_step(a, params, start, hb, [&](int j, const Vector& x) { blocks.col(base + j) = x; });
  }
  const int tail = params.m * (k + 1);
  for (int j = 1; j <= params.p; ++j) blocks.col(tail + j) = blocks.col(tail);
  return BlockSolution(params, std::move(blocks));
}

double StepHistory::final_squared_norm_fraction() const {
  return (params.p + 1) * step_states.back().squaredNorm() / total_squared_norm;
}

StepHistory forward_history(const SparseMatrix& a, const TaylorParams& params, const Vector& x_in,
                            const Vector& b, std::optional<double> norm_a) {
  check_inputs(a, params, x_in, b, norm_a);
  StepHistory hist;
  hist.params = params;
  hist.step_states.reserve(params.m + 1);
  hist.step_states.push_back(x_in);
  const Vector hb = params.h * b;
  double total = 0.0;
  for (int i = 0; i < params.m; ++i) {
    total += hist.step_states.back().squaredNorm();
    Vector next = taylor_step(a, params, hist.step_states.back(), hb,
                              [&](int, const Vector& x) { total += x.squaredNorm(); });
    hist.step_states.push_back(std::move(next));
  }
  total += (params.p + 1) * hist.step_states.back().squaredNorm();
  hist.total_squared_norm = total;
  return hist;
}

Vector lower_solve(const SparseMatrix& c, const Vector& rhs) {
  if (c.rows() != c.cols() || rhs.size() != c.rows()) throw DimensionError("lower_solve: dimension mismatch");
  Vector x(rhs.size());
  for (Eigen::Index r = 0; r < c.outerSize(); ++r) {
    Complex acc = rhs[r];
    Complex diag(0.0, 0.0);
    for (SparseMatrix::InnerIterator it(c, r); it; ++it) {
      if (it.col() > r) throw IntegrityError("lower_solve: entry above the diagonal in row " + std::to_string(r));
      if (it.col() == r) {
        diag = it.value();
      } else {
        acc -= it.value() * x[it.col()];
      }
    }
    if (diag == Complex(0.0, 0.0)) throw IntegrityError("lower_solve: zero diagonal in row " + std::to_string(r));
    x[r] = acc / diag;
  }
  return x;
}

Vector generic_solve(const EncodedSystem& system) { return lower_solve(system.matrix, system.rhs); }

Vector adjoint_solve(const SparseMatrix& c, const Vector& y) {
  if (c.rows() != c.cols() || y.size() != c.rows()) throw DimensionError("adjoint_solve: dimension mismatch");
  Vector w = y;
  Vector z(y.size());
  for (Eigen::Index r = c.outerSize() - 1; r >= 0; --r) {
    Complex diag(0.0, 0.0);
    for (SparseMatrix::InnerIterator it(c, r); it; ++it) {
      if (it.col() > r) throw IntegrityError("adjoint_solve: entry above the diagonal in row " + std::to_string(r));
      if (it.col() == r) diag = it.value();
    }
    if (diag == Complex(0.0, 0.0)) throw IntegrityError("adjoint_solve: zero diagonal in row " + std::to_string(r));
    z[r] = w[r] / std::conj(diag);
    for (SparseMatrix::InnerIterator it(c, r); it; ++it) {
      if (it.col() < r) w[it.col()] -= std::conj(it.value()) * z[r];
    }
  }
  return z;
}

Vector adjoint_solve(const EncodedSystem& system, const Vector& y) { return adjoint_solve(system.matrix, y); }

double residual(const EncodedSystem& system, const Vector& x) {
  if (x.size() != system.rhs.size()) throw DimensionError("residual: dimension mismatch");
  const double rn = system.rhs.norm();
  if (rn == 0.0) throw DegeneracyError("residual: zero right-hand side");
  return (system.matrix * x - system.rhs).norm() / rn;
}

}  // namespace odeql
